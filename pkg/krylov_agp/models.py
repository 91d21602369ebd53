"""
Hamiltonians and deformation operators.

Every model is built by name from a parameter mapping; names and parameter
keys are part of the command-line contract (see ``MODEL_PARAMETERS``).
Chains use the sparse Pauli backend, spin-S models the dense backend.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from krylov_agp.errors import DomainError, ModelError
from krylov_agp.operators import DenseOperator, OperatorSum, PauliString, PauliSum

logger = logging.getLogger(__name__)

__all__ = [
    "CHAOTIC_HZ",
    "MODEL_PARAMETERS",
    "ModelInstance",
    "build_model",
    "default_regulator",
    "normalized_deformation",
    "spin_operators",
]

CHAOTIC_HZ = (math.sqrt(5.0) + 1.0) / 4.0


@dataclass(frozen=True)
class ModelInstance:
    """
    A built Hamiltonian together with its deformation ∂λH.

    ``deformation_parameter`` names the swept parameter and
    ``parameter_scale`` is dλ/d(parameter); it differs from 1 only for LMG,
    where the sweep runs over J while λ = 2J.
    """

    name: str
    hamiltonian: OperatorSum
    deformation: OperatorSum
    parameters: Mapping[str, float]
    hilbert_dim: int
    default_mu: float
    size: int
    deformation_parameter: str
    parameter_scale: float = 1.0
    metadata: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class _ModelSpec:
    builder: Callable[[dict[str, float]], tuple[OperatorSum, OperatorSum, int, float]]
    required: tuple[str, ...]
    defaults: Mapping[str, float]
    deformation_parameter: str
    parameter_scale: float = 1.0
    integer_keys: tuple[str, ...] = ()


def chain_regulator(size: int) -> float:
    """μ = L·2^{−L}."""
    return size * 2.0**-size


def _pauli_sum(n_sites: int, terms: list[tuple[float, str, int]]) -> PauliSum:
    """Σ coeff·σ^op_site from ``(coeff, op, site)`` triples, products given as e.g. ``"XX"``."""
    out = []
    for coeff, ops, site in terms:
        string = PauliString.identity(n_sites)
        for offset, op in enumerate(ops):
            piece = PauliString.single(op, (site + offset) % n_sites, n_sites)
            string = PauliString(
                string.x_mask ^ piece.x_mask, string.z_mask ^ piece.z_mask, n_sites
            )
        out.append((coeff, string))
    return PauliSum.from_terms(out, n_sites)


def _bonds(n_sites: int, ops: str, coeff: float, periodic: bool) -> list[tuple[float, str, int]]:
    last = n_sites if periodic else n_sites - 1
    return [(coeff, ops, i) for i in range(last)]


def _fields(n_sites: int, op: str, coeff: float) -> list[tuple[float, str, int]]:
    return [(coeff, op, i) for i in range(n_sites)]


def _two_level(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    h = _pauli_sum(1, [(p["lambda"], "Z", 0), (p["delta"], "X", 0)])
    return h, _pauli_sum(1, [(1.0, "Z", 0)]), 1, 0.0


def _two_qubit(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    eps, lam = p["epsilon"], p["lambda"]
    field_strength = -eps * (1.0 - lam)
    h = _pauli_sum(
        2,
        [(-1.0, "XX", 0), (-1.0, "ZZ", 0), (field_strength, "Z", 0), (field_strength, "Z", 1)],
    )
    return h, _pauli_sum(2, [(eps, "Z", 0), (eps, "Z", 1)]), 2, 0.0


def _four_body(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    lam = p["lambda"]
    h = _pauli_sum(4, _bonds(4, "XX", 1.0, periodic=True) + [(lam, "Z", 1), (lam, "Z", 2)])
    return h, _pauli_sum(4, [(1.0, "Z", 1), (1.0, "Z", 2)]), 4, chain_regulator(4)


def _ising_periodic(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    n = int(p["L"])
    h = _pauli_sum(n, _bonds(n, "ZZ", 1.0, periodic=True) + _fields(n, "X", p["h"]))
    return h, _pauli_sum(n, _fields(n, "X", 1.0)), n, chain_regulator(n)


def _chaotic_ising(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    n = int(p["L"])
    terms = _bonds(n, "ZZ", 1.0, periodic=True) + _fields(n, "X", p["hx"])
    h = _pauli_sum(n, terms + _fields(n, "Z", p["hz"]))
    return h, _pauli_sum(n, _fields(n, "X", 1.0)), n, chain_regulator(n)


def _xxz_open(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    n = int(p["L"])
    terms = _bonds(n, "XX", 1.0, periodic=False) + _bonds(n, "YY", 1.0, periodic=False)
    h = _pauli_sum(n, terms + _bonds(n, "ZZ", p["delta"], periodic=False))
    return h, _pauli_sum(n, _bonds(n, "ZZ", 1.0, periodic=False)), n, chain_regulator(n)


def spin_operators(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Spin-S matrices (S_x, S_y, S_z) in the basis m = S, S−1, ..., −S.

    Raises:
        ModelError: S is not a positive integer or half-integer
    """
    twice = 2.0 * spin
    if spin <= 0 or abs(twice - round(twice)) > 1e-12:
        raise ModelError(f"spin must be a positive integer or half-integer, got {spin}")
    m = spin - np.arange(int(round(twice)) + 1)
    # ⟨m+1|S₊|m⟩ = √(S(S+1) − m(m+1)), placed on the superdiagonal.
    raising = np.diag(np.sqrt(spin * (spin + 1.0) - m[1:] * (m[1:] + 1.0)), k=1)
    sx = (raising + raising.T) / 2.0
    sy = (raising - raising.T) / 2.0j
    sz = np.diag(m)
    return sx, sy, sz


def _lmg(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    spin = p["S"]
    sx, _, sz = spin_operators(spin)
    x_hat, z_hat = sx / spin, sz / spin
    z_sq = z_hat @ z_hat
    h = DenseOperator(x_hat + 2.0 * p["J"] * z_sq)
    size = int(round(2 * spin)) + 1
    return h, DenseOperator(z_sq), size, chain_regulator(size)


def _su2_ladder(p: dict[str, float]) -> tuple[OperatorSum, OperatorSum, int, float]:
    sx, _, _ = spin_operators(p["S"])
    ladder = 2.0 * sx  # J₊ + J₋
    size = int(round(2 * p["S"])) + 1
    return DenseOperator(p["alpha"] * ladder), DenseOperator(ladder), size, chain_regulator(size)


_MODELS: dict[str, _ModelSpec] = {
    "two_level": _ModelSpec(_two_level, ("lambda", "delta"), {}, "lambda"),
    "two_qubit": _ModelSpec(_two_qubit, ("epsilon", "lambda"), {}, "lambda"),
    "four_body": _ModelSpec(_four_body, ("lambda",), {}, "lambda"),
    "ising_periodic": _ModelSpec(_ising_periodic, ("L", "h"), {}, "h", integer_keys=("L",)),
    "chaotic_ising": _ModelSpec(
        _chaotic_ising, ("L", "hx"), {"hz": CHAOTIC_HZ}, "hx", integer_keys=("L",)
    ),
    "xxz_open": _ModelSpec(_xxz_open, ("L", "delta"), {}, "delta", integer_keys=("L",)),
    "lmg": _ModelSpec(_lmg, ("S", "J"), {}, "J", parameter_scale=2.0),
    "su2_ladder": _ModelSpec(_su2_ladder, ("S", "alpha"), {}, "alpha"),
}

MODEL_PARAMETERS: dict[str, tuple[str, ...]] = {
    name: spec.required + tuple(k for k in spec.defaults if k not in spec.required)
    for name, spec in _MODELS.items()
}


def _validate(name: str, spec: _ModelSpec, params: Mapping[str, Any]) -> dict[str, float]:
    allowed = set(spec.required) | set(spec.defaults)
    unknown = sorted(set(params) - allowed)
    if unknown:
        raise ModelError(f"{name}: unknown parameter(s) {unknown}; expected {sorted(allowed)}")
    missing = [k for k in spec.required if k not in params]
    if missing:
        raise ModelError(f"{name}: missing parameter(s) {missing}")
    resolved: dict[str, float] = dict(spec.defaults)
    for key, raw in params.items():
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ModelError(f"{name}: parameter {key}={raw!r} is not a number") from None
        if not math.isfinite(value):
            raise ModelError(f"{name}: parameter {key} must be finite")
        resolved[key] = value
    for key in spec.integer_keys:
        if resolved[key] != int(resolved[key]) or resolved[key] < 2:
            raise ModelError(f"{name}: {key} must be an integer >= 2, got {resolved[key]}")
        resolved[key] = int(resolved[key])
    if "S" in resolved and resolved["S"] < (1.0 if name == "lmg" else 0.5):
        raise ModelError(f"{name}: spin S={resolved['S']} too small")
    return resolved


def build_model(name: str, params: Mapping[str, Any]) -> ModelInstance:
    """
    Build a model by name.

    Args:
        name: one of ``MODEL_PARAMETERS``
        params: coupling values; missing optional keys take their defaults

    Raises:
        ModelError: unknown name, missing or invalid parameters
    """
    try:
        spec = _MODELS[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; choose from {sorted(_MODELS)}") from None
    resolved = _validate(name, spec, params)
    hamiltonian, deformation, size, mu = spec.builder(resolved)
    logger.debug(f"Built {name} {resolved} (dim {hamiltonian.dim})")
    return ModelInstance(
        name=name,
        hamiltonian=hamiltonian,
        deformation=deformation,
        parameters=resolved,
        hilbert_dim=hamiltonian.dim,
        default_mu=mu,
        size=size,
        deformation_parameter=spec.deformation_parameter,
        parameter_scale=spec.parameter_scale,
    )


def default_regulator(m: ModelInstance) -> float:
    """L·2^{−L} for chains and spin models, 0 for the two-level and two-qubit cases."""
    return m.default_mu


def normalized_deformation(m: ModelInstance) -> tuple[OperatorSum, float]:
    """
    Return (∂λH/‖∂λH‖, ‖∂λH‖).

    Raises:
        DomainError: the deformation operator vanishes
    """
    norm = m.deformation.norm()
    if norm <= 1e-14:
        raise DomainError(f"{m.name}: deformation operator is zero")
    return m.deformation / norm, norm
