"""
Operator-space Lanczos iteration and Krylov-chain utilities.

Starting from a normalized operator 𝒪₀ the recursion

    A_n = ℒ𝒪_{n−1} − b_{n−1}𝒪_{n−2},   b_n = √(A_n|A_n),   𝒪_n = A_n / b_n

produces the Lanczos coefficients b₁..b_K, in whose basis the Liouvillian
ℒ = [H, ·] is tridiagonal. Two engines are provided: ``lanczos`` works on
operators directly (any backend), ``lanczos_spectral`` runs the identical
recursion on the merged frequency lines of the Hamiltonian eigenbasis and
returns coefficients only.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from krylov_agp.errors import DomainError, ResourceError
from krylov_agp.operators import (
    DenseOperator,
    OperatorSum,
    PauliSum,
    inner_product,
    linear_combination,
    liouvillian_apply,
)
from krylov_agp.oracle import Spectrum, spectral_lines

logger = logging.getLogger(__name__)

__all__ = [
    "KrylovData",
    "LanczosOptions",
    "MomentSequence",
    "PsiTable",
    "TerminationReason",
    "krylov_dimension",
    "lanczos",
    "lanczos_from_moments",
    "lanczos_spectral",
    "moment_bounds",
    "moments_from_lanczos",
    "propagate_psi",
]


class TerminationReason(Enum):
    """Why the Lanczos iteration stopped."""

    CLOSED = "closed"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class LanczosOptions:
    """
    Lanczos controls.

    ``keep_basis`` stores 𝒪₀..𝒪_K and enables full two-pass Gram-Schmidt when
    ``reorth`` is set; without it only the two previous vectors are retained
    and reorthogonalized against. ``max_basis_entries`` bounds the stored
    basis in complex entries (matrix elements or Pauli terms).
    """

    max_steps: int | None = None
    tol: float = 1e-8
    keep_basis: bool = True
    reorth: bool = True
    max_basis_entries: int = 50_000_000


@dataclass(frozen=True)
class KrylovData:
    """Lanczos coefficients, optionally the basis, and termination metadata."""

    b: np.ndarray
    basis: tuple[OperatorSum, ...] | None
    terminated: TerminationReason
    hilbert_dim: int

    @property
    def k_dim(self) -> int:
        """Krylov dimension K + 1."""
        return int(self.b.size) + 1

    @property
    def odd_count(self) -> int:
        """Number of odd basis operators 𝒪₁, 𝒪₃, ...; this is M + 1."""
        return (int(self.b.size) + 1) // 2

    @property
    def m_index(self) -> int:
        """Largest AGP index M, so the expansion runs over k = 0..M."""
        return self.odd_count - 1

    @property
    def dimension_bound(self) -> int:
        d = self.hilbert_dim
        return d * d - d + 1


def _entries(op: OperatorSum) -> int:
    if isinstance(op, PauliSum):
        return len(op)
    assert isinstance(op, DenseOperator)
    return op.dim * op.dim


def _orthogonalize(a: OperatorSum, vectors: Sequence[OperatorSum]) -> OperatorSum:
    # Two passes of classical Gram-Schmidt.
    for _ in range(2):
        overlaps = [inner_product(q, a) for q in vectors]
        a = a - linear_combination(list(vectors), overlaps)
    return a


def lanczos(h: OperatorSum, o0: OperatorSum, opts: LanczosOptions | None = None) -> KrylovData:
    """
    Run the operator Lanczos recursion.

    Args:
        h: Hermitian Hamiltonian
        o0: seed operator with (o0|o0) = 1
        opts: iteration controls

    Returns:
        KrylovData; ``basis`` is None unless ``opts.keep_basis``

    Raises:
        DomainError: o0 not normalized or h not Hermitian
        ResourceError: the stored basis outgrows ``opts.max_basis_entries``
    """
    opts = opts or LanczosOptions()
    norm_sq = inner_product(o0, o0).real
    if abs(norm_sq - 1.0) > 1e-10:
        raise DomainError(f"seed operator must be normalized, (o0|o0) = {norm_sq:.12g}")
    if not h.is_hermitian(1e-10):
        raise DomainError("Hamiltonian is not Hermitian")

    dim = h.dim
    bound = dim * dim - dim
    max_steps = bound if opts.max_steps is None else min(opts.max_steps, bound)
    basis: list[OperatorSum] = [o0]
    stored = _entries(o0)
    prev: OperatorSum | None = None
    cur = o0
    b: list[float] = []
    b_max = 0.0
    reason = TerminationReason.MAX_STEPS

    for n in range(1, max_steps + 1):
        a = liouvillian_apply(h, cur)
        if prev is not None:
            a = a - b[-1] * prev
        if opts.reorth:
            window = basis if opts.keep_basis else [v for v in (prev, cur) if v is not None]
            a = _orthogonalize(a, window)
        b_n = a.norm()
        if b_n <= opts.tol * max(1.0, b_max):
            reason = TerminationReason.CLOSED
            break
        b.append(b_n)
        b_max = max(b_max, b_n)
        prev, cur = cur, a / b_n
        if opts.keep_basis:
            stored += _entries(cur)
            if stored > opts.max_basis_entries:
                raise ResourceError(
                    f"Krylov basis exceeds {opts.max_basis_entries} entries at n={n}; "
                    "use keep_basis=False or the spectral engine"
                )
            basis.append(cur)
        if n % 100 == 0:
            logger.debug(f"Lanczos step {n}: b_n = {b_n:.6g}")

    data = KrylovData(
        b=_frozen(b),
        basis=tuple(basis) if opts.keep_basis else None,
        terminated=reason,
        hilbert_dim=dim,
    )
    _check_dimension(data)
    logger.info(f"Lanczos {reason.value} at Krylov dimension {data.k_dim}")
    return data


def lanczos_spectral(
    spectrum: Spectrum, o0: OperatorSum, opts: LanczosOptions | None = None
) -> KrylovData:
    """
    Lanczos coefficients from the eigenbasis of H.

    In the eigenbasis ℒ multiplies the component at frequency ω = E_m − E_n
    by ω, so after merging equal frequencies the recursion runs on a real
    vector of length equal to the number of distinct weighted frequencies.
    The basis is not returned.
    """
    opts = opts or LanczosOptions()
    omega, weights = spectral_lines(spectrum, o0)
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-10:
        raise DomainError(f"seed operator must be normalized, (o0|o0) = {total:.12g}")
    bound = spectrum.dim * spectrum.dim - spectrum.dim
    max_steps = bound if opts.max_steps is None else min(opts.max_steps, bound)
    exhausted = max_steps >= omega.size - 1
    max_steps = min(max_steps, omega.size - 1)
    if (max_steps + 1) * omega.size > opts.max_basis_entries:
        raise ResourceError(
            f"{omega.size} frequency lines over {max_steps + 1} steps exceed "
            f"{opts.max_basis_entries} entries; set max_steps"
        )

    vectors = np.zeros((max_steps + 1, omega.size))
    vectors[0] = np.sqrt(weights / total)
    b: list[float] = []
    b_max = 0.0
    reason = TerminationReason.CLOSED if exhausted else TerminationReason.MAX_STEPS
    for n in range(1, max_steps + 1):
        a = omega * vectors[n - 1]
        if n >= 2:
            a -= b[-1] * vectors[n - 2]
        history = vectors[:n]
        for _ in range(2):
            a -= history.T @ (history @ a)
        b_n = float(np.linalg.norm(a))
        if b_n <= opts.tol * max(1.0, b_max):
            reason = TerminationReason.CLOSED
            break
        b.append(b_n)
        b_max = max(b_max, b_n)
        vectors[n] = a / b_n

    data = KrylovData(b=_frozen(b), basis=None, terminated=reason, hilbert_dim=spectrum.dim)
    _check_dimension(data)
    logger.info(f"Spectral Lanczos {reason.value} at Krylov dimension {data.k_dim}")
    return data


def krylov_dimension(spectrum: Spectrum, o0: OperatorSum) -> int:
    """
    Exact Krylov dimension: the number of distinct frequencies carrying weight.

    This is the rank of the Krylov space in exact arithmetic. A Lanczos run
    may close earlier when lines with tiny weight fall below its tolerance.
    """
    omega, _ = spectral_lines(spectrum, o0)
    return int(omega.size)


def _frozen(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def _check_dimension(data: KrylovData) -> None:
    if data.k_dim > data.dimension_bound:
        raise DomainError(
            f"Krylov dimension {data.k_dim} exceeds the bound {data.dimension_bound}"
        )


@dataclass(frozen=True)
class PsiTable:
    """Krylov-chain amplitudes ψ_n(t), one row per time."""

    t: np.ndarray
    psi: np.ndarray
    max_norm_drift: float

    @property
    def autocorrelation(self) -> np.ndarray:
        return self.psi[:, 0]


def _chain_rhs(b: np.ndarray, psi: np.ndarray) -> np.ndarray:
    # ∂ψ_n = b_n ψ_{n−1} − b_{n+1} ψ_{n+1}
    out = np.zeros_like(psi)
    out[1:] += b * psi[:-1]
    out[:-1] -= b * psi[1:]
    return out


def propagate_psi(b: Sequence[float], t_grid: Sequence[float]) -> PsiTable:
    """
    Integrate the Krylov-chain Schrödinger equation with ``solve_ivp`` (DOP853).

    ψ_n(0) = δ_{n0}; the solution is sampled on ``t_grid``.

    Raises:
        DomainError: empty ``b``, a time grid that does not start at 0 and increase,
            or an integrator failure
    """
    coeffs = np.asarray(b, dtype=np.float64)
    if coeffs.size == 0:
        raise DomainError("propagate_psi needs at least one Lanczos coefficient")
    t = np.asarray(t_grid, dtype=np.float64)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must start at 0 and be strictly increasing")

    psi0 = np.zeros(coeffs.size + 1)
    psi0[0] = 1.0
    if t.size == 1:
        rows = psi0[np.newaxis, :]
    else:
        res = solve_ivp(
            fun=lambda _t, y: _chain_rhs(coeffs, y),
            t_span=(0.0, float(t[-1])),
            y0=psi0,
            method="DOP853",
            t_eval=t,
            rtol=1e-12,
            atol=1e-12,
        )
        if not res.success:
            raise DomainError(f"chain integration failed: {res.message}")
        rows = res.y.T

    drift = float(np.max(np.abs(np.sum(rows**2, axis=1) - 1.0)))
    if drift > 1e-8:
        logger.warning(f"ψ normalization drift {drift:.3g} exceeds 1e-8")
    return PsiTable(t=t, psi=rows, max_norm_drift=drift)


@dataclass(frozen=True)
class MomentSequence:
    """Even moments m₀ = 1, m₂, m₄, ... of an autocorrelation function."""

    moments: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.moments or abs(self.moments[0] - 1.0) > 1e-12:
            raise DomainError("moment sequence must start with m0 = 1")

    @property
    def order(self) -> int:
        """Largest n with m_{2n} available."""
        return len(self.moments) - 1

    def even(self, n: int) -> float:
        """m_{2n}."""
        return self.moments[n]

    def hankel_minors(self) -> list[float]:
        """Leading principal minors of the moment matrix [μ_{i+j}], odd moments zero."""
        full = np.zeros(2 * self.order + 1)
        full[::2] = self.moments
        minors = []
        for size in range(1, self.order + 2):
            hankel = np.array([[full[i + j] for j in range(size)] for i in range(size)])
            minors.append(float(np.linalg.det(hankel)))
        return minors


def moments_from_lanczos(b: Sequence[float], order: int, closed: bool = False) -> MomentSequence:
    """
    Moments m₀..m_{2·order} as sums over Dyck paths.

    The sum of Π b² over Dyck paths of length 2n equals (J^{2n})₀₀ for the
    symmetric tridiagonal J with off-diagonal b, evaluated as ‖Jⁿe₀‖².

    Args:
        b: Lanczos coefficients b₁, b₂, ...
        order: number of nonzero even moments requested
        closed: ``b`` is a terminated chain, so any order is exact

    Raises:
        DomainError: ``order`` needs coefficients beyond ``b`` on an open chain
    """
    coeffs = np.asarray(b, dtype=np.float64)
    if order < 0:
        raise DomainError("order must be non-negative")
    if order > coeffs.size and not closed:
        raise DomainError(f"order {order} needs {order} coefficients, only {coeffs.size} given")
    v = np.zeros(coeffs.size + 1)
    v[0] = 1.0
    moments = [1.0]
    for _ in range(order):
        nxt = np.zeros_like(v)
        nxt[1:] += coeffs * v[:-1]
        nxt[:-1] += coeffs * v[1:]
        v = nxt
        moments.append(float(v @ v))
    return MomentSequence(tuple(moments))


def moment_bounds(b: Sequence[float], n: int) -> tuple[float, float]:
    """b₁²…b_n² ≤ m_{2n} ≤ max(b_k²)ⁿ·C_n with C_n the n-th Catalan number."""
    coeffs = np.asarray(b, dtype=np.float64)[:n]
    if coeffs.size < n:
        raise DomainError(f"need {n} coefficients, got {coeffs.size}")
    catalan = math.comb(2 * n, n) // (n + 1)
    lower = float(np.prod(coeffs**2))
    upper = float(np.max(coeffs**2, initial=0.0)) ** n * catalan
    return lower, upper


def lanczos_from_moments(m: MomentSequence | Sequence[float]) -> np.ndarray:
    """
    Recover b₁..b_K from m₀..m_{2K} by the recursive moment scheme.

    M⁽ⁿ⁾_k = M⁽ⁿ⁻¹⁾_k / b²_{n−1} − M⁽ⁿ⁻²⁾_{k−1} / b²_{n−2}, with M⁽⁰⁾_k = m_{2k},
    M⁽⁻¹⁾ = 0, b₀ = b₋₁ = 1, and b_n² = M⁽ⁿ⁾_n. A vanishing b_n² ends the
    chain.

    Raises:
        DomainError: the sequence is not realizable (some b_n² < 0)
    """
    seq = m if isinstance(m, MomentSequence) else MomentSequence(tuple(float(v) for v in m))
    values = np.asarray(seq.moments, dtype=np.float64)
    order = seq.order
    scale = max(1.0, float(np.max(np.abs(values))))
    prev2 = np.zeros(order + 1)
    prev1 = values.copy()
    b_sq_prev2, b_sq_prev1 = 1.0, 1.0
    out: list[float] = []
    for n in range(1, order + 1):
        cur = np.zeros(order + 1)
        cur[n:] = prev1[n:] / b_sq_prev1 - prev2[n - 1 : order] / b_sq_prev2
        b_sq = float(cur[n])
        if not math.isfinite(b_sq) or b_sq < -1e-12 * scale:
            raise DomainError(f"moment sequence is not realizable: b_{n}^2 = {b_sq:.6g}")
        if b_sq <= 1e-14 * scale:
            break
        out.append(math.sqrt(b_sq))
        prev2, prev1 = prev1, cur
        b_sq_prev2, b_sq_prev1 = b_sq_prev1, b_sq
    return np.asarray(out)
