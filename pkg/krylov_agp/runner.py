"""
Experiment runners behind the command-line subcommands.

Each runner takes a validated ``ExperimentConfig`` and returns a ``Table``
whose rows are in a fixed order, so writing the same config twice gives
byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from krylov_agp.agp import assemble_agp, gauge_residual, solve_alpha, truncation_scan
from krylov_agp.autocorr import (
    AutocorrSpec,
    agp_norm_from_autocorr,
    check_norm_bound,
    scaling_study,
    spec_from_operator,
)
from krylov_agp.config import FULL, ExperimentConfig, ModelSpec, params_hash
from krylov_agp.errors import ResourceError
from krylov_agp.krylov import (
    KrylovData,
    LanczosOptions,
    TerminationReason,
    krylov_dimension,
    lanczos,
    lanczos_spectral,
)
from krylov_agp.models import ModelInstance, build_model, default_regulator, normalized_deformation
from krylov_agp.operators import DenseOperator, OperatorSum, PauliSum
from krylov_agp.oracle import Spectrum, agp_norm_exact, eigendecompose
from krylov_agp.sweep import run_sweep

logger = logging.getLogger(__name__)

__all__ = [
    "OPERATOR_ENGINE_BUDGET",
    "REPORT_MAX_ORDER",
    "RunResult",
    "Table",
    "choose_engine",
    "compute_krylov",
    "format_value",
    "run_agp_sweep",
    "run_lanczos",
    "run_scaling",
    "run_truncation_report",
    "write_table",
]

OPERATOR_ENGINE_BUDGET = 2_000_000
GAUGE_RESIDUAL_MAX_DIM = 256
REPORT_MAX_ORDER = 8
REPORT_AGREEMENT = 0.05
BASIS_AGREEMENT = 1e-6


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple[Any, ...]] = field(default_factory=list)

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, row, strict=True)) for row in self.rows]


@dataclass(frozen=True)
class RunResult:
    table: Table
    interrupted: bool = False
    summary: Any = None


def format_value(value: Any) -> str:
    """17 significant digits for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render_table(table: Table, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(table.records(), indent=2) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_table(table: Table, out: str | None, fmt: str) -> None:
    """Write to ``out``, or stdout when ``out`` is None or ``-``."""
    _write_text(render_table(table, fmt), out)


def _write_text(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    assert out is not None
    Path(out).write_text(text, encoding="utf-8")
    logger.info(f"Wrote {out}")


def _resolve_mu(cfg: ExperimentConfig, model: ModelInstance) -> float:
    return default_regulator(model) if cfg.mu == "auto" else float(cfg.mu)


def _spectrum(model: ModelInstance, cfg: ExperimentConfig) -> Spectrum:
    h = model.hamiltonian
    if isinstance(h, PauliSum) and h.n_sites > cfg.dense_cap_sites:
        raise ResourceError(
            f"{model.name}: {h.n_sites} sites exceed dense cap {cfg.dense_cap_sites}"
        )
    return eigendecompose(h, cap_dim=cfg.dense_cap_dim)


def choose_engine(h: OperatorSum, cfg: ExperimentConfig, max_steps: int | None = None) -> str:
    """``operator`` while k_max·dim² stays within the entry budget, else ``spectral``."""
    if cfg.lanczos.engine != "auto":
        return cfg.lanczos.engine
    dim_sq = h.dim * h.dim
    steps = max_steps or cfg.lanczos.max_steps or (dim_sq - h.dim)
    return "operator" if (steps + 1) * dim_sq <= OPERATOR_ENGINE_BUDGET else "spectral"


def compute_krylov(
    model: ModelInstance,
    o0: OperatorSum,
    cfg: ExperimentConfig,
    max_steps: int | None = None,
    spectrum: Spectrum | None = None,
) -> KrylovData:
    """
    Run the chosen Lanczos engine; the operator engine keeps its basis.

    Dense models take their coefficients from the eigenbasis, where
    frequencies merge the way the exact oracle treats them. The operator
    engine then only supplies the basis up to that closure.
    """
    steps = max_steps if max_steps is not None else cfg.lanczos.max_steps
    engine = choose_engine(model.hamiltonian, cfg, steps)
    logger.debug(f"{model.name}: {engine} Lanczos engine")
    if engine == "operator" and not isinstance(model.hamiltonian, DenseOperator):
        opts = LanczosOptions(max_steps=steps, tol=cfg.lanczos.tol, keep_basis=True)
        return lanczos(model.hamiltonian, o0, opts)
    opts = LanczosOptions(max_steps=steps, tol=cfg.lanczos.tol, keep_basis=False)
    spectral = lanczos_spectral(spectrum or _spectrum(model, cfg), o0, opts)
    if engine == "spectral":
        return spectral
    return _attach_basis(model, o0, spectral, cfg)


def _attach_basis(
    model: ModelInstance, o0: OperatorSum, spectral: KrylovData, cfg: ExperimentConfig
) -> KrylovData:
    opts = LanczosOptions(max_steps=int(spectral.b.size), tol=cfg.lanczos.tol, keep_basis=True)
    operator = lanczos(model.hamiltonian, o0, opts)
    if operator.b.size != spectral.b.size or not np.allclose(
        operator.b, spectral.b, rtol=BASIS_AGREEMENT, atol=0.0
    ):
        logger.warning(f"{model.name}: operator basis departs from the eigenbasis chain; dropped")
        return spectral
    return replace(spectral, basis=operator.basis)


def _build(spec: ModelSpec, overrides: dict[str, float] | None = None) -> ModelInstance:
    return build_model(spec.name, {**spec.params, **(overrides or {})})


def run_lanczos(cfg: ExperimentConfig) -> RunResult:
    """Table of b_n: columns n, b_n, model, params_hash."""
    assert cfg.model is not None
    model = _build(cfg.model)
    o0, _ = normalized_deformation(model)
    data = compute_krylov(model, o0, cfg)
    digest = params_hash(cfg.model.name, model.parameters)
    table = Table(columns=("n", "b_n", "model", "params_hash"))
    for n, b_n in enumerate(data.b, start=1):
        table.rows.append((n, float(b_n), model.name, digest))
    logger.info(f"{model.name}: {data.b.size} coefficients, {data.terminated.value}")
    return RunResult(table=table)


AGP_COLUMNS = (
    "sweep_value",
    "mu",
    "method",
    "truncation",
    "norm",
    "norm_over_L",
    "gauge_residual",
    "note",
)


def _sweep_point(cfg: ExperimentConfig, value: float | None) -> list[tuple[Any, ...]]:
    """All rows for one sweep value, in configuration order."""
    assert cfg.model is not None
    overrides = {} if value is None or cfg.sweep is None else {cfg.sweep.parameter: value}
    model = _build(cfg.model, overrides)
    if value is None:
        value = float(model.parameters[model.deformation_parameter])
    o0, d_norm = normalized_deformation(model)
    scale = 1.0 if cfg.normalized else d_norm**2
    mu = _resolve_mu(cfg, model)
    rows: list[tuple[Any, ...]] = []

    def emit(
        method: str, truncation: Any, norm: float, residual: float | None, note: str = ""
    ) -> None:
        scaled = norm * scale
        rows.append((value, mu, method, truncation, scaled, scaled / model.size, residual, note))

    if "krylov" in cfg.methods:
        data = compute_krylov(model, o0, cfg)
        previous: float | None = None
        for order in cfg.truncate:
            full = order == FULL or int(order) >= data.m_index
            note = "exceeds_M" if order != FULL and int(order) > data.m_index else ""
            sol = solve_alpha(data.b, mu, None if full else int(order))
            check_norm_bound(sol.norm_sq, data.odd_count, mu)
            if order != FULL:
                if previous is not None and sol.norm_sq < previous * (1 - 1e-12):
                    note = "non_monotone"
                    logger.warning(f"{model.name} at {value}: norm drops at N={order}")
                previous = sol.norm_sq
            residual = None
            if full and data.basis is not None and model.hilbert_dim <= GAUGE_RESIDUAL_MAX_DIM:
                a_op = assemble_agp(data, sol)
                residual = gauge_residual(model.hamiltonian, o0, a_op, mu)
            emit("krylov", order, sol.norm_sq, residual, note)
    if "exact" in cfg.methods or "autocorr" in cfg.methods:
        spectrum = _spectrum(model, cfg)
        # M + 1 from the exact Krylov dimension K + 1.
        odd_count = krylov_dimension(spectrum, o0) // 2
        if "exact" in cfg.methods:
            norm = agp_norm_exact(spectrum, o0, mu)
            check_norm_bound(norm, odd_count, mu)
            emit("exact", "exact", norm, None)
        if "autocorr" in cfg.methods:
            tabulated = spec_from_operator(spectrum, o0)
            norm = agp_norm_from_autocorr(tabulated, mu, cfg.quad)
            check_norm_bound(norm, odd_count, mu)
            emit("autocorr", "exact", norm, None)
    return rows


def run_agp_sweep(cfg: ExperimentConfig) -> RunResult:
    """
    Norm table over the sweep axis (a single point for the ``agp`` command).

    Rows whose truncation exceeds M are marked ``exceeds_M`` and carry the
    full solution. An interrupted sweep returns the completed prefix.
    """
    values: list[float | None] = list(cfg.sweep.values()) if cfg.sweep else [None]
    outcome = run_sweep(
        values,
        lambda v: _sweep_point(cfg, v),
        threads=cfg.threads,
        label=f"{cfg.model.name if cfg.model else 'agp'} sweep",
    )
    table = Table(columns=AGP_COLUMNS)
    for rows in outcome.completed_prefix:
        table.rows.extend(rows)
    return RunResult(table=table, interrupted=outcome.interrupted)


def run_scaling(cfg: ExperimentConfig) -> RunResult:
    """Columns L, mu, norm, norm_over_L, method, fitted_slope."""
    assert cfg.family is not None
    params = dict(cfg.family_params)
    if cfg.family in ("su2_cos", "ising_critical"):
        params.setdefault("L", float(min(cfg.sizes)))
    if cfg.family == "su2_cos":
        params.setdefault("alpha", 1.0)
    spec = AutocorrSpec(cfg.family, params)
    study = scaling_study(spec, cfg.sizes, method=cfg.scaling_method, quad=cfg.quad)
    table = Table(columns=("L", "mu", "norm", "norm_over_L", "method", "fitted_slope"))
    for row in study.rows:
        table.rows.append((row.size, row.mu, row.norm, row.norm_over_size, row.method, study.slope))
    return RunResult(table=table, summary=study)


def _report_point(cfg: ExperimentConfig, spec: ModelSpec) -> dict[str, Any]:
    overrides = {}
    if cfg.sweep is not None and cfg.sweep.parameter in spec.params:
        overrides[cfg.sweep.parameter] = 0.5 * (cfg.sweep.start + cfg.sweep.stop)
    model = _build(spec, overrides)
    o0, _ = normalized_deformation(model)
    mu = _resolve_mu(cfg, model)
    spectrum = _spectrum(model, cfg)
    krylov_dim = krylov_dimension(spectrum, o0)
    # Enough coefficients for every order up to REPORT_MAX_ORDER.
    data = compute_krylov(model, o0, cfg, max_steps=2 * REPORT_MAX_ORDER + 3, spectrum=spectrum)
    closed = data.terminated is TerminationReason.CLOSED
    m_index = krylov_dim // 2 - 1
    orders = list(range(min(REPORT_MAX_ORDER, data.m_index, m_index) + 1))
    norms, non_monotone = truncation_scan(data.b, mu, orders)
    reference = agp_norm_exact(spectrum, o0, mu)
    reached: int | str = f"not reached at N={REPORT_MAX_ORDER}"
    for n, norm in zip(orders, norms, strict=True):
        if reference == 0.0 or abs(norm - reference) <= REPORT_AGREEMENT * reference:
            reached = n
            break
    return {
        "model": model.name,
        "params": dict(model.parameters),
        "params_hash": params_hash(spec.name, model.parameters),
        "mu": mu,
        "krylov_dim": krylov_dim,
        "closed": closed,
        "m_index": m_index,
        "exact_norm": reference,
        "norms_by_truncation": norms,
        "non_monotone_orders": non_monotone,
        "truncation_for_5pct": reached,
    }


def run_truncation_report(cfg: ExperimentConfig) -> RunResult:
    """
    Per-model JSON summary: Krylov dimension, M, normalized norms for
    N = 0..8 and the smallest N within 5% of the exact norm.
    """
    specs: Sequence[ModelSpec] = cfg.models or ((cfg.model,) if cfg.model else ())
    outcome = run_sweep(
        list(specs),
        lambda s: _report_point(cfg, s),
        threads=cfg.threads,
        label="truncation report",
    )
    summary = list(outcome.completed_prefix)
    table = Table(columns=("summary",), rows=[(entry,) for entry in summary])
    return RunResult(table=table, interrupted=outcome.interrupted, summary=summary)


def render_report(summary: list[dict[str, Any]]) -> str:
    def clean(value: Any) -> Any:
        if isinstance(value, float) and not math.isfinite(value):
            return None
        return value

    records = [{k: clean(v) for k, v in entry.items()} for entry in summary]
    return json.dumps(records, indent=2, sort_keys=True) + "\n"


def write_result(cfg: ExperimentConfig, result: RunResult) -> None:
    if cfg.command == "truncation-report":
        _write_text(render_report(result.summary or []), cfg.out)
    else:
        write_table(result.table, cfg.out, cfg.format)


RUNNERS = {
    "lanczos": run_lanczos,
    "agp": run_agp_sweep,
    "sweep": run_agp_sweep,
    "scaling": run_scaling,
    "truncation-report": run_truncation_report,
}
