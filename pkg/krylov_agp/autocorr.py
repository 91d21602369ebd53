"""
AGP norms from autocorrelation functions.

    ‖A‖² = ½ ∫₀^∞ (1/μ − t) 𝒞(t) e^{−μt} dt

evaluated by panelled adaptive quadrature after subtracting the
infinite-time plateau of 𝒞, or in closed form for the families that admit
one. Also: the large-μ moment series, the M/μ² bound and scaling studies
with μ = L·2^{−L}.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.integrate
import scipy.special

from krylov_agp.errors import BoundViolation, DomainError, QuadratureError
from krylov_agp.krylov import MomentSequence
from krylov_agp.models import chain_regulator
from krylov_agp.operators import OperatorSum, PauliString, PauliSum
from krylov_agp.oracle import Spectrum, agp_norm_exact, spectral_lines

logger = logging.getLogger(__name__)

__all__ = [
    "CLOSED_FORM_FAMILIES",
    "FAMILIES",
    "AutocorrSpec",
    "IsingCriticalComparison",
    "QuadOptions",
    "ScalingRow",
    "ScalingTable",
    "SeriesEstimate",
    "agp_norm_bound",
    "agp_norm_from_autocorr",
    "agp_norm_from_moments",
    "check_norm_bound",
    "closed_form_norm",
    "has_closed_form",
    "ising_critical_comparison",
    "scaling_study",
    "spec_from_operator",
]

FAMILIES: dict[str, tuple[str, ...]] = {
    "gaussian": (),
    "sech": ("alpha", "eta"),
    "su2_cos": ("L", "alpha"),
    "bessel_const": ("alpha",),
    "bessel_j0sq": ("alpha",),
    "xy_chain": (),
    "ising_critical": ("L",),
    "tabulated": (),
}
CLOSED_FORM_FAMILIES = frozenset({"gaussian", "su2_cos", "bessel_const", "bessel_j0sq", "xy_chain"})


def _ising_critical(size: int, t: float) -> float:
    """(1/L) Σ_d (L − |d|)[J_{2d}(2t)² − J_{2d+1}(2t) J_{2d−1}(2t)]."""
    d = np.arange(-(size - 1), size)
    x = 2.0 * t
    terms = scipy.special.jv(2 * d, x) ** 2 - scipy.special.jv(2 * d + 1, x) * scipy.special.jv(
        2 * d - 1, x
    )
    return float(np.dot(size - np.abs(d), terms)) / size


@dataclass(frozen=True)
class AutocorrSpec:
    """
    A normalized autocorrelation function 𝒞(t), 𝒞(0) = 1, 𝒞 even.

    Analytic families are built with ``AutocorrSpec(family, params)``;
    tabulated ones with ``from_lines`` (exact spectral lines) or
    ``from_samples`` (a time grid, linearly interpolated).
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    lines: tuple[np.ndarray, np.ndarray] | None = None
    samples: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise DomainError(f"unknown autocorrelation family {self.family!r}")
        missing = [k for k in FAMILIES[self.family] if k not in self.params]
        if missing:
            raise DomainError(f"{self.family}: missing parameter(s) {missing}")
        if self.family == "tabulated" and (self.lines is None) == (self.samples is None):
            raise DomainError("tabulated spec needs exactly one of lines or samples")
        if self.family in ("su2_cos", "ising_critical"):
            size = self.params["L"]
            if size != int(size) or size < 1:
                raise DomainError(f"{self.family}: L must be a positive integer, got {size}")
        for key in ("alpha", "eta"):
            if key in self.params and self.params[key] <= 0:
                raise DomainError(f"{self.family}: {key} must be positive")

    @classmethod
    def from_lines(cls, omega: np.ndarray, weights: np.ndarray) -> AutocorrSpec:
        """𝒞(t) = Σ w cos(ωt) / Σ w."""
        w = np.asarray(weights, dtype=np.float64)
        total = float(w.sum())
        if total <= 0:
            raise DomainError("spectral lines carry no weight")
        return cls("tabulated", lines=(np.asarray(omega, dtype=np.float64), w / total))

    @classmethod
    def from_samples(cls, t: Sequence[float], values: Sequence[float]) -> AutocorrSpec:
        """Grid-interpolated 𝒞; beyond the grid it is held at the plateau."""
        grid = np.asarray(t, dtype=np.float64)
        vals = np.asarray(values, dtype=np.float64)
        if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 2 or grid[0] != 0.0:
            raise DomainError("samples need matching 1-d arrays on a grid starting at t = 0")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("sample times must increase")
        return cls("tabulated", samples=(grid, vals / vals[0]))

    def _param(self, key: str) -> float:
        return float(self.params[key])

    def __call__(self, t: float) -> float:
        t = abs(float(t))
        match self.family:
            case "gaussian":
                return math.exp(-0.5 * t * t)
            case "sech":
                # sech(x)^η = exp(η(log 2 − x − log1p(e^{−2x})))
                x = self._param("alpha") * t
                log_sech = math.log(2.0) - x - math.log1p(math.exp(-2.0 * x))
                return math.exp(self._param("eta") * log_sech)
            case "su2_cos":
                return math.cos(self._param("alpha") * t) ** int(self._param("L"))
            case "bessel_const":
                x = self._param("alpha") * t
                return 1.0 if x == 0 else float(scipy.special.j1(2.0 * x)) / x
            case "bessel_j0sq":
                return float(scipy.special.j0(self._param("alpha") * t)) ** 2
            case "xy_chain":
                return float(scipy.special.j0(4.0 * t) ** 2 + scipy.special.j1(4.0 * t) ** 2)
            case "ising_critical":
                return _ising_critical(int(self._param("L")), t)
            case _:
                return self._tabulated(t)

    def _tabulated(self, t: float) -> float:
        if self.lines is not None:
            omega, w = self.lines
            return float(np.dot(w, np.cos(omega * t)))
        assert self.samples is not None
        grid, vals = self.samples
        if t > grid[-1]:
            return self.plateau
        return float(np.interp(t, grid, vals))

    @property
    def plateau(self) -> float:
        """Infinite-time average of 𝒞."""
        match self.family:
            case "su2_cos":
                size = int(self._param("L"))
                return math.comb(size, size // 2) / 2.0**size if size % 2 == 0 else 0.0
            case "tabulated" if self.lines is not None:
                omega, w = self.lines
                return float(w[np.abs(omega) <= 1e-10 * max(1.0, float(np.abs(omega).max()))].sum())
            case "tabulated":
                assert self.samples is not None
                grid, vals = self.samples
                tail = grid >= 0.9 * grid[-1]
                return float(vals[tail].mean())
            case _:
                return 0.0

    def envelope(self, t: float) -> float:
        """Non-increasing bound on |𝒞(s) − plateau| for s ≥ t."""
        match self.family:
            case "gaussian":
                return math.exp(-0.5 * t * t)
            case "sech":
                eta, alpha = self._param("eta"), self._param("alpha")
                return min(1.0, math.exp(eta * (math.log(2.0) - alpha * t)))
            case "bessel_const" | "bessel_j0sq":
                return min(1.0, 1.0 / (self._param("alpha") * t)) if t > 0 else 1.0
            case "xy_chain":
                return min(1.0, 0.5 / t) if t > 0 else 1.0
            case "tabulated" if self.samples is not None:
                return 2.0 if t <= self.samples[0][-1] else 0.0
            case "tabulated":
                return 2.0
            case _:
                return 1.0

    def upper_limit(self) -> float | None:
        """Time beyond which 𝒞 − plateau vanishes identically, if any."""
        return float(self.samples[0][-1]) if self.samples is not None else None


@dataclass(frozen=True)
class QuadOptions:
    """Quadrature controls; the integration range doubles until the tail is below tol/2."""

    tol: float = 1e-8
    panel: float = 10.0
    max_t_factor: float = 1e3
    limit: int = 200


def _tail_bound(spec: AutocorrSpec, mu: float, t_end: float) -> float:
    """Bound on ½∫_T^∞ |1/μ − t| e^{−μt} |𝒞 − c̄| dt."""
    env = spec.envelope(t_end)
    if env == 0.0:
        return 0.0
    decay = t_end * math.exp(-mu * t_end) / mu
    if t_end >= 1.0 / mu:
        return 0.5 * env * decay
    return 0.5 * env * (2.0 * math.exp(-1.0) / mu**2 - decay)


def agp_norm_from_autocorr(
    spec: AutocorrSpec, mu: float, quad: QuadOptions | None = None
) -> float:
    """
    Integrate ½(1/μ − t)(𝒞 − c̄)e^{−μt} over growing panels.

    Raises:
        DomainError: μ ≤ 0
        QuadratureError: the tail is still above tol at T = max_t_factor/μ
    """
    quad = quad or QuadOptions()
    if mu <= 0:
        raise DomainError(f"autocorrelation norm needs μ > 0, got {mu}")
    plateau = spec.plateau

    def integrand(t: float) -> float:
        return 0.5 * (1.0 / mu - t) * math.exp(-mu * t) * (spec(t) - plateau)

    t_cap = quad.max_t_factor / mu
    stop = spec.upper_limit()
    value, error, start, t_end = 0.0, 0.0, 0.0, quad.panel
    while True:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
            while start < t_end:
                end = min(start + quad.panel, t_end)
                piece, piece_err = scipy.integrate.quad(
                    integrand, start, end, limit=quad.limit, epsabs=quad.tol / 64, epsrel=1e-12
                )
                value += piece
                error += piece_err
                start = end
        tail = 0.0 if stop is not None and t_end >= stop else _tail_bound(spec, mu, t_end)
        if tail < quad.tol / 2:
            break
        if t_end >= t_cap:
            raise QuadratureError(
                f"{spec.family}: tail bound {tail:.3g} above tolerance at T={t_end:.4g}",
                value,
                error + tail,
            )
        t_end = min(2.0 * t_end, t_cap)
        if stop is not None:
            t_end = min(t_end, max(stop, start))
        logger.debug(f"{spec.family} μ={mu}: extending range to T={t_end:.4g}")
    if error > quad.tol:
        logger.warning(f"{spec.family} μ={mu}: quadrature error estimate {error:.3g} above tol")
    return value


def closed_form_norm(spec: AutocorrSpec, mu: float) -> float:
    """
    Exact value of the autocorrelation integral for the solvable families.

    Raises:
        DomainError: no closed form for the family, or μ ≤ 0
    """
    if mu <= 0:
        raise DomainError(f"closed-form norm needs μ > 0, got {mu}")
    match spec.family:
        case "gaussian":
            erfc_term = math.sqrt(math.pi / 2.0) * float(scipy.special.erfcx(mu / math.sqrt(2.0)))
            return 0.5 * (erfc_term * (mu**2 + 1.0) / mu - 1.0)
        case "bessel_const":
            alpha = spec._param("alpha")
            radical = (math.sqrt(4.0 * alpha**2 / mu**2 + 1.0) - 1.0) / alpha**2
            return 0.5 * (radical - 2.0 / (mu * math.sqrt(4.0 * alpha**2 + mu**2)))
        case "su2_cos":
            size, alpha = int(spec._param("L")), spec._param("alpha")
            k = np.arange(size + 1)
            omega = (size - 2 * k) * alpha
            weights = scipy.special.comb(size, k) / 2.0**size
            return float(np.sum(weights * omega**2 / (mu**2 + omega**2) ** 2))
        case "bessel_j0sq":
            x = 4.0 * spec._param("alpha") ** 2 / mu**2
            k_m, e_m = float(scipy.special.ellipk(-x)), float(scipy.special.ellipe(-x))
            return -(e_m - (1.0 + x) * k_m) / (math.pi * mu**2 * (1.0 + x))
        case "xy_chain":
            m = -64.0 / mu**2
            k_m, e_m = float(scipy.special.ellipk(m)), float(scipy.special.ellipe(m))
            return ((mu**2 + 32.0) * k_m - mu**2 * e_m) / (16.0 * math.pi * mu**2)
        case "tabulated" if spec.lines is not None:
            omega, w = spec.lines
            return float(np.sum(w * omega**2 / (mu**2 + omega**2) ** 2))
        case _:
            raise DomainError(f"no closed form for family {spec.family!r}")


def has_closed_form(spec: AutocorrSpec) -> bool:
    return spec.family in CLOSED_FORM_FAMILIES or spec.lines is not None


@dataclass(frozen=True)
class SeriesEstimate:
    """Partial sum of the large-μ series with the last term as error estimate."""

    value: float
    error: float
    divergent: bool = False


def agp_norm_from_moments(m: MomentSequence, mu: float, order: int) -> SeriesEstimate:
    """
    Σ_{n=1}^{order} n(−1)^{n+1} m_{2n} / μ^{2n+2}.

    The series is asymptotic; when the terms stop shrinking the estimate is
    flagged divergent but still returned.

    Raises:
        DomainError: ``order`` exceeds the available moments, or μ ≤ 0
    """
    if mu <= 0:
        raise DomainError(f"moment series needs μ > 0, got {mu}")
    if order > m.order:
        raise DomainError(f"order {order} needs m_{2 * order}, only up to m_{2 * m.order}")
    if order <= 0:
        return SeriesEstimate(value=0.0, error=0.0)
    terms = [n * (-1) ** (n + 1) * m.even(n) / mu ** (2 * n + 2) for n in range(1, order + 1)]
    divergent = len(terms) >= 2 and abs(terms[-1]) > abs(terms[-2])
    if divergent:
        logger.warning(f"moment series at μ={mu} diverges by order {order}")
    return SeriesEstimate(value=math.fsum(terms), error=abs(terms[-1]), divergent=divergent)


def agp_norm_bound(m_count: int, mu: float, deformation_norm_sq: float = 1.0) -> float:
    """(M/μ²)·‖∂λH‖²; infinite at μ = 0."""
    if mu == 0:
        return math.inf
    return m_count / mu**2 * deformation_norm_sq


def check_norm_bound(
    norm: float, m_count: int, mu: float, deformation_norm_sq: float = 1.0
) -> None:
    """
    Raises:
        BoundViolation: ``norm`` is negative or exceeds ``agp_norm_bound``
    """
    bound = agp_norm_bound(m_count, mu, deformation_norm_sq)
    if norm < -1e-14 or norm > bound * (1.0 + 1e-9):
        raise BoundViolation(f"norm {norm:.6g} outside [0, {bound:.6g}] (M={m_count}, μ={mu})")


@dataclass(frozen=True)
class ScalingRow:
    size: int
    mu: float
    norm: float
    method: str

    @property
    def norm_over_size(self) -> float:
        return self.norm / self.size


@dataclass(frozen=True)
class ScalingTable:
    rows: tuple[ScalingRow, ...]
    slope: float
    fitted_sizes: tuple[int, ...]


def _with_size(spec: AutocorrSpec, size: int) -> AutocorrSpec:
    if "L" not in FAMILIES[spec.family]:
        return spec
    return AutocorrSpec(spec.family, {**spec.params, "L": size})


def scaling_study(
    spec: AutocorrSpec,
    sizes: Sequence[int],
    method: str = "auto",
    quad: QuadOptions | None = None,
    on_row: Callable[[ScalingRow], Any] | None = None,
) -> ScalingTable:
    """
    Norm at μ = L·2^{−L} for each L, with the log-slope over the larger half.

    ``method`` is ``auto`` (closed form where available), ``closed`` or
    ``quadrature``; a failed quadrature falls back to the closed form when
    the family has one.
    """
    if method not in ("auto", "closed", "quadrature"):
        raise DomainError(f"unknown scaling method {method!r}")
    ordered = sorted({int(s) for s in sizes})
    if len(ordered) < 2:
        raise DomainError("scaling study needs at least two sizes")
    rows = []
    for size in ordered:
        sized = _with_size(spec, size)
        mu = chain_regulator(size)
        use_closed = method == "closed" or (method == "auto" and has_closed_form(sized))
        if use_closed:
            norm, used = closed_form_norm(sized, mu), "closed"
        else:
            try:
                norm, used = agp_norm_from_autocorr(sized, mu, quad), "quadrature"
            except QuadratureError:
                if not has_closed_form(sized):
                    raise
                logger.warning(f"{spec.family} L={size}: quadrature failed, using closed form")
                norm, used = closed_form_norm(sized, mu), "closed"
        row = ScalingRow(size=size, mu=mu, norm=norm, method=used)
        rows.append(row)
        if on_row is not None:
            on_row(row)

    fitted = rows[len(rows) // 2 :] if len(rows) >= 4 else rows
    slope = float(
        np.polyfit([r.size for r in fitted], np.log([r.norm for r in fitted]), 1)[0]
    )
    logger.info(f"{spec.family} scaling slope {slope:.4g} over L={[r.size for r in fitted]}")
    return ScalingTable(rows=tuple(rows), slope=slope, fitted_sizes=tuple(r.size for r in fitted))


@dataclass(frozen=True)
class IsingCriticalComparison:
    size: int
    mu: float
    exact: float
    family: float

    @property
    def relative_gap(self) -> float:
        return abs(self.family - self.exact) / self.exact


def ising_critical_comparison(
    size: int, mu: float | None = None, quad: QuadOptions | None = None
) -> IsingCriticalComparison:
    """
    Open transverse-field chain ½Σσˣσˣ + Σσᶻ against the bulk Bessel correlator.

    Both norms are per unit-norm deformation Σσᶻ; the gap is recorded, not
    bounded, since the correlator ignores the chain ends.
    """
    if size < 2:
        raise DomainError("critical Ising comparison needs L >= 2")
    mu = chain_regulator(size) if mu is None else mu
    terms = [(0.5, _pair(size, i)) for i in range(size - 1)]
    terms += [(1.0, PauliString.single("Z", i, size)) for i in range(size)]
    h = PauliSum.from_terms(terms, size)
    d_h = PauliSum.from_terms([(1.0, PauliString.single("Z", i, size)) for i in range(size)], size)
    exact = agp_norm_exact(h, d_h, mu, normalized=True)
    family = agp_norm_from_autocorr(AutocorrSpec("ising_critical", {"L": size}), mu, quad)
    result = IsingCriticalComparison(size=size, mu=mu, exact=exact, family=family)
    logger.info(f"critical Ising L={size}: relative gap {result.relative_gap:.3g}")
    return result


def _pair(size: int, site: int) -> PauliString:
    left = PauliString.single("X", site, size)
    right = PauliString.single("X", site + 1, size)
    return PauliString(left.x_mask ^ right.x_mask, left.z_mask ^ right.z_mask, size)


def spec_from_operator(h: OperatorSum | Spectrum, o: OperatorSum) -> AutocorrSpec:
    """Tabulated spec from the exact spectral lines of ``o`` under ``h``."""
    omega, weights = spectral_lines(h, o)
    return AutocorrSpec.from_lines(omega, weights)
