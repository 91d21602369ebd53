"""
AGP expansion coefficients from Lanczos coefficients.

The regularized AGP lives on the odd Krylov operators,
A = Σ_k i·a_k·𝒪_{2k+1}, where a solves a real symmetric tridiagonal system
built from b and μ. Also here: the resolvent (continued-fraction) route to
the same norm, the assembled operator and the gauge and variational
diagnostics used to check a solution.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from krylov_agp.errors import DomainError
from krylov_agp.krylov import KrylovData
from krylov_agp.operators import OperatorSum, commutator, linear_combination

logger = logging.getLogger(__name__)

__all__ = [
    "AgpSolution",
    "agp_norm_from_alpha",
    "agp_norm_from_resolvent",
    "alpha_from_resolvent",
    "alpha_recursion_residual",
    "assemble_agp",
    "full_truncation",
    "gauge_residual",
    "norm_from_imaginary_alpha",
    "solve_alpha",
    "thomas_solve",
    "truncation_scan",
    "variational_action",
]


@dataclass(frozen=True)
class AgpSolution:
    """
    Coefficients a_k = Im α_{2k+1}, k = 0..truncation.

    ``norm_sq`` is Σ a_k², the norm for a unit-norm deformation; multiply by
    ‖∂λH‖² (``agp_norm_from_alpha``) for the physical norm.
    """

    a: np.ndarray
    mu: float
    truncation: int
    norm_sq: float
    residual: float = 0.0

    @property
    def is_empty(self) -> bool:
        return self.truncation < 0


def _padded(b: Sequence[float], length: int) -> np.ndarray:
    """bp[n] = b_n for 1 ≤ n ≤ K, zero at n = 0 and beyond K."""
    coeffs = np.asarray(b, dtype=np.float64)
    out = np.zeros(max(length, coeffs.size + 1))
    out[1 : coeffs.size + 1] = coeffs
    return out


def full_truncation(b: Sequence[float]) -> int:
    """M = ⌈K/2⌉ − 1, the largest usable index; −1 for empty b."""
    return (len(b) + 1) // 2 - 1


def thomas_solve(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Tridiagonal solve by forward elimination and back substitution.

    ``sub[i]`` couples row i+1 to column i, ``sup[i]`` row i to column i+1.

    Raises:
        DomainError: a zero pivot
    """
    n = diag.size
    c = np.zeros(n)
    d = np.zeros(n)
    pivot = diag[0]
    for i in range(n):
        if i > 0:
            pivot = diag[i] - sub[i - 1] * c[i - 1]
        if abs(pivot) <= 1e-300:
            raise DomainError("singular tridiagonal system; use a positive regulator μ")
        if i < n - 1:
            c[i] = sup[i] / pivot
        d[i] = (rhs[i] - (sub[i - 1] * d[i - 1] if i > 0 else 0.0)) / pivot
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _tridiagonal(b: Sequence[float], mu: float, n_trunc: int) -> tuple[np.ndarray, np.ndarray]:
    bp = _padded(b, 2 * n_trunc + 4)
    k = np.arange(n_trunc + 1)
    diag = bp[2 * k + 1] ** 2 + bp[2 * k + 2] ** 2 + mu**2
    off = bp[2 * k[:-1] + 2] * bp[2 * k[:-1] + 3]
    return diag, off


def _apply_tridiagonal(diag: np.ndarray, off: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = diag * x
    out[:-1] += off * x[1:]
    out[1:] += off * x[:-1]
    return out


def solve_alpha(b: Sequence[float], mu: float, n_trunc: int | None = None) -> AgpSolution:
    """
    Solve T·a = −b₁e₀ with diag_k = b²_{2k+1} + b²_{2k+2} + μ² and
    off_k = b_{2k+2}b_{2k+3}, coefficients beyond b taken as zero.

    Args:
        b: Lanczos coefficients b₁..b_K
        mu: regulator; only μ² enters
        n_trunc: keep a_0..a_N; None for the full M, −1 for the empty ansatz

    Raises:
        DomainError: N > M, or a singular system at μ = 0
    """
    full = full_truncation(b)
    n = full if n_trunc is None else n_trunc
    if n > full:
        raise DomainError(f"truncation N={n} exceeds M={full} for {len(b)} coefficients")
    if n < 0:
        return AgpSolution(a=_readonly(np.zeros(0)), mu=mu, truncation=-1, norm_sq=0.0)

    diag, off = _tridiagonal(b, mu, n)
    if np.any(diag == 0.0):
        raise DomainError("singular AGP system (zero row at μ = 0); use a positive regulator μ")
    rhs = np.zeros(n + 1)
    rhs[0] = -float(b[0])
    a = thomas_solve(off, diag, off, rhs)
    # One step of iterative refinement.
    a = a + thomas_solve(off, diag, off, rhs - _apply_tridiagonal(diag, off, a))

    residual = float(np.max(np.abs(_apply_tridiagonal(diag, off, a) - rhs)))
    scale = float(np.max(np.abs(rhs)))
    if residual > 1e-10 * scale:
        logger.warning(f"AGP solve residual {residual:.3g} above 1e-10·|rhs| (N={n}, μ={mu})")
    logger.debug(f"solve_alpha N={n} μ={mu}: residual {residual:.3g}")
    return AgpSolution(
        a=_readonly(a), mu=mu, truncation=n, norm_sq=float(a @ a), residual=residual
    )


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def agp_norm_from_alpha(sol: AgpSolution, deformation_norm_sq: float = 1.0) -> float:
    """‖∂λH‖²·Σ a_k²."""
    return deformation_norm_sq * sol.norm_sq


def truncation_scan(
    b: Sequence[float], mu: float, orders: Sequence[int] | None = None
) -> tuple[list[float], list[int]]:
    """
    Normalized norms for each truncation order, re-solving every smaller system.

    Returns (norms, non_monotone) where ``non_monotone`` lists the orders whose
    norm drops below the previous order's.
    """
    chosen = list(range(full_truncation(b) + 1)) if orders is None else list(orders)
    norms = [solve_alpha(b, mu, n).norm_sq for n in chosen]
    non_monotone = [
        chosen[i] for i in range(1, len(norms)) if norms[i] < norms[i - 1] * (1 - 1e-12)
    ]
    if non_monotone:
        logger.warning(f"non-monotone truncation orders at μ={mu}: {non_monotone}")
    return norms, non_monotone


def assemble_agp(krylov: KrylovData, sol: AgpSolution) -> OperatorSum:
    """
    A = Σ_k (i·a_k)·𝒪_{2k+1}.

    Raises:
        DomainError: the Krylov basis was not retained, or is too short for ``sol``
    """
    if krylov.basis is None:
        raise DomainError("assemble_agp needs the Krylov basis; run lanczos with keep_basis")
    if sol.is_empty:
        return krylov.basis[0].zeros_like()
    odd = list(krylov.basis[1 : 2 * sol.truncation + 2 : 2])
    if len(odd) != sol.truncation + 1:
        raise DomainError(
            f"solution has {sol.truncation + 1} coefficients, basis only {len(odd)} odd vectors"
        )
    return linear_combination(odd, 1j * sol.a)


def gauge_residual(
    h: OperatorSum, d_h_normalized: OperatorSum, a_op: OperatorSum, mu: float
) -> float:
    """√(R|R) for R = [H, i∂λH + [H, A]] + μ²A."""
    inner = d_h_normalized * 1j + commutator(h, a_op)
    return (commutator(h, inner) + a_op * mu**2).norm()


def variational_action(b: Sequence[float], a: Sequence[float], mu: float) -> float:
    """
    S(a) = (1 + b₁a₀)² + Σ_{k=1}^{N} (a_{k−1}b_{2k} + a_k b_{2k+1})²
           + a_N² b²_{2N+2} + μ² Σ a_k².

    Its stationary point is the ``solve_alpha`` solution at the same N.
    """
    coeffs = np.asarray(a, dtype=np.float64)
    if coeffs.size == 0:
        return 1.0
    n = coeffs.size - 1
    bp = _padded(b, 2 * n + 4)
    k = np.arange(1, n + 1)
    chain = coeffs[:-1] * bp[2 * k] + coeffs[1:] * bp[2 * k + 1]
    return float(
        (1.0 + bp[1] * coeffs[0]) ** 2
        + chain @ chain
        + (coeffs[-1] * bp[2 * n + 2]) ** 2
        + mu**2 * (coeffs @ coeffs)
    )


def alpha_recursion_residual(b: Sequence[float], sol: AgpSolution) -> float:
    """
    Largest violation of the coefficient recursion over k = 0..M.

    Eliminating the even amplitudes leaves, per odd index,
    μ²a_k + b_{2k+1}g_k + b_{2k+2}g_{k+1} = 0 with
    g_k = δ_{k0} + b_{2k}a_{k−1} + b_{2k+1}a_k. Coefficients beyond the
    solution count as zero, so a truncated solution leaves a nonzero row.
    """
    full = full_truncation(b)
    if full < 0:
        return 0.0
    bp = _padded(b, 2 * full + 5)
    a = np.zeros(full + 2)
    a[: sol.a.size] = sol.a
    k = np.arange(full + 2)
    a_prev = np.concatenate([[0.0], a[:-1]])
    g = (k == 0) + bp[2 * k] * a_prev + bp[2 * k + 1] * a
    kk = k[:-1]
    rows = sol.mu**2 * a[kk] + bp[2 * kk + 1] * g[kk] + bp[2 * kk + 2] * g[kk + 1]
    return float(np.max(np.abs(rows)))


def _continued_fraction(b: Sequence[float], mu: float) -> tuple[float, float]:
    """R(μ) = 1/(μ + b₁²/(μ + b₂²/(…))) and ∂μR by the same backward pass."""
    coeffs = np.asarray(b, dtype=np.float64)
    f, df = mu, 1.0
    for b_n in coeffs[::-1]:
        f, df = mu + b_n**2 / f, 1.0 - b_n**2 * df / f**2
    return 1.0 / f, -df / f**2


def agp_norm_from_resolvent(b: Sequence[float], mu: float) -> float:
    """
    ½(R/μ + ∂μR) with R the Laplace transform of the autocorrelation.

    Equal to the full-truncation ``solve_alpha`` norm for the same b.

    Raises:
        DomainError: μ ≤ 0
    """
    if mu <= 0:
        raise DomainError(f"resolvent norm needs μ > 0, got {mu}")
    r, dr = _continued_fraction(b, mu)
    return 0.5 * (r / mu + dr)


def alpha_from_resolvent(b: Sequence[float], mu: float) -> AgpSolution:
    """
    Full-truncation coefficients from (μ − J)φ = e₀, where
    (Jψ)_n = b_nψ_{n−1} − b_{n+1}ψ_{n+1}; a_k = −(−1)^k φ_{2k+1}.

    Raises:
        DomainError: μ ≤ 0
    """
    if mu <= 0:
        raise DomainError(f"resolvent coefficients need μ > 0, got {mu}")
    coeffs = np.asarray(b, dtype=np.float64)
    full = full_truncation(coeffs)
    if full < 0:
        return AgpSolution(a=_readonly(np.zeros(0)), mu=mu, truncation=-1, norm_sq=0.0)
    size = coeffs.size + 1
    banded = np.zeros((3, size))
    banded[0, 1:] = coeffs
    banded[1, :] = mu
    banded[2, :-1] = -coeffs
    rhs = np.zeros(size)
    rhs[0] = 1.0
    phi = scipy.linalg.solve_banded((1, 1), banded, rhs)
    odd = phi[1 : 2 * full + 2 : 2]
    a = -((-1.0) ** np.arange(full + 1)) * odd
    return AgpSolution(a=_readonly(a), mu=mu, truncation=full, norm_sq=float(a @ a))


def norm_from_imaginary_alpha(alpha: Sequence[complex]) -> float:
    """
    −Σ α² for the purely imaginary odd coefficients α_{2k+1} = i·a_k.

    Raises:
        DomainError: the sum has a non-negligible imaginary part or a negative
            real part, so the coefficients are not of the expected form
    """
    values = np.asarray(alpha, dtype=np.complex128)
    total = -complex(np.sum(values**2))
    scale = max(1.0, float(np.sum(np.abs(values) ** 2)))
    if abs(total.imag) > 1e-12 * scale:
        raise DomainError(f"−Σα² has imaginary part {total.imag:.3g}")
    if total.real < -1e-14 * scale:
        raise DomainError(f"−Σα² is negative ({total.real:.6g})")
    return max(total.real, 0.0)
