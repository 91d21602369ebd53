"""
Exact-diagonalization reference.

Everything here works in the eigenbasis of a dense Hamiltonian: AGP norm and
matrix elements, autocorrelation functions, the binned response function and
the merged frequency lines shared with the spectral Lanczos engine.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.stats

from krylov_agp.errors import DivergenceError, DomainError, ResourceError
from krylov_agp.operators import DenseOperator, OperatorSum, to_dense

logger = logging.getLogger(__name__)

__all__ = [
    "DENSE_CAP_DIM",
    "ResponseSamples",
    "Spectrum",
    "TailFit",
    "agp_matrix_exact",
    "agp_norm_exact",
    "agp_norm_from_response",
    "autocorrelation",
    "eigendecompose",
    "fit_spectral_tail",
    "response_function",
    "spectral_lines",
]

DENSE_CAP_DIM = 4096
COUPLING_TOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and the unitary matrix of eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.size)

    def frequencies(self) -> np.ndarray:
        """ω_mn = E_m − E_n."""
        e = self.eigenvalues
        return e[:, None] - e[None, :]

    def matrix_elements(self, o: OperatorSum) -> np.ndarray:
        """⟨m|o|n⟩."""
        dense = to_dense(o).matrix
        if dense.shape[0] != self.dim:
            raise DomainError(f"operator dimension {dense.shape[0]} != spectrum {self.dim}")
        v = self.eigenvectors
        return v.conj().T @ dense @ v

    def degeneracy_tol(self, rel_tol: float = 1e-10) -> float:
        spread = float(np.max(np.abs(self.eigenvalues), initial=0.0))
        return rel_tol * max(1.0, spread)


def eigendecompose(h: OperatorSum, cap_dim: int = DENSE_CAP_DIM) -> Spectrum:
    """
    Full Hermitian eigendecomposition.

    Raises:
        ResourceError: dimension above ``cap_dim``
        DomainError: ``h`` is not Hermitian
    """
    if h.dim > cap_dim:
        raise ResourceError(f"dense eigensolver capped at dimension {cap_dim}, got {h.dim}")
    matrix = to_dense(h).matrix
    if not np.allclose(matrix, matrix.conj().T, atol=1e-12):
        raise DomainError("Hamiltonian is not Hermitian")
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    return Spectrum(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def _as_spectrum(h: OperatorSum | Spectrum) -> Spectrum:
    return h if isinstance(h, Spectrum) else eigendecompose(h)


def _pair_weights(spec: Spectrum, coupling: np.ndarray, mu: float) -> np.ndarray:
    """ω²/(μ²+ω²)² on m ≠ n; degenerate pairs get 0, or raise at μ = 0 if coupled."""
    omega = spec.frequencies()
    off_diagonal = ~np.eye(spec.dim, dtype=bool)
    if mu != 0.0:
        weights = omega**2 / (mu**2 + omega**2) ** 2
    else:
        degenerate = off_diagonal & (np.abs(omega) <= spec.degeneracy_tol())
        if np.any(np.sqrt(coupling[degenerate]) >= COUPLING_TOL):
            raise DivergenceError(
                "μ = 0 with a coupled degenerate pair; use a positive regulator"
            )
        with np.errstate(divide="ignore"):
            weights = np.where(degenerate | ~off_diagonal, 0.0, 1.0 / omega**2)
    return np.where(off_diagonal, weights, 0.0)


def agp_norm_exact(
    h: OperatorSum | Spectrum, d_h: OperatorSum, mu: float, normalized: bool = False
) -> float:
    """
    ‖A‖² = (1/D) Σ_{m≠n} ω²/(μ²+ω²)² |⟨m|∂H|n⟩|².

    Args:
        h: Hamiltonian or its precomputed spectrum
        d_h: deformation ∂λH
        mu: regulator, μ ≥ 0
        normalized: divide by ‖∂λH‖²

    Raises:
        DivergenceError: μ = 0 and a degenerate pair couples through ∂λH
    """
    spec = _as_spectrum(h)
    coupling = np.abs(spec.matrix_elements(d_h)) ** 2
    norm = float(np.sum(_pair_weights(spec, coupling, mu) * coupling)) / spec.dim
    if normalized:
        norm /= d_h.norm() ** 2
    return norm


def agp_matrix_exact(h: OperatorSum | Spectrum, d_h: OperatorSum, mu: float) -> DenseOperator:
    """
    Regularized AGP, ⟨m|A|n⟩ = −iω/(μ²+ω²)·⟨m|∂H|n⟩ with zero diagonal.

    Returned in the original (computational) basis.
    """
    spec = _as_spectrum(h)
    d = spec.matrix_elements(d_h)
    omega = spec.frequencies()
    coupling = np.abs(d) ** 2
    weights = _pair_weights(spec, coupling, mu)
    # ω/(μ²+ω²) = sign(ω)·√weight on every retained pair.
    factor = np.sign(omega) * np.sqrt(weights)
    a_eig = -1j * factor * d
    v = spec.eigenvectors
    return DenseOperator(v @ a_eig @ v.conj().T)


def spectral_lines(
    h: OperatorSum | Spectrum,
    o: OperatorSum,
    merge_tol: float = 1e-10,
    weight_tol: float = 1e-24,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Merged frequency lines of ``o`` under ``h``.

    Returns (ω, w) sorted by ω with w_g = Σ_{ω_mn ∈ g} |⟨m|o|n⟩|²/D, so that
    (o(t)|o) = Σ_g w_g cos(ω_g t) and Σ_g w_g = (o|o). A line collects the
    frequencies within ``merge_tol``·max(1, max|E|) of its lowest member.
    """
    spec = _as_spectrum(h)
    weights = (np.abs(spec.matrix_elements(o)) ** 2).ravel() / spec.dim
    omega = spec.frequencies().ravel()
    keep = weights > weight_tol
    omega, weights = omega[keep], weights[keep]
    order = np.argsort(omega, kind="stable")
    omega, weights = omega[order], weights[order]
    if not omega.size:
        return omega, weights
    group = _line_groups(omega, spec.degeneracy_tol(merge_tol))
    line_weight = np.bincount(group, weights=weights)
    line_omega = np.bincount(group, weights=omega * weights) / line_weight
    return line_omega, line_weight


def _line_groups(omega: np.ndarray, tol: float) -> np.ndarray:
    """Group labels for sorted ``omega``; no group spans more than ``tol``."""
    starts = np.flatnonzero(np.diff(omega) > tol) + 1
    first = np.concatenate([[0], starts])
    last = np.concatenate([starts, [omega.size]]) - 1
    opens = np.zeros(omega.size, dtype=bool)
    opens[first] = True
    # Clusters of chained near neighbours are split greedily from the left.
    for lo, hi in zip(first, last, strict=True):
        if omega[hi] - omega[lo] <= tol:
            continue
        i = int(lo)
        while i <= hi:
            opens[i] = True
            i = int(np.searchsorted(omega, omega[i] + tol, side="right"))
    return np.cumsum(opens) - 1


def autocorrelation(
    h: OperatorSum | Spectrum, o_normalized: OperatorSum, t: float | np.ndarray
) -> float | np.ndarray:
    """𝒞(t) = (o(t)|o) = Σ_mn |⟨m|o|n⟩|² cos(ω_mn t)/D."""
    omega, weights = spectral_lines(h, o_normalized)
    times = np.asarray(t, dtype=np.float64)
    values = np.cos(np.multiply.outer(times, omega)) @ weights
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class ResponseSamples:
    """Binned |f(ω)|², folded onto ω ≥ 0 and normalized by D and bin width."""

    centers: np.ndarray
    width: float
    values: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.values) * self.width)


def response_function(
    h: OperatorSum | Spectrum,
    d_h: OperatorSum,
    bin_width: float | None = None,
    omega_max: float | None = None,
    n_bins: int = 200,
) -> ResponseSamples:
    """
    Histogram of |⟨m|∂H|n⟩|² over |ω_mn| for m ≠ n.

    By default 200 uniform bins cover [0, max|ω|]; ``bin_width`` overrides the
    bin count.
    """
    spec = _as_spectrum(h)
    coupling = np.abs(spec.matrix_elements(d_h)) ** 2
    omega = np.abs(spec.frequencies())
    off_diagonal = ~np.eye(spec.dim, dtype=bool)
    omega, coupling = omega[off_diagonal], coupling[off_diagonal]
    top = float(omega_max if omega_max is not None else np.max(omega, initial=0.0))
    top = top if top > 0 else 1.0
    if bin_width is not None:
        n_bins = max(1, int(np.ceil(top / bin_width)))
    edges = np.linspace(0.0, top, n_bins + 1)
    width = float(edges[1] - edges[0])
    counts, _ = np.histogram(omega, bins=edges, weights=coupling / spec.dim)
    return ResponseSamples(
        centers=0.5 * (edges[1:] + edges[:-1]), width=width, values=counts / width
    )


def agp_norm_from_response(samples: ResponseSamples, mu: float) -> float:
    """∫ ω²/(μ²+ω²)² Φ(ω) dω on the binned response."""
    w = samples.centers
    return float(np.sum(samples.values * w**2 / (mu**2 + w**2) ** 2) * samples.width)


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    r_squared: float


def fit_spectral_tail(
    samples: ResponseSamples, lower: float = 0.25, upper: float = 0.75
) -> TailFit:
    """
    Linear fit of log Φ(ω) over the bins between ``lower`` and ``upper``
    fractions of the sampled range, skipping empty bins.
    """
    top = samples.centers[-1] + 0.5 * samples.width
    window = (samples.centers >= lower * top) & (samples.centers <= upper * top)
    window &= samples.values > 0
    if np.count_nonzero(window) < 3:
        raise DomainError("too few populated bins for a tail fit")
    fit = scipy.stats.linregress(samples.centers[window], np.log(samples.values[window]))
    return TailFit(slope=float(fit.slope), intercept=float(fit.intercept), r_squared=fit.rvalue**2)
