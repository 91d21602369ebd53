"""
Adiabatic gauge potentials from operator-space Lanczos coefficients.

Builds the Krylov chain of the deformation operator under the Liouvillian,
solves the regularized gauge condition on its odd sector, and checks the
result against exact diagonalization and autocorrelation integrals.
"""

__version__ = "0.1.0"

from krylov_agp.agp import AgpSolution, agp_norm_from_alpha, assemble_agp, solve_alpha
from krylov_agp.autocorr import AutocorrSpec, agp_norm_from_autocorr, closed_form_norm
from krylov_agp.errors import KrylovAgpError
from krylov_agp.krylov import KrylovData, LanczosOptions, lanczos, lanczos_spectral
from krylov_agp.models import ModelInstance, build_model, normalized_deformation
from krylov_agp.operators import DenseOperator, PauliString, PauliSum
from krylov_agp.oracle import agp_matrix_exact, agp_norm_exact, eigendecompose

__all__ = [
    "AgpSolution",
    "AutocorrSpec",
    "DenseOperator",
    "KrylovAgpError",
    "KrylovData",
    "LanczosOptions",
    "ModelInstance",
    "PauliString",
    "PauliSum",
    "__version__",
    "agp_matrix_exact",
    "agp_norm_exact",
    "agp_norm_from_alpha",
    "agp_norm_from_autocorr",
    "assemble_agp",
    "build_model",
    "closed_form_norm",
    "eigendecompose",
    "lanczos",
    "lanczos_spectral",
    "normalized_deformation",
    "solve_alpha",
]
