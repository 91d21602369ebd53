"""Tests for agp module."""

import math

import numpy as np
import pytest

from krylov_agp.agp import (
    AgpSolution,
    agp_norm_from_alpha,
    agp_norm_from_resolvent,
    alpha_from_resolvent,
    alpha_recursion_residual,
    assemble_agp,
    full_truncation,
    gauge_residual,
    norm_from_imaginary_alpha,
    solve_alpha,
    thomas_solve,
    truncation_scan,
    variational_action,
)
from krylov_agp.errors import DomainError
from krylov_agp.krylov import LanczosOptions, lanczos, lanczos_spectral
from krylov_agp.models import build_model, default_regulator, normalized_deformation
from krylov_agp.operators import PauliSum, to_dense
from krylov_agp.oracle import agp_matrix_exact, agp_norm_exact, eigendecompose

CHAIN = [1.0, 0.8, 1.3, 0.6, 1.1, 0.9, 1.2]


def _model_krylov(name, params, **opts):
    model = build_model(name, params)
    o0, d_norm = normalized_deformation(model)
    return model, o0, d_norm, lanczos(model.hamiltonian, o0, LanczosOptions(**opts))


class TestSolveAlpha:
    """Tests for solve_alpha."""

    def test_two_level(self):
        """b = (2, 2) at μ = 0 gives a₀ = −1/4 and norm 1/16."""
        sol = solve_alpha([2.0, 2.0], 0.0)
        assert sol.truncation == 0
        assert sol.a[0] == pytest.approx(-0.25)
        assert sol.norm_sq == pytest.approx(0.0625)

    def test_two_qubit_closed_form(self):
        """Per unit deformation the two-qubit norm is 4/(16ε²(1−λ)² + 4)²."""
        for eps, lam in ((1.0, 0.0), (0.5, 0.3), (2.0, 1.0)):
            _, _, d_norm, data = _model_krylov("two_qubit", {"epsilon": eps, "lambda": lam})
            sol = solve_alpha(data.b, 0.0)
            expected = 4.0 / (16.0 * eps**2 * (1.0 - lam) ** 2 + 4.0) ** 2
            assert sol.norm_sq == pytest.approx(expected, rel=1e-10)
            assert agp_norm_from_alpha(sol, d_norm**2) == pytest.approx(2 * eps**2 * expected)

    def test_full_truncation(self):
        """M = ⌈K/2⌉ − 1."""
        assert full_truncation([]) == -1
        assert full_truncation([1.0]) == 0
        assert full_truncation([1.0] * 10) == 4
        assert full_truncation([1.0] * 11) == 5

    def test_empty_ansatz(self):
        """N = −1 gives the zero solution."""
        sol = solve_alpha(CHAIN, 0.1, -1)
        assert sol.is_empty
        assert sol.norm_sq == 0.0

    def test_truncation_above_m(self):
        """N > M raises DomainError."""
        with pytest.raises(DomainError, match="exceeds"):
            solve_alpha(CHAIN, 0.1, full_truncation(CHAIN) + 1)

    def test_singular_at_zero_mu(self):
        """A vanishing diagonal at μ = 0 raises DomainError."""
        with pytest.raises(DomainError):
            solve_alpha([1.0, 0.0, 0.0, 0.0], 0.0, 1)

    def test_solves_tridiagonal_system(self):
        """The solution satisfies the tridiagonal equations."""
        mu = 0.3
        sol = solve_alpha(CHAIN, mu)
        bp = np.concatenate([[0.0], CHAIN, [0.0, 0.0, 0.0]])
        n = sol.truncation
        diag = [bp[2 * k + 1] ** 2 + bp[2 * k + 2] ** 2 + mu**2 for k in range(n + 1)]
        off = [bp[2 * k + 2] * bp[2 * k + 3] for k in range(n)]
        matrix = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        rhs = np.zeros(n + 1)
        rhs[0] = -CHAIN[0]
        np.testing.assert_allclose(matrix @ sol.a, rhs, atol=1e-12)
        assert sol.residual < 1e-12

    def test_norm_bounded_by_m_over_mu_squared(self):
        """Σ a_k² never exceeds (M + 1)/μ²."""
        for mu in (0.05, 0.5, 2.0):
            sol = solve_alpha(CHAIN, mu)
            assert sol.norm_sq <= (full_truncation(CHAIN) + 1) / mu**2

    def test_matches_exact_for_four_body(self):
        """The full Krylov solution reproduces the exact regularized norm."""
        model, o0, _, data = _model_krylov("four_body", {"lambda": 0.7})
        mu = model.default_mu
        krylov = solve_alpha(data.b, mu).norm_sq
        exact = agp_norm_exact(model.hamiltonian, o0, mu)
        assert krylov == pytest.approx(exact, rel=1e-6)

    @pytest.mark.parametrize("lam", np.linspace(0.1, 2.0, 20))
    def test_four_body_sweep_matches_exact(self, lam):
        """Across λ ∈ [0.1, 2] at μ = 0.25 the full solution equals the exact norm."""
        model, o0, _, data = _model_krylov("four_body", {"lambda": float(lam)})
        exact = agp_norm_exact(model.hamiltonian, o0, 0.25)
        assert solve_alpha(data.b, 0.25).norm_sq == pytest.approx(exact, rel=1e-6)

    @pytest.mark.parametrize(
        ("name", "params"),
        [
            ("ising_periodic", {"L": 6, "h": 1.0}),
            ("ising_periodic", {"L": 8, "h": 1.0}),
            ("xxz_open", {"L": 6, "delta": 0.5}),
            ("xxz_open", {"L": 8, "delta": 0.5}),
            ("chaotic_ising", {"L": 6, "hx": 0.9}),
        ],
    )
    def test_spectral_chain_matches_exact(self, name, params):
        """Coefficients from the eigenbasis reproduce the exact norm at μ = L·2^−L."""
        model = build_model(name, params)
        o0, _ = normalized_deformation(model)
        mu = default_regulator(model)
        assert mu == pytest.approx(params["L"] * 2.0 ** -params["L"])
        spectrum = eigendecompose(model.hamiltonian)
        data = lanczos_spectral(spectrum, o0)
        exact = agp_norm_exact(spectrum, o0, mu)
        assert solve_alpha(data.b, mu).norm_sq == pytest.approx(exact, rel=1e-5)


class TestThomasSolve:
    """Tests for thomas_solve."""

    def test_random_system(self, rng):
        """Matches a dense solve on a diagonally dominant system."""
        n = 6
        sub, sup = rng.normal(size=n - 1), rng.normal(size=n - 1)
        diag = 4.0 + rng.random(n)
        rhs = rng.normal(size=n)
        dense = np.diag(diag) + np.diag(sup, 1) + np.diag(sub, -1)
        np.testing.assert_allclose(thomas_solve(sub, diag, sup, rhs), np.linalg.solve(dense, rhs))

    def test_zero_pivot(self):
        """A zero pivot raises DomainError."""
        with pytest.raises(DomainError, match="singular"):
            thomas_solve(np.zeros(1), np.zeros(2), np.zeros(1), np.ones(2))


class TestTruncationScan:
    """Tests for truncation_scan."""

    def test_norms_per_order(self):
        """One norm per order, each matching a direct solve."""
        norms, _ = truncation_scan(CHAIN, 0.2)
        assert len(norms) == full_truncation(CHAIN) + 1
        for n, norm in enumerate(norms):
            assert norm == pytest.approx(solve_alpha(CHAIN, 0.2, n).norm_sq)

    def test_flags_drops(self):
        """Orders whose norm falls below the previous one are listed."""
        norms, non_monotone = truncation_scan(CHAIN, 0.2)
        expected = [n for n in range(1, len(norms)) if norms[n] < norms[n - 1] * (1 - 1e-12)]
        assert non_monotone == expected


class TestVariationalAction:
    """Tests for variational_action."""

    def test_empty(self):
        """S(∅) = 1."""
        assert variational_action(CHAIN, [], 0.1) == 1.0

    def test_two_level_minimum(self):
        """The two-level solution has S = ½."""
        assert variational_action([2.0, 2.0], [-0.25], 0.0) == pytest.approx(0.5)

    def test_solution_is_stationary(self):
        """Perturbing the solve_alpha solution increases S."""
        mu = 0.4
        for n in range(full_truncation(CHAIN) + 1):
            sol = solve_alpha(CHAIN, mu, n)
            base = variational_action(CHAIN, sol.a, mu)
            for k in range(n + 1):
                shifted = np.array(sol.a)
                shifted[k] += 0.01
                assert variational_action(CHAIN, shifted, mu) > base


class TestRecursionResidual:
    """Tests for alpha_recursion_residual."""

    def test_full_solution_satisfies_recursion(self):
        """The full solution leaves no residual."""
        sol = solve_alpha(CHAIN, 0.3)
        assert alpha_recursion_residual(CHAIN, sol) < 1e-12

    def test_truncated_solution_violates_recursion(self):
        """Truncated solutions leave a nonzero row."""
        sol = solve_alpha(CHAIN, 0.3, 0)
        assert alpha_recursion_residual(CHAIN, sol) > 1e-6


class TestResolvent:
    """Tests for the continued-fraction route."""

    @pytest.mark.parametrize("mu", [0.1, 0.7, 3.0])
    def test_norm_matches_solve_alpha(self, mu):
        """½(R/μ + R′) equals the full-truncation norm."""
        assert agp_norm_from_resolvent(CHAIN, mu) == pytest.approx(
            solve_alpha(CHAIN, mu).norm_sq, rel=1e-9
        )

    @pytest.mark.parametrize("mu", [0.2, 1.5])
    def test_coefficients_match_solve_alpha(self, mu):
        """The resolvent vector reproduces a_k."""
        np.testing.assert_allclose(
            alpha_from_resolvent(CHAIN, mu).a, solve_alpha(CHAIN, mu).a, rtol=1e-9, atol=1e-12
        )

    def test_two_level_value(self):
        """b = (2, 2) at μ = 1 gives 4/81."""
        assert agp_norm_from_resolvent([2.0, 2.0], 1.0) == pytest.approx(4 / 81)

    def test_derivative_matches_finite_difference(self):
        """The propagated ∂μR agrees with a central difference."""
        from krylov_agp.agp import _continued_fraction

        mu, h = 0.6, 1e-5
        _, dr = _continued_fraction(CHAIN, mu)
        r_plus, _ = _continued_fraction(CHAIN, mu + h)
        r_minus, _ = _continued_fraction(CHAIN, mu - h)
        assert dr == pytest.approx((r_plus - r_minus) / (2 * h), rel=1e-7)

    def test_needs_positive_mu(self):
        """μ = 0 is rejected."""
        with pytest.raises(DomainError):
            agp_norm_from_resolvent(CHAIN, 0.0)
        with pytest.raises(DomainError):
            alpha_from_resolvent(CHAIN, 0.0)


class TestImaginaryAlpha:
    """Tests for norm_from_imaginary_alpha."""

    def test_purely_imaginary(self):
        """α = i·a gives Σ a²."""
        assert norm_from_imaginary_alpha([0.5j, -0.25j]) == pytest.approx(0.3125)

    def test_real_coefficients_rejected(self):
        """Real α would give a negative norm."""
        with pytest.raises(DomainError):
            norm_from_imaginary_alpha([0.5, 0.1])

    def test_mixed_phase_rejected(self):
        """Complex α with real and imaginary parts is rejected."""
        with pytest.raises(DomainError):
            norm_from_imaginary_alpha([0.5 + 0.5j])


class TestAssembleAgp:
    """Tests for assemble_agp and gauge_residual."""

    def test_two_level_operator(self):
        """H = Z + X with deformation Z gives A = −Y/4 up to the basis phase."""
        model, o0, _, data = _model_krylov("two_level", {"lambda": 1.0, "delta": 1.0})
        a_op = assemble_agp(data, solve_alpha(data.b, 0.0))
        assert a_op.is_hermitian()
        assert a_op.norm() == pytest.approx(0.25)
        assert gauge_residual(model.hamiltonian, o0, a_op, 0.0) < 1e-12

    def test_two_qubit_operator(self):
        """At ε = 1, λ = 0 the unit-deformation AGP is ±(√2/20)(XY + YX)."""
        _, _, _, data = _model_krylov("two_qubit", {"epsilon": 1.0, "lambda": 0.0})
        a_op = assemble_agp(data, solve_alpha(data.b, 0.0))
        expected = PauliSum.from_labels({"XY": math.sqrt(2) / 20, "YX": math.sqrt(2) / 20})
        assert min((a_op - expected).norm(), (a_op + expected).norm()) < 1e-10

    def test_matches_exact_matrix(self):
        """The assembled AGP equals the exact regularized AGP matrix."""
        model, o0, _, data = _model_krylov("four_body", {"lambda": 0.4})
        mu = model.default_mu
        a_op = assemble_agp(data, solve_alpha(data.b, mu))
        exact = agp_matrix_exact(model.hamiltonian, o0, mu)
        np.testing.assert_allclose(to_dense(a_op).matrix, exact.matrix, atol=1e-8)
        assert gauge_residual(model.hamiltonian, o0, a_op, mu) < 1e-8

    def test_four_body_support(self):
        """The four-body AGP lives on six strings with mirror-equal coefficients."""
        model, _, _, data = _model_krylov("four_body", {"lambda": 0.4})
        a_op = assemble_agp(data, solve_alpha(data.b, model.default_mu))
        terms = {p.label: c for p, c in a_op.terms().items() if abs(c) > 1e-10}
        assert set(terms) == {"XYII", "IIYX", "IXYI", "IYXI", "XZYI", "IYZX"}
        for c in terms.values():
            assert abs(c.imag) < 1e-12
        for left, right in (("XYII", "IIYX"), ("IXYI", "IYXI"), ("XZYI", "IYZX")):
            assert terms[left] == pytest.approx(terms[right], rel=1e-8)

    def test_four_body_without_field(self):
        """At λ = 0 only the nearest-neighbour strings survive, each √2/(16 + μ²)."""
        model, _, _, data = _model_krylov("four_body", {"lambda": 0.0})
        mu = model.default_mu
        np.testing.assert_allclose(data.b, [2 * math.sqrt(2)] * 2, rtol=1e-10)
        a_op = assemble_agp(data, solve_alpha(data.b, mu))
        terms = {p.label: c for p, c in a_op.terms().items() if abs(c) > 1e-10}
        assert set(terms) == {"XYII", "IIYX", "IXYI", "IYXI"}
        values = np.array(list(terms.values())).real
        np.testing.assert_allclose(np.abs(values), math.sqrt(2) / (16 + mu**2), rtol=1e-10)
        assert len(set(np.sign(values))) == 1

    def test_empty_solution(self):
        """The empty ansatz assembles to zero."""
        _, _, _, data = _model_krylov("two_level", {"lambda": 1.0, "delta": 1.0})
        empty = AgpSolution(a=np.zeros(0), mu=0.0, truncation=-1, norm_sq=0.0)
        assert assemble_agp(data, empty).is_zero()

    def test_needs_basis(self):
        """Coefficient-only Krylov data cannot be assembled."""
        _, _, _, data = _model_krylov(
            "two_level", {"lambda": 1.0, "delta": 1.0}, keep_basis=False
        )
        with pytest.raises(DomainError, match="basis"):
            assemble_agp(data, solve_alpha(data.b, 0.0))
