"""Tests for operators module."""

import numpy as np
import pytest

from krylov_agp.errors import DimensionError, ResourceError
from krylov_agp.operators import (
    DenseOperator,
    PauliString,
    PauliSum,
    commutator,
    frobenius_norm,
    inner_product,
    liouvillian_apply,
    linear_combination,
    pauli_multiply,
    to_dense,
    to_pauli,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


class TestPauliString:
    """Tests for PauliString."""

    def test_label_round_trip(self):
        """Labels parse and print site 0 first."""
        p = PauliString.from_label("XIZY")
        assert p.label == "XIZY"
        assert p.weight == 3

    def test_invalid_label(self):
        """Unknown characters are rejected."""
        with pytest.raises(ValueError):
            PauliString.from_label("XQ")

    def test_mask_outside_sites(self):
        """Masks wider than the chain raise DimensionError."""
        with pytest.raises(DimensionError):
            PauliString(0b100, 0, 2)

    @pytest.mark.parametrize(
        ("left", "right", "phase", "result"),
        [
            ("X", "Y", 1j, "Z"),
            ("Y", "X", -1j, "Z"),
            ("Y", "Z", 1j, "X"),
            ("Z", "X", 1j, "Y"),
            ("X", "X", 1, "I"),
        ],
    )
    def test_single_site_products(self, left, right, phase, result):
        """Single-site products follow the Pauli algebra."""
        p, q = PauliString.from_label(left), PauliString.from_label(right)
        got_phase, got = pauli_multiply(p, q)
        assert got_phase == pytest.approx(phase)
        assert got.label == result

    def test_multiply_matches_matrices(self):
        """Multi-site products agree with Kronecker products."""
        p, q = PauliString.from_label("XYZ"), PauliString.from_label("ZZX")
        phase, r = pauli_multiply(p, q)
        dense_p = to_dense(PauliSum.from_terms({p: 1.0})).matrix
        dense_q = to_dense(PauliSum.from_terms({q: 1.0})).matrix
        dense_r = to_dense(PauliSum.from_terms({r: 1.0})).matrix
        np.testing.assert_allclose(dense_p @ dense_q, phase * dense_r, atol=1e-12)

    def test_commutes_with(self):
        """XX commutes with YY, X does not commute with Z."""
        assert PauliString.from_label("XX").commutes_with(PauliString.from_label("YY"))
        assert not PauliString.from_label("XI").commutes_with(PauliString.from_label("ZI"))

    def test_site_mismatch(self):
        """Products across chain lengths raise DimensionError."""
        with pytest.raises(DimensionError):
            pauli_multiply(PauliString.from_label("X"), PauliString.from_label("XX"))


class TestPauliSum:
    """Tests for PauliSum."""

    def test_duplicates_merge_and_cancel(self):
        """Repeated strings are summed and zero coefficients dropped."""
        z = PauliString.from_label("ZI")
        s = PauliSum.from_terms([(1.0, z), (2.0, z), (0.5, PauliString.from_label("XI"))])
        assert len(s) == 2
        assert s.coefficient(z) == 3.0
        assert (s - s).is_zero()

    def test_single_site_commutator(self):
        """[X, Y] = 2iZ."""
        c = commutator(PauliSum.from_labels({"X": 1.0}), PauliSum.from_labels({"Y": 1.0}))
        assert c.terms() == {PauliString.from_label("Z"): 2j}

    def test_commutator_matches_dense(self, random_pauli_sum):
        """Sparse commutators agree with dense matrix commutators."""
        a, b = random_pauli_sum(3, 6), random_pauli_sum(3, 7)
        sparse = to_dense(commutator(a, b)).matrix
        da, db = to_dense(a).matrix, to_dense(b).matrix
        np.testing.assert_allclose(sparse, da @ db - db @ da, atol=1e-12)

    def test_liouvillian_on_two_level(self):
        """ℒσᶻ = −2iλσʸ for H = λσˣ + Δσᶻ."""
        h = PauliSum.from_labels({"X": 0.7, "Z": 1.3})
        out = liouvillian_apply(h, PauliSum.from_labels({"Z": 1.0}))
        assert out.terms() == pytest.approx({PauliString.from_label("Y"): -1.4j})

    def test_liouvillian_is_hermitian(self, random_pauli_sum):
        """(A|ℒB) = (ℒA|B) for a Hermitian sum H."""
        h = random_pauli_sum(3, 6)
        a, b = random_pauli_sum(3, 5), random_pauli_sum(3, 5)
        left = inner_product(a, liouvillian_apply(h, b))
        right = inner_product(liouvillian_apply(h, a), b)
        assert left == pytest.approx(right)

    def test_product_matches_dense(self, random_pauli_sum):
        """Operator products agree with dense products."""
        a, b = random_pauli_sum(2, 5), random_pauli_sum(2, 5)
        np.testing.assert_allclose(
            to_dense(a @ b).matrix, to_dense(a).matrix @ to_dense(b).matrix, atol=1e-12
        )

    def test_inner_product_is_trace_normalized(self, random_pauli_sum):
        """(A|B) equals Tr(A†B)/dim."""
        a, b = random_pauli_sum(3, 6), random_pauli_sum(3, 6)
        da, db = to_dense(a).matrix, to_dense(b).matrix
        expected = np.trace(da.conj().T @ db) / 8
        assert inner_product(a, b) == pytest.approx(expected)

    def test_pauli_strings_have_unit_norm(self):
        """Every Pauli string has norm one."""
        assert frobenius_norm(PauliSum.from_labels({"XZY": 1.0})) == pytest.approx(1.0)
        assert frobenius_norm(PauliSum.from_labels({"XII": 1.0, "IZI": 1.0})) == pytest.approx(
            np.sqrt(2.0)
        )

    def test_hermiticity(self):
        """Real coefficients give Hermitian sums, imaginary ones anti-Hermitian."""
        assert PauliSum.from_labels({"XY": 0.5, "ZI": 1.0}).is_hermitian()
        assert PauliSum.from_labels({"XY": 0.5j}).is_anti_hermitian()

    def test_backend_mismatch(self):
        """Mixing backends raises DimensionError."""
        with pytest.raises(DimensionError):
            PauliSum.from_labels({"X": 1.0}) + DenseOperator(X)

    def test_scalar_arithmetic(self):
        """Scalars multiply from either side and divide."""
        s = PauliSum.from_labels({"Z": 2.0})
        assert (0.5 * s).coefficient(PauliString.from_label("Z")) == 1.0
        assert (s / 4).coefficient(PauliString.from_label("Z")) == 0.5


class TestConversions:
    """Tests for dense and Pauli conversions."""

    def test_single_site_matrices(self):
        """to_dense reproduces the Pauli matrices."""
        for label, matrix in (("X", X), ("Y", Y), ("Z", Z)):
            np.testing.assert_allclose(to_dense(PauliSum.from_labels({label: 1.0})).matrix, matrix)

    def test_to_pauli_inverts_to_dense(self, random_pauli_sum):
        """Projecting a dense matrix recovers the Pauli coefficients."""
        s = random_pauli_sum(3, 6)
        back = to_pauli(to_dense(s))
        assert (back - s).norm() < 1e-12

    def test_dense_cap(self):
        """to_dense refuses chains above the site cap."""
        with pytest.raises(ResourceError):
            to_dense(PauliSum.from_labels({"X" * 13: 1.0}))

    def test_to_pauli_needs_power_of_two(self):
        """Non-qubit dimensions cannot be projected on Pauli strings."""
        with pytest.raises(DimensionError):
            to_pauli(DenseOperator(np.eye(3)))


class TestLinearCombination:
    """Tests for linear_combination."""

    def test_sparse(self):
        """Weights apply term by term on PauliSum."""
        a, b = PauliSum.from_labels({"XI": 1.0}), PauliSum.from_labels({"IZ": 1.0})
        combo = linear_combination([a, b], [2.0, 1j])
        assert combo.terms() == {
            PauliString.from_label("XI"): 2.0,
            PauliString.from_label("IZ"): 1j,
        }

    def test_dense(self):
        """Weights apply to the stacked matrices on DenseOperator."""
        combo = linear_combination([DenseOperator(X), DenseOperator(Z)], [1.0, -1.0])
        np.testing.assert_allclose(combo.matrix, X - Z)

    def test_length_mismatch(self):
        """Mismatched operator and weight counts raise DimensionError."""
        with pytest.raises(DimensionError):
            linear_combination([DenseOperator(X)], [1.0, 2.0])
