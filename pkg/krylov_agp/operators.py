"""
Operator algebra for spin systems.

Two interchangeable backends share the ``OperatorSum`` interface:

- ``PauliSum``: sparse linear combination of Pauli strings stored as
  (x, z) bitmask arrays, with exact phase tracking in {±1, ±i}.
- ``DenseOperator``: a square complex matrix, used for spin-S models that are
  not fixed-weight Pauli sums and as the bridge to exact diagonalization.

All operators are immutable. The inner product is the infinite-temperature
trace product (A|B) = Tr(A†B)/dim, under which every Pauli string has norm 1.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from krylov_agp.errors import DimensionError, ResourceError

__all__ = [
    "DENSE_CAP_SITES",
    "DROP_TOL",
    "DenseOperator",
    "OperatorSum",
    "PauliString",
    "PauliSum",
    "commutator",
    "frobenius_norm",
    "inner_product",
    "linear_combination",
    "liouvillian_apply",
    "pauli_multiply",
    "to_dense",
    "to_pauli",
]

DROP_TOL = 1e-14
DENSE_CAP_SITES = 12
MAX_SPARSE_SITES = 31

_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j], dtype=np.complex128)
_LABELS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {label: bits for bits, label in _LABELS.items()}


@dataclass(frozen=True, slots=True)
class PauliString:
    """
    A tensor product of single-site Paulis.

    Bit i of ``x_mask``/``z_mask`` describes site i; both bits set means Y.
    Labels are written site 0 first, so ``"XZ"`` is X on site 0, Z on site 1.
    """

    x_mask: int
    z_mask: int
    n_sites: int

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise DimensionError(f"n_sites must be positive, got {self.n_sites}")
        limit = 1 << self.n_sites
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise DimensionError(
                f"masks ({self.x_mask:#x}, {self.z_mask:#x}) exceed {self.n_sites} sites"
            )

    @classmethod
    def identity(cls, n_sites: int) -> PauliString:
        return cls(0, 0, n_sites)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse a label such as ``"XIZY"``."""
        x_mask = z_mask = 0
        for site, char in enumerate(label.upper()):
            try:
                x_bit, z_bit = _BITS[char]
            except KeyError:
                raise ValueError(f"invalid Pauli label character {char!r}") from None
            x_mask |= x_bit << site
            z_mask |= z_bit << site
        return cls(x_mask, z_mask, len(label))

    @classmethod
    def single(cls, op: str, site: int, n_sites: int) -> PauliString:
        """One Pauli ``op`` (X, Y or Z) on ``site``, identity elsewhere."""
        if not 0 <= site < n_sites:
            raise DimensionError(f"site {site} outside chain of {n_sites}")
        x_bit, z_bit = _BITS[op.upper()]
        return cls(x_bit << site, z_bit << site, n_sites)

    @property
    def label(self) -> str:
        return "".join(
            _LABELS[((self.x_mask >> i) & 1, (self.z_mask >> i) & 1)]
            for i in range(self.n_sites)
        )

    @property
    def weight(self) -> int:
        """Number of non-identity sites."""
        return (self.x_mask | self.z_mask).bit_count()

    def commutes_with(self, other: PauliString) -> bool:
        _check_sites(self, other)
        overlap = (self.x_mask & other.z_mask).bit_count()
        overlap += (self.z_mask & other.x_mask).bit_count()
        return overlap % 2 == 0

    def __str__(self) -> str:
        return self.label


def _check_sites(p: PauliString, q: PauliString) -> None:
    if p.n_sites != q.n_sites:
        raise DimensionError(f"site count mismatch: {p.n_sites} vs {q.n_sites}")


def pauli_multiply(p: PauliString, q: PauliString) -> tuple[complex, PauliString]:
    """
    Multiply two Pauli strings exactly.

    With σ(x, z) = i^{xz} X^x Z^z on every site, the product picks up
    i^{x₁z₁ + x₂z₂ − x₃z₃ + 2 z₁x₂} summed over sites.

    Returns:
        (phase, r) with p·q = phase·r and phase in {1, i, -1, -i}
    """
    _check_sites(p, q)
    x3 = p.x_mask ^ q.x_mask
    z3 = p.z_mask ^ q.z_mask
    exponent = (
        (p.x_mask & p.z_mask).bit_count()
        + (q.x_mask & q.z_mask).bit_count()
        - (x3 & z3).bit_count()
        + 2 * (p.z_mask & q.x_mask).bit_count()
    ) % 4
    return complex(_PHASES[exponent]), PauliString(x3, z3, p.n_sites)


class OperatorSum(ABC):
    """Common interface of the sparse and dense operator backends."""

    backend: ClassVar[str]

    @property
    @abstractmethod
    def dim(self) -> int:
        """Hilbert-space dimension."""

    @abstractmethod
    def _combine(self, other: OperatorSum, scale: complex) -> OperatorSum:
        """Return self + scale·other."""

    @abstractmethod
    def scaled(self, factor: complex) -> OperatorSum: ...

    @abstractmethod
    def dagger(self) -> OperatorSum: ...

    @abstractmethod
    def zeros_like(self) -> OperatorSum: ...

    @abstractmethod
    def trace(self) -> complex:
        """Normalized trace Tr(O)/dim."""

    @abstractmethod
    def _inner(self, other: OperatorSum) -> complex: ...

    @abstractmethod
    def _commutator(self, other: OperatorSum) -> OperatorSum: ...

    @abstractmethod
    def _product(self, other: OperatorSum) -> OperatorSum: ...

    @abstractmethod
    def is_zero(self, tol: float = DROP_TOL) -> bool: ...

    def _check_compatible(self, other: OperatorSum) -> None:
        if type(self) is not type(other):
            raise DimensionError(f"backend mismatch: {self.backend} vs {other.backend}")
        if self.dim != other.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: OperatorSum) -> OperatorSum:
        self._check_compatible(other)
        return self._combine(other, 1.0)

    def __sub__(self, other: OperatorSum) -> OperatorSum:
        self._check_compatible(other)
        return self._combine(other, -1.0)

    def __neg__(self) -> OperatorSum:
        return self.scaled(-1.0)

    def __mul__(self, factor: complex) -> OperatorSum:
        return self.scaled(factor)

    __rmul__ = __mul__

    def __truediv__(self, factor: complex) -> OperatorSum:
        return self.scaled(1.0 / factor)

    def __matmul__(self, other: OperatorSum) -> OperatorSum:
        self._check_compatible(other)
        return self._product(other)

    def norm(self) -> float:
        """Trace-normalized Frobenius norm √(O|O)."""
        return math.sqrt(max(self._inner(self).real, 0.0))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return (self - self.dagger()).norm() <= tol * max(1.0, self.norm())

    def is_anti_hermitian(self, tol: float = 1e-10) -> bool:
        return (self + self.dagger()).norm() <= tol * max(1.0, self.norm())


class PauliSum(OperatorSum):
    """
    Sparse Pauli-string expansion Σ c_P P.

    Terms are kept sorted by the packed key (x << n_sites) | z, without
    duplicates, and with every |c_P| above the drop tolerance.
    """

    backend = "sparse-pauli"
    __slots__ = ("n_sites", "x", "z", "coeffs")

    def __init__(
        self,
        n_sites: int,
        x: np.ndarray | Iterable[int] = (),
        z: np.ndarray | Iterable[int] = (),
        coeffs: np.ndarray | Iterable[complex] = (),
        *,
        drop_tol: float = DROP_TOL,
    ):
        if not 1 <= n_sites <= MAX_SPARSE_SITES:
            raise DimensionError(f"sparse backend supports 1..{MAX_SPARSE_SITES} sites")
        x_arr = np.asarray(x, dtype=np.uint64).ravel()
        z_arr = np.asarray(z, dtype=np.uint64).ravel()
        c_arr = np.asarray(coeffs, dtype=np.complex128).ravel()
        if not (x_arr.shape == z_arr.shape == c_arr.shape):
            raise DimensionError("x, z and coeffs must have equal length")
        limit = np.uint64(1 << n_sites)
        if x_arr.size and (x_arr.max() >= limit or z_arr.max() >= limit):
            raise DimensionError(f"masks exceed {n_sites} sites")
        self.n_sites = n_sites
        self.x, self.z, self.coeffs = _canonicalize(n_sites, x_arr, z_arr, c_arr, drop_tol)
        for arr in (self.x, self.z, self.coeffs):
            arr.flags.writeable = False

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[PauliString, complex] | Iterable[tuple[complex, PauliString]],
        n_sites: int | None = None,
    ) -> PauliSum:
        """Build from ``{PauliString: coeff}`` or an iterable of ``(coeff, PauliString)``."""
        pairs = (
            [(c, p) for p, c in terms.items()] if isinstance(terms, Mapping) else list(terms)
        )
        if n_sites is None:
            if not pairs:
                raise DimensionError("n_sites is required for an empty sum")
            n_sites = pairs[0][1].n_sites
        for _, p in pairs:
            if p.n_sites != n_sites:
                raise DimensionError(f"term {p} does not act on {n_sites} sites")
        return cls(
            n_sites,
            [p.x_mask for _, p in pairs],
            [p.z_mask for _, p in pairs],
            [c for c, _ in pairs],
        )

    @classmethod
    def from_labels(cls, labels: Mapping[str, complex]) -> PauliSum:
        return cls.from_terms({PauliString.from_label(k): v for k, v in labels.items()})

    @classmethod
    def zero(cls, n_sites: int) -> PauliSum:
        return cls(n_sites)

    @classmethod
    def identity(cls, n_sites: int) -> PauliSum:
        return cls(n_sites, [0], [0], [1.0])

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def __len__(self) -> int:
        return int(self.coeffs.size)

    def __repr__(self) -> str:
        shown = ", ".join(f"{c:+.4g}*{p}" for p, c in list(self.terms().items())[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"PauliSum({shown}{more})"

    def terms(self) -> dict[PauliString, complex]:
        return {
            PauliString(int(x), int(z), self.n_sites): complex(c)
            for x, z, c in zip(self.x, self.z, self.coeffs, strict=True)
        }

    def coefficient(self, p: PauliString) -> complex:
        if p.n_sites != self.n_sites:
            raise DimensionError(f"{p} does not act on {self.n_sites} sites")
        keys = self._keys()
        key = np.uint64((p.x_mask << self.n_sites) | p.z_mask)
        idx = int(np.searchsorted(keys, key))
        if idx < keys.size and keys[idx] == key:
            return complex(self.coeffs[idx])
        return 0j

    def _keys(self) -> np.ndarray:
        return (self.x << np.uint64(self.n_sites)) | self.z

    def _combine(self, other: OperatorSum, scale: complex) -> PauliSum:
        assert isinstance(other, PauliSum)
        return PauliSum(
            self.n_sites,
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.coeffs, scale * other.coeffs]),
        )

    def scaled(self, factor: complex) -> PauliSum:
        return PauliSum(self.n_sites, self.x, self.z, factor * self.coeffs)

    def dagger(self) -> PauliSum:
        # Pauli strings are Hermitian.
        return PauliSum(self.n_sites, self.x, self.z, self.coeffs.conj())

    def zeros_like(self) -> PauliSum:
        return PauliSum.zero(self.n_sites)

    def trace(self) -> complex:
        return self.coefficient(PauliString.identity(self.n_sites))

    def is_zero(self, tol: float = DROP_TOL) -> bool:
        return not np.any(np.abs(self.coeffs) > tol)

    def _inner(self, other: OperatorSum) -> complex:
        assert isinstance(other, PauliSum)
        _, ia, ib = np.intersect1d(
            self._keys(), other._keys(), assume_unique=True, return_indices=True
        )
        return complex(np.sum(self.coeffs[ia].conj() * other.coeffs[ib]))

    def _pairs(self, other: PauliSum) -> tuple[np.ndarray, ...]:
        xa, za = self.x[:, None], self.z[:, None]
        xb, zb = other.x[None, :], other.z[None, :]
        x3 = xa ^ xb
        z3 = za ^ zb
        exponent = (
            np.bitwise_count(xa & za).astype(np.int64)
            + np.bitwise_count(xb & zb)
            - np.bitwise_count(x3 & z3)
            + 2 * np.bitwise_count(za & xb).astype(np.int64)
        ) % 4
        values = self.coeffs[:, None] * other.coeffs[None, :] * _PHASES[exponent]
        anticommute = (
            np.bitwise_count(xa & zb).astype(np.int64) + np.bitwise_count(za & xb)
        ) % 2 == 1
        return x3, z3, values, anticommute

    def _product(self, other: OperatorSum) -> PauliSum:
        assert isinstance(other, PauliSum)
        if not len(self) or not len(other):
            return self.zeros_like()
        x3, z3, values, _ = self._pairs(other)
        return PauliSum(self.n_sites, x3, z3, values)

    def _commutator(self, other: OperatorSum) -> PauliSum:
        assert isinstance(other, PauliSum)
        if not len(self) or not len(other):
            return self.zeros_like()
        # Commuting string pairs cancel; anticommuting ones contribute 2·p·q.
        x3, z3, values, anticommute = self._pairs(other)
        return PauliSum(self.n_sites, x3[anticommute], z3[anticommute], 2.0 * values[anticommute])


def _canonicalize(
    n_sites: int, x: np.ndarray, z: np.ndarray, coeffs: np.ndarray, drop_tol: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not x.size:
        return x, z, coeffs
    keys = (x << np.uint64(n_sites)) | z
    unique, inverse = np.unique(keys, return_inverse=True)
    total = np.bincount(inverse, weights=coeffs.real, minlength=unique.size) + 1j * np.bincount(
        inverse, weights=coeffs.imag, minlength=unique.size
    )
    keep = np.abs(total) > drop_tol
    unique = unique[keep]
    mask = np.uint64((1 << n_sites) - 1)
    return unique >> np.uint64(n_sites), unique & mask, total[keep].astype(np.complex128)


class DenseOperator(OperatorSum):
    """A square complex matrix with the ``OperatorSum`` interface."""

    backend = "dense"
    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        arr = np.array(matrix, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"dense operator must be square, got shape {arr.shape}")
        arr.flags.writeable = False
        self.matrix = arr

    @classmethod
    def identity(cls, dim: int) -> DenseOperator:
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DenseOperator(dim={self.dim})"

    def _combine(self, other: OperatorSum, scale: complex) -> DenseOperator:
        assert isinstance(other, DenseOperator)
        return DenseOperator(self.matrix + scale * other.matrix)

    def scaled(self, factor: complex) -> DenseOperator:
        return DenseOperator(factor * self.matrix)

    def dagger(self) -> DenseOperator:
        return DenseOperator(self.matrix.conj().T)

    def zeros_like(self) -> DenseOperator:
        return DenseOperator(np.zeros_like(self.matrix))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix)) / self.dim

    def is_zero(self, tol: float = DROP_TOL) -> bool:
        return not np.any(np.abs(self.matrix) > tol)

    def _inner(self, other: OperatorSum) -> complex:
        assert isinstance(other, DenseOperator)
        return complex(np.vdot(self.matrix, other.matrix)) / self.dim

    def _product(self, other: OperatorSum) -> DenseOperator:
        assert isinstance(other, DenseOperator)
        return DenseOperator(self.matrix @ other.matrix)

    def _commutator(self, other: OperatorSum) -> DenseOperator:
        assert isinstance(other, DenseOperator)
        return DenseOperator(self.matrix @ other.matrix - other.matrix @ self.matrix)


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """[a, b] = a·b − b·a on either backend."""
    a._check_compatible(b)
    return a._commutator(b)


def liouvillian_apply(h: OperatorSum, o: OperatorSum) -> OperatorSum:
    """ℒ(o) = [h, o]."""
    return commutator(h, o)


def inner_product(a: OperatorSum, b: OperatorSum) -> complex:
    """(a|b) = Tr(a†b)/dim."""
    a._check_compatible(b)
    return a._inner(b)


def frobenius_norm(o: OperatorSum) -> float:
    """Trace-normalized Frobenius norm, equal to ‖o‖_F/√dim."""
    return o.norm()


def to_dense(o: OperatorSum, cap_sites: int = DENSE_CAP_SITES) -> DenseOperator:
    """
    Materialize an operator as a matrix.

    Basis state index b carries site i in bit i; Z|0⟩ = |0⟩.

    Raises:
        ResourceError: the sum acts on more than ``cap_sites`` sites
    """
    if isinstance(o, DenseOperator):
        return o
    assert isinstance(o, PauliSum)
    if o.n_sites > cap_sites:
        raise ResourceError(f"dense conversion capped at {cap_sites} sites, got {o.n_sites}")
    dim = o.dim
    basis = np.arange(dim, dtype=np.uint64)
    matrix = np.zeros((dim, dim), dtype=np.complex128)
    for x, z, c in zip(o.x, o.z, o.coeffs, strict=True):
        sign = 1.0 - 2.0 * (np.bitwise_count(basis & z) % 2)
        phase = _PHASES[int(np.bitwise_count(x & z)) % 4]
        matrix[(basis ^ x).astype(np.intp), basis.astype(np.intp)] += c * phase * sign
    return DenseOperator(matrix)


def to_pauli(o: OperatorSum, max_sites: int = 8) -> PauliSum:
    """Project a dense 2^L×2^L matrix onto Pauli strings, c_P = Tr(P·O)/2^L."""
    if isinstance(o, PauliSum):
        return o
    assert isinstance(o, DenseOperator)
    n_sites = o.dim.bit_length() - 1
    if 1 << n_sites != o.dim:
        raise DimensionError(f"dimension {o.dim} is not a power of two")
    if n_sites > max_sites:
        raise ResourceError(f"Pauli projection capped at {max_sites} sites")
    basis = np.arange(o.dim, dtype=np.uint64)
    xs, zs, cs = [], [], []
    for x in range(o.dim):
        rows = basis ^ np.uint64(x)
        # ⟨b⊕x|O|b⟩ paired with ⟨b|P|b⊕x⟩.
        elements = o.matrix[rows.astype(np.intp), basis.astype(np.intp)]
        for z in range(o.dim):
            sign = 1.0 - 2.0 * (np.bitwise_count(rows & np.uint64(z)) % 2)
            phase = _PHASES[(x & z).bit_count() % 4]
            value = phase * np.dot(sign, elements) / o.dim
            if abs(value) > DROP_TOL:
                xs.append(x)
                zs.append(z)
                cs.append(value)
    return PauliSum(n_sites, xs, zs, cs)


def linear_combination(ops: list[OperatorSum], coeffs: Iterable[complex]) -> OperatorSum:
    """Σ c_k·ops[k] in a single pass over the backend storage."""
    weights = np.asarray(list(coeffs), dtype=np.complex128)
    if not ops or len(ops) != weights.size:
        raise DimensionError("ops and coeffs must be non-empty and of equal length")
    first = ops[0]
    for op in ops[1:]:
        first._check_compatible(op)
    if isinstance(first, DenseOperator):
        stack = np.stack([op.matrix for op in ops])  # type: ignore[attr-defined]
        return DenseOperator(np.tensordot(weights, stack, axes=1))
    assert isinstance(first, PauliSum)
    sums: list[PauliSum] = ops  # type: ignore[assignment]
    return PauliSum(
        first.n_sites,
        np.concatenate([s.x for s in sums]),
        np.concatenate([s.z for s in sums]),
        np.concatenate([w * s.coeffs for w, s in zip(weights, sums, strict=True)]),
    )
