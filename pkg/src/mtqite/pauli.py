"""Signed Pauli strings and weighted Pauli sums in symplectic (bitmask) form.

A Pauli string on ``n`` qubits is encoded by two integer bitmasks plus a
global phase exponent:

* bit ``q`` of ``x_mask`` set -> an X component on qubit ``q``,
* bit ``q`` of ``z_mask`` set -> a Z component on qubit ``q``,
* both bits set -> Y, neither -> identity,
* the operator carries an overall factor ``i**phase_exp``.

With ``W(x, z)`` denoting the plain tensor product of the single-qubit
operators (Y included with its intrinsic ``i``), the action on a basis
state indexed little-endian (bit ``q`` of the amplitude index is qubit
``q``) is

    W(x, z)|i> = i**popcount(x & z) * (-1)**popcount(i & z) |i ^ x>

which makes products and commutators pure word operations.  Text labels
put qubit 0 leftmost, e.g. ``XIZY`` is X on qubit 0 and Y on qubit 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliString",
    "ObservableSum",
    "DimensionMismatchError",
    "SizeCapError",
    "DENSE_QUBIT_CAP",
    "COEFF_PRUNE_TOL",
]

#: Largest register for which dense export is allowed (oracle support only).
DENSE_QUBIT_CAP = 10

#: Coefficients with magnitude below this are dropped after combination.
COEFF_PRUNE_TOL = 1e-14

_LABEL_TO_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_TO_LABEL = {v: k for k, v in _LABEL_TO_BITS.items()}
_PHASE_VALUES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}


class DimensionMismatchError(ValueError):
    """Operands act on registers of different sizes."""


class SizeCapError(ValueError):
    """Dense export requested beyond the supported register size."""


def _require_same_size(a, b) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(
            f"register size mismatch: {a.n_qubits} vs {b.n_qubits}"
        )


def _product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """i-exponent of W(x1,z1)W(x2,z2) relative to W(x1^x2, z1^z2)."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    g = (x1 & z1).bit_count() + (x2 & z2).bit_count() - (x3 & z3).bit_count()
    g += 2 * (x2 & z1).bit_count()
    return g % 4


@dataclass(frozen=True)
class PauliString:
    """A signed Pauli operator ``i**phase_exp * W(x_mask, z_mask)``."""

    n_qubits: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        mask = (1 << self.n_qubits) - 1
        if self.x_mask & ~mask or self.z_mask & ~mask:
            raise ValueError("mask uses bits beyond n_qubits")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    # -- constructors --------------------------------------------------

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0, 0)

    @classmethod
    def from_label(cls, label: str, phase_exp: int = 0) -> "PauliString":
        """Build from a text label, qubit 0 leftmost (e.g. ``"XIZY"``)."""
        x = z = 0
        for q, ch in enumerate(label):
            try:
                xb, zb = _LABEL_TO_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(label), x, z, phase_exp)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        xb, zb = _LABEL_TO_BITS[letter]
        return cls(n_qubits, xb << qubit, zb << qubit, 0)

    # -- inspection ----------------------------------------------------

    @property
    def label(self) -> str:
        return "".join(
            _BITS_TO_LABEL[(self.x_mask >> q) & 1, (self.z_mask >> q) & 1]
            for q in range(self.n_qubits)
        )

    @property
    def phase(self) -> complex:
        return _PHASE_VALUES[self.phase_exp]

    @property
    def support(self) -> tuple[int, ...]:
        occ = self.x_mask | self.z_mask
        return tuple(q for q in range(self.n_qubits) if (occ >> q) & 1)

    @property
    def weight(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def is_hermitian(self) -> bool:
        # W(x, z) is hermitian, so only the explicit phase matters.
        return self.phase_exp in (0, 2)

    # -- algebra -------------------------------------------------------

    def adjoint(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, -self.phase_exp)

    def mul(self, other: "PauliString") -> "PauliString":
        """Exact signed operator product ``self @ other``."""
        _require_same_size(self, other)
        g = _product_phase(self.x_mask, self.z_mask, other.x_mask, other.z_mask)
        return PauliString(
            self.n_qubits,
            self.x_mask ^ other.x_mask,
            self.z_mask ^ other.z_mask,
            self.phase_exp + other.phase_exp + g,
        )

    __matmul__ = mul

    def commutes(self, other: "PauliString") -> bool:
        """True iff the symplectic inner product is even."""
        _require_same_size(self, other)
        s = (self.x_mask & other.z_mask).bit_count()
        s += (self.z_mask & other.x_mask).bit_count()
        return s % 2 == 0

    def to_dense(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix (little-endian index convention)."""
        if self.n_qubits > DENSE_QUBIT_CAP:
            raise SizeCapError(
                f"dense export capped at {DENSE_QUBIT_CAP} qubits, got {self.n_qubits}"
            )
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        pref = _PHASE_VALUES[(self.phase_exp + (self.x_mask & self.z_mask).bit_count()) % 4]
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & self.z_mask) & 1)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[idx ^ self.x_mask, idx] = pref * signs
        return mat

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase_exp] + self.label


def pack_key(x_mask, z_mask, n_qubits: int):
    """Pack (x, z) masks into one sortable integer key, ``(z << n) | x``."""
    return (np.asarray(z_mask, dtype=np.int64) << n_qubits) | np.asarray(
        x_mask, dtype=np.int64
    )


def unpack_key(key, n_qubits: int):
    key = np.asarray(key, dtype=np.int64)
    mask = (1 << n_qubits) - 1
    return key & mask, key >> n_qubits


def _popcount64(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr).astype(np.int64)


def product_phase_array(x1, z1, x2, z2) -> np.ndarray:
    """Vectorized ``_product_phase`` over int64 mask arrays (broadcasting)."""
    x1 = np.asarray(x1, dtype=np.int64)
    z1 = np.asarray(z1, dtype=np.int64)
    x2 = np.asarray(x2, dtype=np.int64)
    z2 = np.asarray(z2, dtype=np.int64)
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    g = _popcount64(x1 & z1) + _popcount64(x2 & z2) - _popcount64(x3 & z3)
    g = g + 2 * _popcount64(x2 & z1)
    return g % 4


class ObservableSum:
    """A weighted sum of Pauli strings with phases folded into coefficients.

    Terms are kept deduplicated, pruned of negligible coefficients and
    sorted in canonical ``(z_mask, x_mask)`` ascending order, so iteration
    is deterministic everywhere downstream.  Instances are immutable.
    """

    __slots__ = ("n_qubits", "xs", "zs", "coeffs")

    def __init__(self, n_qubits: int, xs, zs, coeffs, *, canonical: bool = False):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if n_qubits > 31:
            raise ValueError("ObservableSum supports at most 31 qubits")
        xs = np.asarray(xs, dtype=np.int64)
        zs = np.asarray(zs, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=complex)
        if not canonical:
            xs, zs, coeffs = _canonicalize(n_qubits, xs, zs, coeffs)
        self.n_qubits = n_qubits
        self.xs = xs
        self.zs = zs
        self.coeffs = coeffs
        for arr in (self.xs, self.zs, self.coeffs):
            arr.setflags(write=False)

    # -- constructors --------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> "ObservableSum":
        return cls(n_qubits, [], [], [])

    @classmethod
    def identity(cls, n_qubits: int, coefficient: complex = 1.0) -> "ObservableSum":
        return cls(n_qubits, [0], [0], [coefficient])

    @classmethod
    def from_terms(
        cls, terms: Iterable[tuple[complex, PauliString]], n_qubits: int | None = None
    ) -> "ObservableSum":
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits required for an empty term list")
            n_qubits = terms[0][1].n_qubits
        xs, zs, cs = [], [], []
        for coeff, string in terms:
            if string.n_qubits != n_qubits:
                raise DimensionMismatchError("terms act on different register sizes")
            xs.append(string.x_mask)
            zs.append(string.z_mask)
            cs.append(coeff * string.phase)
        return cls(n_qubits, xs, zs, cs)

    @classmethod
    def from_label_terms(
        cls, terms: Iterable[tuple[complex, str]], n_qubits: int | None = None
    ) -> "ObservableSum":
        return cls.from_terms(
            [(c, PauliString.from_label(lbl)) for c, lbl in terms], n_qubits
        )

    # -- inspection ----------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def terms(self) -> list[tuple[complex, PauliString]]:
        return [
            (complex(c), PauliString(self.n_qubits, int(x), int(z), 0))
            for c, x, z in zip(self.coeffs, self.xs, self.zs)
        ]

    @property
    def keys(self) -> np.ndarray:
        return pack_key(self.xs, self.zs, self.n_qubits)

    @property
    def support(self) -> tuple[int, ...]:
        occ = 0
        for x, z in zip(self.xs, self.zs):
            occ |= int(x) | int(z)
        return tuple(q for q in range(self.n_qubits) if (occ >> q) & 1)

    def identity_coefficient(self) -> complex:
        if len(self.coeffs) and self.xs[0] == 0 and self.zs[0] == 0:
            return complex(self.coeffs[0])
        return 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= tol))

    def is_antihermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.coeffs.real) <= tol))

    # -- algebra -------------------------------------------------------

    def __add__(self, other: "ObservableSum") -> "ObservableSum":
        _require_same_size(self, other)
        return ObservableSum(
            self.n_qubits,
            np.concatenate([self.xs, other.xs]),
            np.concatenate([self.zs, other.zs]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __sub__(self, other: "ObservableSum") -> "ObservableSum":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "ObservableSum":
        return ObservableSum(
            self.n_qubits, self.xs, self.zs, scalar * self.coeffs, canonical=abs(scalar) > COEFF_PRUNE_TOL
        )

    __mul__ = __rmul__

    def __neg__(self) -> "ObservableSum":
        return (-1.0) * self

    def adjoint(self) -> "ObservableSum":
        return ObservableSum(
            self.n_qubits, self.xs, self.zs, np.conj(self.coeffs), canonical=True
        )

    def __matmul__(self, other: "ObservableSum") -> "ObservableSum":
        """Fully expanded, deduplicated operator product."""
        _require_same_size(self, other)
        if len(self) == 0 or len(other) == 0:
            return ObservableSum.zero(self.n_qubits)
        x3 = (self.xs[:, None] ^ other.xs[None, :]).ravel()
        z3 = (self.zs[:, None] ^ other.zs[None, :]).ravel()
        g = product_phase_array(
            self.xs[:, None], self.zs[:, None], other.xs[None, :], other.zs[None, :]
        ).ravel()
        coeffs = (self.coeffs[:, None] * other.coeffs[None, :]).ravel()
        coeffs = coeffs * np.asarray(_PHASE_VALUES)[g]
        return ObservableSum(self.n_qubits, x3, z3, coeffs)

    def square(self) -> "ObservableSum":
        return self @ self

    def commutator(self, other: "ObservableSum") -> "ObservableSum":
        return self @ other - other @ self

    def anticommutator(self, other: "ObservableSum") -> "ObservableSum":
        return self @ other + other @ self

    def restricted(self, keep: Sequence[int]) -> "ObservableSum":
        """Sub-sum of the terms at the given canonical positions."""
        keep = np.asarray(keep, dtype=int)
        return ObservableSum(
            self.n_qubits, self.xs[keep], self.zs[keep], self.coeffs[keep]
        )

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > DENSE_QUBIT_CAP:
            raise SizeCapError(
                f"dense export capped at {DENSE_QUBIT_CAP} qubits, got {self.n_qubits}"
            )
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        mat = np.zeros((dim, dim), dtype=complex)
        for c, x, z in zip(self.coeffs, self.xs, self.zs):
            pref = c * _PHASE_VALUES[int(x & z).bit_count() % 4]
            signs = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
            mat[idx ^ x, idx] += pref * signs
        return mat

    # -- comparison / rendering ----------------------------------------

    def allclose(self, other: "ObservableSum", tol: float = 1e-12) -> bool:
        if self.n_qubits != other.n_qubits:
            return False
        diff = self - other
        return len(diff) == 0 or bool(np.max(np.abs(diff.coeffs)) <= tol)

    def __str__(self) -> str:
        if len(self) == 0:
            return "0"
        parts = []
        for c, x, z in zip(self.coeffs, self.xs, self.zs):
            label = PauliString(self.n_qubits, int(x), int(z), 0).label
            parts.append(f"{_format_coeff(complex(c))} * {label}")
        return "  ".join(parts)

    def __repr__(self) -> str:
        return f"ObservableSum(n_qubits={self.n_qubits}, terms={len(self)})"


def _format_coeff(c: complex) -> str:
    if abs(c.imag) <= COEFF_PRUNE_TOL:
        return f"{c.real:+.12g}"
    if abs(c.real) <= COEFF_PRUNE_TOL:
        return f"{c.imag:+.12g}j"
    return f"+({c.real:.12g}{c.imag:+.12g}j)"


def _canonicalize(n_qubits, xs, zs, coeffs):
    """Sort by (z, x), combine duplicates, prune tiny coefficients."""
    if xs.size == 0:
        return (
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=complex),
        )
    keys = pack_key(xs, zs, n_qubits)
    uniq, inverse = np.unique(keys, return_inverse=True)
    summed = np.zeros(len(uniq), dtype=complex)
    np.add.at(summed, inverse, coeffs)
    keep = np.abs(summed) > COEFF_PRUNE_TOL
    uniq = uniq[keep]
    xs_out, zs_out = unpack_key(uniq, n_qubits)
    return xs_out, zs_out, summed[keep]
