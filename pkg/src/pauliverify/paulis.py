"""Bit-packed Pauli strings and exact Pauli-basis decompositions.

Conventions used throughout the package:

* Qubit 0 is the leftmost character of an axis string and the most
  significant bit of a basis-state index, so a mask bit for qubit ``j`` of an
  ``n``-qubit register sits at position ``n - 1 - j`` and masks combine
  directly with amplitude indices.
* A string is stored as two masks: ``xmask`` has a bit set where the axis is
  X or Y, ``zmask`` where it is Z or Y.  The action on a basis state is

      P|b> = coeff * i**y_count * (-1)**popcount(b & zmask) |b ^ xmask>

  which keeps every operation a gather plus a sign vector.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

AXES = "IXYZ"

# Dense simulation caps: pure amplitude vectors up to 16 qubits, density
# matrices and 4**n Pauli transforms up to 8.
PURE_QUBIT_CAP = 16
DENSE_QUBIT_CAP = 8

# Coefficients at or below this magnitude are treated as exactly zero, so the
# sign of a vanishing coefficient is never taken and zero-weight terms are
# never sampled.
DROP_THRESHOLD = 1e-12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class CapExceededError(ValueError):
    """Raised when an operation would exceed the dense-simulation caps."""


def bit_for_qubit(n: int, qubit: int) -> int:
    """Mask bit of ``qubit`` within an ``n``-qubit basis index."""
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    return 1 << (n - 1 - qubit)


def parity_bits(values: np.ndarray, mask: int) -> np.ndarray:
    """Parity of ``popcount(values & mask)`` for an integer array."""
    return (np.bitwise_count(np.bitwise_and(values, mask)) & 1).astype(np.int64)


def sign_vector(dim: int, zmask: int) -> np.ndarray:
    """(-1)**popcount(b & zmask) over all basis indices b."""
    idx = np.arange(dim, dtype=np.int64)
    return 1 - 2 * parity_bits(idx, zmask)


@dataclass(frozen=True)
class PauliString:
    """A real multiple of an n-qubit tensor product of I, X, Y, Z."""

    n: int
    xmask: int = 0
    zmask: int = 0
    coeff: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("PauliString needs at least one qubit")
        limit = 1 << self.n
        if not (0 <= self.xmask < limit and 0 <= self.zmask < limit):
            raise ValueError("mask bits outside the register width")

    @classmethod
    def from_axes(cls, axes: str | Sequence[str], coeff: float = 1.0) -> "PauliString":
        axes = "".join(axes)
        n = len(axes)
        xmask = zmask = 0
        for j, ax in enumerate(axes):
            if ax not in AXES:
                raise ValueError(f"unknown Pauli axis {ax!r}")
            bit = 1 << (n - 1 - j)
            if ax in "XY":
                xmask |= bit
            if ax in "ZY":
                zmask |= bit
        return cls(n, xmask, zmask, coeff)

    @classmethod
    def identity(cls, n: int, coeff: float = 1.0) -> "PauliString":
        return cls(n, 0, 0, coeff)

    @property
    def axes(self) -> str:
        out = []
        for j in range(self.n):
            bit = 1 << (self.n - 1 - j)
            x, z = bool(self.xmask & bit), bool(self.zmask & bit)
            out.append("Y" if x and z else "X" if x else "Z" if z else "I")
        return "".join(out)

    @property
    def y_count(self) -> int:
        return (self.xmask & self.zmask).bit_count()

    @property
    def weight(self) -> int:
        return (self.xmask | self.zmask).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.xmask == 0 and self.zmask == 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.xmask, self.zmask)

    @property
    def sign(self) -> int:
        if abs(self.coeff) <= DROP_THRESHOLD:
            raise ValueError("sign of a vanishing coefficient is undefined")
        return 1 if self.coeff > 0 else -1

    def with_coeff(self, coeff: float) -> "PauliString":
        return replace(self, coeff=coeff)

    def dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix, coefficient included."""
        if self.n > DENSE_QUBIT_CAP:
            raise CapExceededError(f"dense Pauli matrix beyond {DENSE_QUBIT_CAP} qubits")
        dim = 1 << self.n
        idx = np.arange(dim, dtype=np.int64)
        mat = np.zeros((dim, dim), dtype=complex)
        phase = self.coeff * (1j) ** self.y_count
        mat[idx ^ self.xmask, idx] = phase * sign_vector(dim, self.zmask)
        return mat

    def __str__(self) -> str:
        return f"{self.coeff:+g}*{self.axes}"


def merge_pauli_terms(
    terms: Iterable[PauliString], drop_threshold: float = DROP_THRESHOLD
) -> list[PauliString]:
    """Sum like strings, drop vanishing coefficients, sort by axis string.

    The identity string sorts first, which keeps sampling indices stable
    across runs for any fixed operator.
    """
    acc: dict[tuple[int, int], float] = {}
    n = None
    for t in terms:
        if n is None:
            n = t.n
        elif t.n != n:
            raise ValueError("cannot merge Pauli strings of different widths")
        acc[t.key] = acc.get(t.key, 0.0) + t.coeff
    if n is None:
        raise ValueError("no terms to merge")
    kept = [
        PauliString(n, x, z, c) for (x, z), c in acc.items() if abs(c) > drop_threshold
    ]
    return sorted(kept, key=lambda t: t.axes)


# Pauli-transform tensor: _PAULI_BASIS[p] is the matrix of axis AXES[p].
_PAULI_BASIS = np.stack([PAULI_MATRICES[a] for a in AXES])

_AXIS_MASKS = {  # axis index -> (x bit?, z bit?)
    0: (0, 0),
    1: (1, 0),
    2: (1, 1),
    3: (0, 1),
}


def decompose_in_pauli_basis(
    matrix: np.ndarray,
    drop_threshold: float = DROP_THRESHOLD,
    hermitian_tol: float = 1e-8,
) -> list[PauliString]:
    """All Pauli-basis coefficients Tr[M tau] / 2^n of a Hermitian matrix.

    Returns one PauliString per coefficient above ``drop_threshold``, ordered
    with the identity first and then lexicographically in I < X < Y < Z.
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("expected a square matrix")
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError("matrix dimension is not a power of two")
    if n > DENSE_QUBIT_CAP:
        raise CapExceededError(f"Pauli transform beyond {DENSE_QUBIT_CAP} qubits")
    if np.max(np.abs(matrix - matrix.conj().T)) > hermitian_tol:
        raise ValueError("matrix is not Hermitian within tolerance")

    # Contract each qubit's (row, column) index pair with the Pauli tensor;
    # after j steps the axes are (p_0..p_{j-1}, a_j..a_{n-1}, b_j..b_{n-1}).
    arr = matrix.reshape([2] * (2 * n))
    for j in range(n):
        arr = np.tensordot(_PAULI_BASIS, arr, axes=([2, 1], [j, n]))
        arr = np.moveaxis(arr, 0, j)
    coeffs = arr / dim
    if np.max(np.abs(coeffs.imag)) > hermitian_tol:
        raise ValueError("Pauli coefficients acquired an imaginary part")
    coeffs = coeffs.real

    out = []
    for pvec in np.argwhere(np.abs(coeffs) > drop_threshold):
        xmask = zmask = 0
        for j, p in enumerate(pvec):
            xb, zb = _AXIS_MASKS[int(p)]
            bit = 1 << (n - 1 - j)
            xmask |= xb * bit
            zmask |= zb * bit
        out.append(PauliString(n, xmask, zmask, float(coeffs[tuple(pvec)])))
    return out


def pauli_sum_dense(terms: Iterable[PauliString]) -> np.ndarray:
    """Dense matrix of a sum of Pauli strings."""
    terms = list(terms)
    if not terms:
        raise ValueError("no terms")
    out = terms[0].dense()
    for t in terms[1:]:
        out += t.dense()
    return out
