"""Symplectic n-qubit Pauli strings.

A Pauli string is stored as two n-bit masks ``(x, z)``. Qubit ``j`` carries
the letter I, X, Z, Y for ``(x_j, z_j) = (0,0), (1,0), (0,1), (1,1)``.

Qubit ordering: in the textual form the leftmost character is qubit 0, and
qubit 0 is the most significant bit of a computational-basis index. With that
layout the dense matrix of ``"XZ"`` is ``kron(X, Z)`` and bit masks line up
directly with basis indices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator

import numpy as np

MAX_QUBITS = 12

_LETTERS = "IXZY"  # indexed by x + 2*z
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


class DimensionError(ValueError):
    """Operands act on incompatible numbers of qubits."""


class NormalizationError(ValueError):
    """A state vector that must be normalized is not."""


class Commutativity(str, enum.Enum):
    FC = "fc"
    QWC = "qwc"


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int
    z: int

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_QUBITS:
            raise DimensionError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        full = (1 << self.n) - 1
        if self.x & ~full or self.z & ~full or self.x < 0 or self.z < 0:
            raise ValueError(f"bit masks exceed {self.n} qubits: x={self.x:#x}, z={self.z:#x}")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse a string over ``IXYZ``; leftmost character is qubit 0."""
        n = len(label)
        x = z = 0
        for j, ch in enumerate(label.upper()):
            try:
                xb, zb = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            bit = 1 << (n - 1 - j)
            if xb:
                x |= bit
            if zb:
                z |= bit
        return cls(n, x, z)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n, 0, 0)

    @property
    def label(self) -> str:
        return "".join(self.letter(j) for j in range(self.n))

    def __str__(self) -> str:
        return self.label

    def letter(self, qubit: int) -> str:
        shift = self.n - 1 - qubit
        return _LETTERS[((self.x >> shift) & 1) + 2 * ((self.z >> shift) & 1)]

    @property
    def support(self) -> int:
        """Mask of qubits acted on non-trivially."""
        return self.x | self.z

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.x, self.z)

    def to_matrix(self) -> np.ndarray:
        """Dense ``2^n x 2^n`` matrix. Intended for checks on small n."""
        d = 1 << self.n
        cols = np.arange(d)
        mat = np.zeros((d, d), dtype=complex)
        mat[cols ^ self.x, cols] = _phases(self, cols)
        return mat


def all_pauli_strings(n: int) -> Iterator[PauliString]:
    """All 4^n strings, ordered by ``(x, z)``."""
    d = 1 << n
    for x in range(d):
        for z in range(d):
            yield PauliString(n, x, z)


def _check_same_n(p: PauliString, q: PauliString) -> None:
    if p.n != q.n:
        raise DimensionError(f"Pauli strings act on {p.n} and {q.n} qubits")


def commutes_fc(x1: int, z1: int, x2: int, z2: int) -> bool:
    return ((x1 & z2) ^ (x2 & z1)).bit_count() % 2 == 0


def commutes_qwc(x1: int, z1: int, x2: int, z2: int) -> bool:
    overlap = (x1 | z1) & (x2 | z2)
    return ((x1 ^ x2) | (z1 ^ z2)) & overlap == 0


def commutes(p: PauliString, q: PauliString, mode: Commutativity | str = Commutativity.FC) -> bool:
    """Full (symplectic) or qubit-wise commutation test."""
    _check_same_n(p, q)
    if Commutativity(mode) is Commutativity.FC:
        return commutes_fc(p.x, p.z, q.x, q.z)
    return commutes_qwc(p.x, p.z, q.x, q.z)


def parity_signs(indices: np.ndarray, mask: int) -> np.ndarray:
    """``(-1)^{popcount(index & mask)}`` as int8."""
    parity = (np.bitwise_count(indices & mask) & 1).astype(np.int8)
    return 1 - 2 * parity


def _phases(p: PauliString, indices: np.ndarray) -> np.ndarray:
    # P = i^{|x&z|} X^x Z^z, so P|j> = i^{|x&z|} (-1)^{|z&j|} |j ^ x>
    return (1j ** ((p.x & p.z).bit_count() % 4)) * parity_signs(indices, p.z)


def column_phases(p: PauliString) -> np.ndarray:
    """Nonzero entry of each column of the dense matrix; it sits in row ``j ^ x``."""
    return _phases(p, np.arange(1 << p.n))


def _amplitudes(psi) -> np.ndarray:
    return np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)


def apply_pauli(p: PauliString, psi) -> np.ndarray:
    """Return ``P|psi>`` as a new array."""
    amps = _amplitudes(psi)
    d = 1 << p.n
    if amps.shape != (d,):
        raise DimensionError(f"state has shape {amps.shape}, expected ({d},) for {p.n} qubits")
    idx = np.arange(d)
    out = np.empty_like(amps)
    out[idx ^ p.x] = _phases(p, idx) * amps
    return out


def expectation(psi, p: PauliString) -> float:
    amps = _amplitudes(psi)
    norm_sq = float(np.vdot(amps, amps).real)
    if abs(norm_sq - 1.0) > 1e-8:
        raise NormalizationError(f"state has squared norm {norm_sq}")
    value = np.vdot(amps, apply_pauli(p, amps))
    assert abs(value.imag) <= 1e-10, f"non-real Pauli expectation {value}"
    return float(value.real)
