"""Target states, their Pauli coefficient tables, and depolarized copies."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterator

import numpy as np

from .pauli_core import MAX_QUBITS, DimensionError, NormalizationError, PauliString

if TYPE_CHECKING:
    from .measurement import MeasurementBasis

STATE_KINDS = ("haar", "w", "ghz")
DEFAULT_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n,):
            raise DimensionError(f"{self.n} qubits need {1 << self.n} amplitudes, got {amps.shape}")
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > 1e-10:
            raise NormalizationError(f"state has squared norm {norm_sq}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True)
class NoisyState:
    """Depolarized target ``(1 - p)|psi><psi| + p I/d`` in factored form."""

    target: StateVector
    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarizing probability must lie in [0, 1], got {self.p}")

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def dim(self) -> int:
        return self.target.dim

    def density_matrix(self) -> np.ndarray:
        psi = self.target.amplitudes
        d = self.dim
        return (1 - self.p) * np.outer(psi, psi.conj()) + self.p * np.eye(d) / d


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")


def haar_state(n: int, rng: np.random.Generator) -> StateVector:
    _check_n(n)
    d = 1 << n
    amps = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(n, amps / np.linalg.norm(amps))


def w_state(n: int) -> StateVector:
    _check_n(n)
    amps = np.zeros(1 << n, dtype=complex)
    amps[[1 << j for j in range(n)]] = 1 / math.sqrt(n)
    return StateVector(n, amps)


def ghz_state(n: int) -> StateVector:
    _check_n(n)
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return StateVector(n, amps)


def make_state(kind: str, n: int, seed: int | None = None) -> StateVector:
    """Build a ``haar``, ``w`` or ``ghz`` state. Only ``haar`` uses the seed."""
    if kind == "haar":
        return haar_state(n, np.random.default_rng(seed))
    if kind == "w":
        return w_state(n)
    if kind == "ghz":
        return ghz_state(n)
    raise ValueError(f"unknown state kind {kind!r}; expected one of {STATE_KINDS}")


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Nonzero Pauli coefficients ``b = <psi|P|psi> / sqrt(d)`` of a pure state.

    Stored column-wise: ``x[i], z[i]`` are the masks of the i-th Pauli string and
    ``values[i]`` its coefficient, in ``(x, z)`` order.
    """

    n: int
    x: np.ndarray
    z: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[PauliString]:
        return (PauliString(self.n, int(x), int(z)) for x, z in zip(self.x, self.z))

    def items(self) -> Iterator[tuple[PauliString, float]]:
        for x, z, v in zip(self.x, self.z, self.values):
            yield PauliString(self.n, int(x), int(z)), float(v)

    def __getitem__(self, pauli: PauliString | str) -> float:
        if isinstance(pauli, str):
            pauli = PauliString.from_label(pauli)
        if pauli.n != self.n:
            raise DimensionError(f"table is for {self.n} qubits, got {pauli.n}")
        hit = np.flatnonzero((self.x == pauli.x) & (self.z == pauli.z))
        return float(self.values[hit[0]]) if len(hit) else 0.0

    def as_dict(self) -> dict[str, float]:
        return {p.label: v for p, v in self.items()}

    def sum_of_squares(self) -> float:
        return float(np.dot(self.values, self.values))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pauli", "coefficient"])
            for pauli, value in self.items():
                writer.writerow([pauli.label, repr(value)])

    @classmethod
    def from_csv(cls, path: str | Path) -> CoefficientTable:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty coefficient table")
        paulis = [PauliString.from_label(row["pauli"]) for row in rows]
        return cls(
            paulis[0].n,
            np.array([p.x for p in paulis], dtype=np.int64),
            np.array([p.z for p in paulis], dtype=np.int64),
            np.array([float(row["coefficient"]) for row in rows]),
        )


def _walsh_hadamard(rows: np.ndarray, n: int) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    lead = rows.shape[:-1]
    out = rows.reshape(lead + (2,) * n)
    for axis in range(len(lead), len(lead) + n):
        a0 = np.take(out, 0, axis=axis)
        a1 = np.take(out, 1, axis=axis)
        out = np.stack([a0 + a1, a0 - a1], axis=axis)
    return out.reshape(rows.shape)


def all_expectations(psi: StateVector) -> np.ndarray:
    """``E[x, z] = <psi| P(x, z) |psi>`` for all 4^n Pauli strings.

    For fixed ``x`` the sum over basis states is a Walsh-Hadamard transform of
    ``conj(psi[j ^ x]) psi[j]`` in ``j``. Cost ``O(4^n n)``.
    """
    amps = psi.amplitudes
    d = psi.dim
    idx = np.arange(d)
    products = amps[idx[:, None] ^ idx[None, :]].conj() * amps[None, :]
    transformed = _walsh_hadamard(products, psi.n)
    y_count = np.bitwise_count(idx[:, None] & idx[None, :]) % 4
    values = (1j**y_count) * transformed
    assert np.max(np.abs(values.imag), initial=0.0) <= 1e-10
    return values.real


def pauli_coefficients(psi: StateVector, threshold: float = DEFAULT_THRESHOLD) -> CoefficientTable:
    """Coefficient table of ``psi`` keeping entries with ``|b| > threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    coeffs = all_expectations(psi) / math.sqrt(psi.dim)
    # <psi|I|psi> is 1 up to round-off; pin the identity entry.
    coeffs[0, 0] = 1 / math.sqrt(psi.dim)
    xs, zs = np.nonzero(np.abs(coeffs) > threshold)
    return CoefficientTable(psi.n, xs.astype(np.int64), zs.astype(np.int64), coeffs[xs, zs])


def noisy_coefficients(sigma: NoisyState, table: CoefficientTable) -> np.ndarray:
    """Coefficients ``a = Tr(sigma P) / sqrt(d)`` aligned with ``table``."""
    a = (1 - sigma.p) * table.values
    a[(table.x == 0) & (table.z == 0)] = 1 / math.sqrt(sigma.dim)
    return a


def fidelity_from_tables(sigma: NoisyState, table: CoefficientTable) -> float:
    return float(np.dot(noisy_coefficients(sigma, table), table.values))


def true_fidelity(sigma: NoisyState) -> float:
    return (1 - sigma.p) + sigma.p / sigma.dim


def outcome_probabilities(sigma: NoisyState, basis: MeasurementBasis) -> np.ndarray:
    """Born probabilities ``<r|sigma|r>`` for every vector of ``basis``."""
    if basis.n != sigma.n:
        raise DimensionError(f"basis is for {basis.n} qubits, state has {sigma.n}")
    pure = basis.pure_probabilities(sigma.target.amplitudes)
    probs = (1 - sigma.p) * pure + sigma.p / sigma.dim
    return probs / probs.sum()
