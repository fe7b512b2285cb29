"""Common eigenbases of commuting Pauli groups and simulated outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grouping import PauliGroup
from .pauli_core import Commutativity, PauliString, column_phases

MAX_DIAGONALIZATION_ATTEMPTS = 5
EIGEN_TOL = 1e-8

_SQ2 = 1 / math.sqrt(2)
# columns are the +1 and -1 eigenvectors
_LOCAL_BASES = {
    "Z": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "Y": np.array([[_SQ2, _SQ2], [1j * _SQ2, -1j * _SQ2]], dtype=complex),
}


class NonCommutingGroupError(ValueError):
    pass


class DiagonalizationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Orthonormal basis ``{|r>}`` shared by a group, with ``eigen_table[l, r] = c_l^(r)``.

    Product bases keep only the per-qubit letters; the dense unitary is built on
    request. Entangled bases store the unitary whose columns are the ``|r>``.
    """

    n: int
    kind: str
    eigen_table: np.ndarray
    letters: tuple[str, ...] | None = None
    unitary: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return 1 << self.n

    @cached_property
    def vectors(self) -> np.ndarray:
        if self.unitary is not None:
            return self.unitary
        out = np.ones((1, 1), dtype=complex)
        for letter in self.letters:
            out = np.kron(out, _LOCAL_BASES[letter])
        return out

    def pure_probabilities(self, amplitudes: np.ndarray) -> np.ndarray:
        """``|<r|psi>|^2`` for every basis vector."""
        if self.unitary is not None:
            overlaps = self.unitary.conj().T @ amplitudes
        else:
            overlaps = amplitudes.reshape((2,) * self.n)
            for axis, letter in enumerate(self.letters):
                if letter == "Z":
                    continue
                local = _LOCAL_BASES[letter].conj().T
                overlaps = np.moveaxis(np.tensordot(local, overlaps, axes=([1], [axis])), 0, axis)
            overlaps = overlaps.reshape(-1)
        return np.abs(overlaps) ** 2


@dataclass(frozen=True)
class OutcomeSample:
    counts: np.ndarray  # multiplicity of each outcome index
    total: int

    def as_dict(self) -> dict[int, int]:
        return {int(r): int(c) for r, c in enumerate(self.counts) if c}


def _parity_rows(paulis: tuple[PauliString, ...], n: int) -> np.ndarray:
    outcomes = np.arange(1 << n)
    supports = np.array([p.support for p in paulis], dtype=np.int64)
    parity = (np.bitwise_count(outcomes[None, :] & supports[:, None]) & 1).astype(np.int8)
    return 1 - 2 * parity


def product_basis(group: PauliGroup) -> MeasurementBasis:
    """Tensor-product eigenbasis of a qubit-wise commuting group."""
    n = group.n
    letters = []
    for j in range(n):
        used = {p.letter(j) for p in group.paulis} - {"I"}
        if len(used) > 1:
            raise NonCommutingGroupError(f"qubit {j} carries letters {sorted(used)}")
        letters.append(used.pop() if used else "Z")
    return MeasurementBasis(n, "product", _parity_rows(group.paulis, n), letters=tuple(letters))


def _dense_action(p: PauliString, vectors: np.ndarray) -> np.ndarray:
    # (P v)[i] = phase[i ^ x] v[i ^ x]
    src = np.arange(vectors.shape[0]) ^ p.x
    return column_phases(p)[src][:, None] * vectors[src]


def _generators(paulis: tuple[PauliString, ...]) -> tuple[list[int], list[int]]:
    """Independent generators of a commuting set over GF(2).

    Returns the member indices chosen as generators and, for every member, a
    bitmask of the generators whose product equals it up to sign.
    """
    n = paulis[0].n
    gens: list[int] = []
    pivots: dict[int, tuple[int, int]] = {}  # top bit -> (vector, generator mask)
    combos: list[int] = []
    for l, p in enumerate(paulis):
        vec, combo = (p.x << n) | p.z, 0
        while vec:
            top = vec.bit_length() - 1
            if top not in pivots:
                combo ^= 1 << len(gens)
                pivots[top] = (vec, combo)
                gens.append(l)
                combo = 1 << (len(gens) - 1)
                break
            bvec, bcombo = pivots[top]
            vec ^= bvec
            combo ^= bcombo
        combos.append(combo)
    return gens, combos


def _product_sign(target: PauliString, factors: list[PauliString]) -> int:
    """``s`` with ``prod(factors) = s * target`` for commuting Hermitian Paulis."""
    # track i^e X^x Z^z; X^x1 Z^z1 X^x2 Z^z2 = (-1)^{|z1&x2|} X^{x1^x2} Z^{z1^z2}
    e = x = z = 0
    for f in factors:
        e += (f.x & f.z).bit_count() + 2 * (z & f.x).bit_count()
        x ^= f.x
        z ^= f.z
    assert (x, z) == (target.x, target.z)
    e = (e - (x & z).bit_count()) % 4
    if e % 2:
        raise NonCommutingGroupError("product of commuting Paulis is not Hermitian")
    return 1 - e


def _residual_norms(p: PauliString, vectors: np.ndarray, signs: np.ndarray) -> np.ndarray:
    moved = _dense_action(p, vectors)
    moved -= vectors * signs
    return np.sqrt(np.einsum("ij,ij->j", moved.conj(), moved).real)


def _eigen_rows(group: PauliGroup, vectors: np.ndarray, gens: list[int], combos: list[int]):
    """Eigenvalue table, or ``None`` if ``vectors`` are not joint eigenvectors.

    Generators are checked numerically to ``EIGEN_TOL / len(gens)`` per column;
    every other member is a signed product of generators, so its residual is at
    most the sum of theirs and its row is the signed product of their rows.
    """
    g_rows = np.ones((len(gens), vectors.shape[1]), dtype=np.int8)
    tol = EIGEN_TOL / max(len(gens), 1)
    conj = vectors.conj()
    for j, l in enumerate(gens):
        p = group.paulis[l]
        diag = np.einsum("ij,ij->j", conj, _dense_action(p, vectors)).real
        signs = np.where(diag >= 0, 1, -1).astype(np.int8)
        if np.max(np.abs(diag - signs)) > tol or np.max(_residual_norms(p, vectors, signs)) > tol:
            return None
        g_rows[j] = signs
    rows = np.empty((group.size, vectors.shape[1]), dtype=np.int8)
    for l, (p, combo) in enumerate(zip(group.paulis, combos)):
        used = [j for j in range(len(gens)) if combo >> j & 1]
        sign = _product_sign(p, [group.paulis[gens[j]] for j in used])
        rows[l] = sign * np.prod(g_rows[used], axis=0, dtype=np.int8)
    return rows


def entangled_basis(
    group: PauliGroup, rng: np.random.Generator, attempts: int = MAX_DIAGONALIZATION_ATTEMPTS
) -> MeasurementBasis:
    """Eigenvectors of a random real combination of the group's generators.

    Distinct joint eigenspaces get distinct eigenvalues for generic weights, so
    every eigenvector is a joint eigenvector; the generators' eigenvalues are
    checked and the weights redrawn if a near-degeneracy mixed two eigenspaces.
    """
    d = 1 << group.n
    idx = np.arange(d)
    gens, combos = _generators(group.paulis)
    for _ in range(attempts):
        weights = rng.uniform(0.5, 1.5, size=len(gens)) * rng.choice([-1.0, 1.0], size=len(gens))
        h = np.zeros((d, d), dtype=complex)
        for w, l in zip(weights, gens):
            p = group.paulis[l]
            h[idx ^ p.x, idx] += w * column_phases(p)
        _, vectors = np.linalg.eigh(h)
        rows = _eigen_rows(group, vectors, gens, combos)
        if rows is not None:
            return MeasurementBasis(group.n, "entangled", rows, unitary=vectors)
    raise DiagonalizationError(
        f"group {group.index} ({group.size} members) not diagonalized after {attempts} attempts"
    )


def common_eigenbasis(
    group: PauliGroup,
    mode: Commutativity | str,
    rng: np.random.Generator | int | None = None,
) -> MeasurementBasis:
    """Shared eigenbasis of ``group``.

    Qubit-wise commuting groups (always the case for ``QWC``) get a product
    basis; other ``FC`` groups are diagonalized numerically.
    """
    mode = Commutativity(mode)
    if not group.is_commuting(mode):
        raise NonCommutingGroupError(f"group {group.index} is not {mode.name}-commuting")
    if mode is Commutativity.QWC or group.is_commuting(Commutativity.QWC):
        return product_basis(group)
    return entangled_basis(group, np.random.default_rng(rng))


def _checked_probabilities(probs) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < -1e-12):
        raise ValueError(f"negative probability {probs.min()}")
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"probabilities sum to {total}")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_outcomes(probs, m: int, rng: np.random.Generator | int | None = None) -> OutcomeSample:
    """Aggregate ``m`` i.i.d. categorical draws into per-outcome counts."""
    if m < 1:
        raise ValueError(f"shot count must be positive, got {m}")
    probs = _checked_probabilities(probs)
    counts = np.random.default_rng(rng).multinomial(m, probs)
    return OutcomeSample(counts, int(m))


def sample_outcome_batch(probs, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Counts for ``size`` independent rounds of ``m`` shots each, shape ``(size, d)``."""
    return rng.multinomial(m, _checked_probabilities(probs), size=size)
