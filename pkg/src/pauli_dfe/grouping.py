"""Non-overlapping commuting families built by sorted insertion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .pauli_core import Commutativity, PauliString
from .states import CoefficientTable

# |b| values closer than this are treated as ties and ordered canonically.
TIE_DECIMALS = 12


@dataclass(frozen=True, eq=False)
class PauliGroup:
    index: int
    paulis: tuple[PauliString, ...]
    coefficients: np.ndarray
    norm_sq: float = field(init=False)
    norm_l1: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.paulis:
            raise ValueError("a Pauli group needs at least one member")
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (len(self.paulis),):
            raise ValueError("one coefficient per member required")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        norm_sq, norm_l1 = _norms(coeffs)
        object.__setattr__(self, "norm_sq", norm_sq)
        object.__setattr__(self, "norm_l1", norm_l1)

    @property
    def n(self) -> int:
        return self.paulis[0].n

    @property
    def size(self) -> int:
        return len(self.paulis)

    @property
    def members(self) -> list[tuple[PauliString, float]]:
        return list(zip(self.paulis, self.coefficients.tolist()))

    @property
    def l1_ratio(self) -> float:
        """``||b||_1^2 / ||b||^4``; large values mean many copies per round."""
        return self.norm_l1**2 / self.norm_sq**2

    def is_commuting(self, mode: Commutativity | str) -> bool:
        x = np.array([p.x for p in self.paulis], dtype=np.int64)
        z = np.array([p.z for p in self.paulis], dtype=np.int64)
        if Commutativity(mode) is Commutativity.FC:
            clash = np.bitwise_count((x[:, None] & z[None, :]) ^ (z[:, None] & x[None, :])) & 1
        else:
            clash = ((x[:, None] ^ x[None, :]) | (z[:, None] ^ z[None, :])) & (
                (x | z)[:, None] & (x | z)[None, :])
        return not clash.any()


def _norms(coeffs: np.ndarray) -> tuple[float, float]:
    return float(np.dot(coeffs, coeffs)), float(np.abs(coeffs).sum())


def group_norms(group: PauliGroup) -> tuple[float, float]:
    """Recompute ``(||b||^2, ||b||_1)`` from the members."""
    return _norms(np.array([b for _, b in group.members]))


@dataclass(frozen=True, eq=False)
class Grouping:
    n: int
    mode: Commutativity
    groups: tuple[PauliGroup, ...]

    def __len__(self) -> int:
        return len(self.groups)

    def __getitem__(self, k: int) -> PauliGroup:
        return self.groups[k]

    @property
    def weights(self) -> np.ndarray:
        """Sampling distribution ``||b_k||^2`` over groups."""
        return np.array([g.norm_sq for g in self.groups])

    def min_l1_ratio(self) -> float:
        return min(g.l1_ratio for g in self.groups)

    def to_json(self) -> str:
        payload = {
            "header": {"mode": self.mode.value, "n": self.n},
            "groups": [
                [{"pauli": p.label, "b": b} for p, b in g.members] for g in self.groups
            ],
        }
        return json.dumps(payload, indent=1)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> Grouping:
        payload = json.loads(text)
        header = payload["header"]
        groups = tuple(
            PauliGroup(
                k,
                tuple(PauliString.from_label(m["pauli"]) for m in members),
                np.array([m["b"] for m in members], dtype=float),
            )
            for k, members in enumerate(payload["groups"])
        )
        return cls(int(header["n"]), Commutativity(header["mode"]), groups)


def _insertion_order(table: CoefficientTable) -> np.ndarray:
    keep = np.flatnonzero(table.values != 0)
    key = np.round(np.abs(table.values[keep]), TIE_DECIMALS)
    # lexsort: last key is primary
    return keep[np.lexsort((table.z[keep], table.x[keep], -key))]


def sorted_insertion(
    table: CoefficientTable, mode: Commutativity | str, isolate_identity: bool = True
) -> Grouping:
    """Greedy grouping by decreasing ``|b|``.

    Each Pauli joins the first existing group whose members all commute with it
    under ``mode``; otherwise it opens a new group. Groups keep creation order
    and members keep insertion order.

    With ``isolate_identity`` the identity string (always the largest ``|b|``)
    forms a group of its own and never absorbs other strings. This is the
    convention behind the reference group counts: ``3^n + 1`` QWC groups for a
    generic full-support state instead of the optimal ``3^n``.
    """
    mode = Commutativity(mode)
    if len(table) == 0:
        raise ValueError("cannot group an empty coefficient table")
    order = _insertion_order(table).tolist()
    isolated: list[list[int]] = []
    if isolate_identity and table.x[order[0]] == 0 and table.z[order[0]] == 0:
        isolated.append([order.pop(0)])
    scan = _scan_qwc if mode is Commutativity.QWC else _scan_fc
    return _build(table, mode, isolated + scan(table, order))


def _scan_qwc(table: CoefficientTable, order: list[int]) -> list[list[int]]:
    # A QWC group has at most one letter per qubit, so it is summarized by the
    # union of its members' masks: a string fits iff it agrees on shared support.
    gx = np.zeros(max(len(order), 1), dtype=np.int64)
    gz = np.zeros_like(gx)
    buckets: list[list[int]] = []
    for i in order:
        x, z = int(table.x[i]), int(table.z[i])
        g = len(buckets)
        clash = ((gx[:g] ^ x) | (gz[:g] ^ z)) & (gx[:g] | gz[:g]) & (x | z)
        fits = np.flatnonzero(clash == 0)
        k = int(fits[0]) if fits.size else g
        if k == g:
            buckets.append([])
        buckets[k].append(i)
        gx[k] |= x
        gz[k] |= z
    return buckets


def _scan_fc(table: CoefficientTable, order: list[int]) -> list[list[int]]:
    # flat member arrays; a group is blocked if any member anticommutes
    mx = np.zeros(max(len(order), 1), dtype=np.int64)
    mz = np.zeros_like(mx)
    owner = np.zeros_like(mx)
    buckets: list[list[int]] = []
    for used, i in enumerate(order):
        x, z = int(table.x[i]), int(table.z[i])
        g = len(buckets)
        anti = np.bitwise_count((mx[:used] & z) ^ (mz[:used] & x)) & 1
        blocked = np.bincount(owner[:used], weights=anti, minlength=g)
        free = np.flatnonzero(blocked == 0)
        k = int(free[0]) if free.size else g
        if k == g:
            buckets.append([])
        buckets[k].append(i)
        mx[used], mz[used], owner[used] = x, z, k
    return buckets


def singleton_grouping(table: CoefficientTable) -> Grouping:
    """Every nonzero Pauli in its own group; the original protocol's view."""
    order = np.flatnonzero(table.values != 0)
    return _build(table, Commutativity.QWC, [[int(i)] for i in order])


def _build(table: CoefficientTable, mode: Commutativity, buckets: list[list[int]]) -> Grouping:
    groups = tuple(
        PauliGroup(
            k,
            tuple(PauliString(table.n, int(table.x[i]), int(table.z[i])) for i in bucket),
            table.values[bucket],
        )
        for k, bucket in enumerate(buckets)
    )
    return Grouping(table.n, mode, groups)
