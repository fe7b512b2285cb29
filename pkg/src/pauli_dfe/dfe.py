"""Direct fidelity estimation: the Pauli-sampling protocol and its grouped variant.

Both protocols share one code path. The original protocol samples single Pauli
strings with probability ``b^2``; that is exactly the grouped protocol run on
the trivial grouping where every string is its own group, because the grouped
copy count and estimator reduce to the single-string ones on singletons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grouping import Grouping, PauliGroup, singleton_grouping, sorted_insertion
from .measurement import (
    MeasurementBasis,
    OutcomeSample,
    common_eigenbasis,
    sample_outcome_batch,
)
from .pauli_core import Commutativity, DimensionError
from .states import (
    CoefficientTable,
    NoisyState,
    StateVector,
    outcome_probabilities,
    pauli_coefficients,
    true_fidelity,
)

MODES = ("original", "grouped_qwc", "grouped_fc")
# joint: one POVM outcome per shot fixes every member's eigenvalue at once.
# marginal: each member's eigenvalue is drawn independently from its own
#   marginal, dropping correlations between members of a group.
SHOT_MODELS = ("joint", "marginal")
_MODE_ALIASES = {"qwc": "grouped_qwc", "fc": "grouped_fc", "dfe": "original"}

# seed substreams
_SAMPLING_STREAM = 0
_BASIS_STREAM = 1
_OUTCOME_STREAM = 2


def normalize_mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


def default_ell(epsilon: float, delta: float) -> int:
    raw = 1.0 / (epsilon**2 * delta)
    # guard against 1/(0.05^2 * 0.05) = 7999.999999999998
    return math.ceil(raw * (1 - 1e-12))


@dataclass(frozen=True)
class DfeConfig:
    epsilon: float = 0.05
    delta: float = 0.05
    ell: int | None = None
    mode: str = "original"
    seed: int = 0
    shot_model: str = "joint"

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.ell is None:
            object.__setattr__(self, "ell", default_ell(self.epsilon, self.delta))
        elif self.ell < 1:
            raise ValueError(f"ell must be positive, got {self.ell}")
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if self.shot_model not in SHOT_MODELS:
            raise ValueError(f"unknown shot model {self.shot_model!r}; expected one of {SHOT_MODELS}")

    @property
    def commutativity(self) -> Commutativity | None:
        return {
            "grouped_qwc": Commutativity.QWC,
            "grouped_fc": Commutativity.FC,
        }.get(self.mode)


@dataclass(frozen=True, eq=False)
class DfeResult:
    config: DfeConfig
    n: int
    p: float
    estimate: float
    true_fidelity: float
    num_groups: int
    group_indices: np.ndarray  # sampled group per round
    copies: np.ndarray  # m per round
    values: np.ndarray  # X estimate per round
    total_copies: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total_copies", int(self.copies.sum()))

    @property
    def rounds(self) -> list[tuple[int, int, float]]:
        return list(zip(self.group_indices.tolist(), self.copies.tolist(), self.values.tolist()))

    @property
    def residual(self) -> float:
        return self.estimate - self.true_fidelity

    def to_dict(self) -> dict:
        c = self.config
        return {
            "mode": c.mode,
            "n": self.n,
            "p": self.p,
            "epsilon": c.epsilon,
            "delta": c.delta,
            "ell": c.ell,
            "seed": c.seed,
            "shot_model": c.shot_model,
            "estimate": self.estimate,
            "true_fidelity": self.true_fidelity,
            "total_copies": self.total_copies,
            "num_groups": self.num_groups,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"weights sum to {total}, expected 1")
    return w / total


def importance_sample(weights, ell: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Draw ``ell`` i.i.d. indices with probabilities ``weights``."""
    w = _check_weights(weights)
    return np.random.default_rng(rng).choice(w.size, size=ell, p=w)


def _copy_prefactor(d: int, config: DfeConfig) -> float:
    return 2.0 * math.log(2.0 / config.delta) / (d * config.ell * config.epsilon**2)


def copies_original(b_sq: float, d: int, config: DfeConfig) -> int:
    """``ceil(2 ln(2/delta) / (b^2 d ell eps^2))``."""
    if b_sq <= 0:
        raise ValueError(f"b^2 must be positive, got {b_sq}")
    return max(1, math.ceil(_copy_prefactor(d, config) * (1.0 / b_sq)))


def copies_grouped(norm_l1: float, norm_sq: float, d: int, config: DfeConfig) -> int:
    """``ceil(2 ||b||_1^2 ln(2/delta) / (||b||^4 d ell eps^2))``.

    For a single member ``||b||_1^2 == ||b||^2`` bit for bit, so the ratio below
    is exactly ``1 / b^2`` and this matches :func:`copies_original`.
    """
    if norm_sq <= 0:
        raise ValueError(f"||b||^2 must be positive, got {norm_sq}")
    if norm_l1**2 < norm_sq * (1 - 1e-12):
        raise ValueError("||b||_1 must be at least ||b||")
    return max(1, math.ceil(_copy_prefactor(d, config) * ((norm_l1**2 / norm_sq) / norm_sq)))


def group_copies(group: PauliGroup, d: int, config: DfeConfig) -> int:
    return copies_grouped(group.norm_l1, group.norm_sq, d, config)


def outcome_values(group: PauliGroup, basis: MeasurementBasis) -> np.ndarray:
    """``C_r = sum_l c_l^(r) b_l`` for every outcome ``r``."""
    if basis.eigen_table.shape[0] != group.size:
        raise ValueError("eigenvalue table does not match the group")
    return group.coefficients @ basis.eigen_table


def estimate_x_grouped(
    group: PauliGroup, sample: OutcomeSample, basis: MeasurementBasis, d: int
) -> float:
    """Per-round estimator ``sum_j C_{r_j} / (m ||b||^2 sqrt(d))``."""
    if sample.total < 1:
        raise ValueError("need at least one shot")
    c = outcome_values(group, basis)
    return float(sample.counts @ c) / (sample.total * group.norm_sq * math.sqrt(d))


def expected_copy_bound(config: DfeConfig, d: int) -> float:
    """Closed-form bound on the expected total copies, shared by both protocols."""
    eps, delta = config.epsilon, config.delta
    return 1 + 1 / (eps**2 * delta) + (2 * d / eps**2) * math.log(2 / delta)


def ideal_round_values(grouping: Grouping, sigma: NoisyState) -> np.ndarray:
    """Exact ``X_k = a_k . b_k / ||b_k||^2`` for each group (infinite copies)."""
    sqrt_d = math.sqrt(sigma.dim)
    out = np.empty(len(grouping))
    for k, g in enumerate(grouping.groups):
        a = np.array([1 / sqrt_d if q.is_identity else (1 - sigma.p) * b for q, b in g.members])
        out[k] = np.dot(a, g.coefficients) / g.norm_sq
    return out


def round_moments(
    grouping: Grouping, sigma: NoisyState, config: DfeConfig
) -> tuple[float, float, float]:
    """Exact ``(E[X], E[X^2], E[m])`` of one round under ``config``.

    Averages over the group draw and the multinomial (joint) or binomial
    (marginal) shot noise, with the ceilinged copy counts. ``Var(Y)`` of the
    full protocol is ``(E[X^2] - E[X]^2) / ell``.
    """
    d = sigma.dim
    weights = grouping.weights / grouping.weights.sum()
    ideal = ideal_round_values(grouping, sigma)
    mean = second = copies = 0.0
    for k, group in enumerate(grouping.groups):
        m = group_copies(group, d, config)
        basis = common_eigenbasis(group, grouping.mode, _substream(config.seed, _BASIS_STREAM, k))
        probs = outcome_probabilities(sigma, basis)
        if config.shot_model == "joint":
            c = outcome_values(group, basis)
            shot_var = probs @ c**2 - (probs @ c) ** 2
        else:
            member_means = basis.eigen_table @ probs
            shot_var = float(np.sum(group.coefficients**2 * (1 - member_means**2)))
        var_x = shot_var / (m * group.norm_sq**2 * d)
        mean += weights[k] * ideal[k]
        second += weights[k] * (ideal[k] ** 2 + var_x)
        copies += weights[k] * m
    return mean, second, copies


def _substream(seed: int, stream: int, key: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, key]))


def build_grouping(table: CoefficientTable, mode: str) -> Grouping:
    mode = normalize_mode(mode)
    if mode == "original":
        return singleton_grouping(table)
    return sorted_insertion(table, Commutativity.QWC if mode == "grouped_qwc" else Commutativity.FC)


def run_grouping(config: DfeConfig, grouping: Grouping, sigma: NoisyState) -> DfeResult:
    """Run the sampling protocol over an explicit grouping.

    Rounds are independent: round ``i`` draws its group from the sampling
    stream, and all rounds landing on group ``k`` draw their outcomes from the
    substream keyed by ``k``, so the result does not depend on evaluation order.
    """
    if grouping.n != sigma.n:
        raise DimensionError(f"grouping is for {grouping.n} qubits, state has {sigma.n}")
    d = sigma.dim
    mode = grouping.mode
    indices = importance_sample(grouping.weights / grouping.weights.sum(), config.ell,
                                _substream(config.seed, _SAMPLING_STREAM))
    copies = np.empty(config.ell, dtype=np.int64)
    values = np.empty(config.ell)

    order = np.argsort(indices, kind="stable")
    sampled, starts, counts = np.unique(indices[order], return_index=True, return_counts=True)
    for k, start, count in zip(sampled.tolist(), starts.tolist(), counts.tolist()):
        group = grouping[k]
        m = group_copies(group, d, config)
        basis = common_eigenbasis(group, mode, _substream(config.seed, _BASIS_STREAM, k))
        probs = outcome_probabilities(sigma, basis)
        rng = _substream(config.seed, _OUTCOME_STREAM, k)
        if config.shot_model == "joint":
            shots = sample_outcome_batch(probs, m, count, rng)
            sums = shots @ outcome_values(group, basis)
        else:
            plus = np.clip((1 + basis.eigen_table @ probs) / 2, 0.0, 1.0)
            ups = rng.binomial(m, plus, size=(count, group.size))
            sums = (2 * ups - m) @ group.coefficients
        rounds = order[start:start + count]
        copies[rounds] = m
        values[rounds] = sums / (m * group.norm_sq * math.sqrt(d))

    return DfeResult(
        config=config,
        n=sigma.n,
        p=sigma.p,
        estimate=float(values.mean()),
        true_fidelity=true_fidelity(sigma),
        num_groups=len(grouping),
        group_indices=indices,
        copies=copies,
        values=values,
    )


def run_dfe(
    config: DfeConfig,
    target: StateVector,
    sigma: NoisyState,
    table: CoefficientTable | None = None,
    grouping: Grouping | None = None,
) -> DfeResult:
    """Estimate ``Tr(rho sigma)`` for pure target ``rho = |target><target|``.

    ``table`` and ``grouping`` may be passed in to reuse work across runs; they
    must describe ``target``.
    """
    if target.n != sigma.n:
        raise DimensionError(f"target has {target.n} qubits, noisy state has {sigma.n}")
    if grouping is None:
        if table is None:
            table = pauli_coefficients(target)
        grouping = build_grouping(table, config.mode)
    return run_grouping(config, grouping, sigma)
