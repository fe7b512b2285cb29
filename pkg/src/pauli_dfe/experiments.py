"""Batches of fidelity-estimation runs, their statistics, and result files."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .dfe import MODES, DfeConfig, build_grouping, default_ell, normalize_mode, run_grouping
from .states import STATE_KINDS, NoisyState, make_state, pauli_coefficients

log = logging.getLogger(__name__)

CSV_HEADER = [
    "sample_id", "mode", "n", "state", "p", "estimate", "true_fidelity",
    "residual", "total_copies", "num_groups", "seed",
]
_STATE_KEY = len(MODES)  # seed key for Haar draws, distinct from every mode index
APPENDIX_B_THRESHOLD = 10.0
BOOTSTRAP_RESAMPLES = 1000


class InvariantViolation(AssertionError):
    pass


def derive_seed(*keys: int) -> int:
    """Stable 32-bit seed mixed from integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class BatchConfig:
    state: str = "haar"
    n: int = 4
    p: float = 0.1
    epsilon: float = 0.05
    delta: float = 0.05
    ell: int | None = None
    modes: tuple[str, ...] = MODES
    num_samples: int = 200
    seed: int = 0
    shot_model: str = "joint"
    out: str | None = None

    def __post_init__(self) -> None:
        if self.state not in STATE_KINDS:
            raise ValueError(f"unknown state kind {self.state!r}")
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")
        if not self.modes:
            raise ValueError("at least one mode is required")
        object.__setattr__(self, "modes", tuple(normalize_mode(m) for m in self.modes))
        if self.ell is None:
            object.__setattr__(self, "ell", default_ell(self.epsilon, self.delta))

    def dfe_config(self, mode: str, seed: int) -> DfeConfig:
        return DfeConfig(self.epsilon, self.delta, self.ell, mode, seed, self.shot_model)


@dataclass(frozen=True)
class SampleRecord:
    sample_id: int
    estimate: float
    true_fidelity: float
    total_copies: int
    num_groups: int
    seed: int
    # mean of X^2 over the rounds of this run
    round_second_moment: float = float("nan")
    # min over groups of ||b||_1^2 / ||b||^4
    min_l1_ratio: float = float("nan")

    @property
    def residual(self) -> float:
        return self.estimate - self.true_fidelity


@dataclass
class ExperimentStats:
    n: int
    mode: str
    state: str
    p: float
    epsilon: float
    delta: float
    ell: int
    shot_model: str = "joint"
    records: list[SampleRecord] = field(default_factory=list)

    @property
    def num_samples(self) -> int:
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.records])

    @property
    def estimates(self) -> np.ndarray:
        return np.array([r.estimate for r in self.records])

    @property
    def copies(self) -> np.ndarray:
        return np.array([r.total_copies for r in self.records])

    @property
    def variance_of_estimate(self) -> float:
        if self.num_samples < 2:
            return 0.0
        return float(np.var(self.residuals, ddof=1))

    @property
    def standard_error(self) -> float:
        return float(np.sqrt(self.variance_of_estimate / self.num_samples))

    @property
    def mean_copies(self) -> float:
        return float(self.copies.mean())

    @property
    def num_groups(self) -> float:
        return float(np.mean([r.num_groups for r in self.records]))

    @property
    def round_second_moment(self) -> float:
        return float(np.mean([r.round_second_moment for r in self.records]))

    @property
    def min_l1_ratio(self) -> float:
        return float(np.min([r.min_l1_ratio for r in self.records]))

    def summary(self) -> dict:
        copies = self.copies
        return {
            "n": self.n,
            "mode": self.mode,
            "state": self.state,
            "p": self.p,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "ell": self.ell,
            "shot_model": self.shot_model,
            "num_samples": self.num_samples,
            "mean_residual": float(self.residuals.mean()),
            "variance_of_estimate": self.variance_of_estimate,
            "mean_copies": self.mean_copies,
            "copies_min": int(copies.min()),
            "copies_median": float(np.median(copies)),
            "copies_max": int(copies.max()),
            "num_groups": self.num_groups,
        }


def _run_sample(cfg: BatchConfig, sample_id: int) -> dict[str, SampleRecord]:
    if cfg.state == "haar":
        target = make_state("haar", cfg.n, derive_seed(cfg.seed, sample_id, _STATE_KEY))
    else:
        target = make_state(cfg.state, cfg.n)
    sigma = NoisyState(target, cfg.p)
    table = pauli_coefficients(target)
    out = {}
    for mode in cfg.modes:
        seed = derive_seed(cfg.seed, sample_id, MODES.index(mode))
        grouping = build_grouping(table, mode)
        result = run_grouping(cfg.dfe_config(mode, seed), grouping, sigma)
        out[mode] = SampleRecord(
            sample_id=sample_id,
            estimate=result.estimate,
            true_fidelity=result.true_fidelity,
            total_copies=result.total_copies,
            num_groups=result.num_groups,
            seed=seed,
            round_second_moment=float(np.mean(result.values**2)),
            min_l1_ratio=grouping.min_l1_ratio(),
        )
    return out


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("DFE_THREADS", "1")))
    except ValueError:
        return 1


def run_batch(cfg: BatchConfig, workers: int | None = None) -> dict[str, ExperimentStats]:
    """Run every requested mode on ``cfg.num_samples`` target states.

    Haar targets are redrawn per sample. Results depend only on ``cfg``; with
    ``workers > 1`` samples run in a process pool and are reassembled in
    ``sample_id`` order. ``workers`` defaults to ``$DFE_THREADS`` or 1.
    """
    workers = workers or _worker_count()
    stats = {
        mode: ExperimentStats(cfg.n, mode, cfg.state, cfg.p, cfg.epsilon, cfg.delta,
                              cfg.ell, cfg.shot_model)
        for mode in cfg.modes
    }
    ids = range(cfg.num_samples)
    if workers == 1:
        per_sample = (_run_sample(cfg, s) for s in ids)
        _collect(stats, per_sample, cfg.num_samples)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            _collect(stats, pool.map(_run_sample, [cfg] * cfg.num_samples, ids), cfg.num_samples)
    if cfg.out:
        write_results(stats, cfg.out)
    return stats


def _collect(stats: dict[str, ExperimentStats], per_sample, total: int) -> None:
    for i, records in enumerate(per_sample):
        for mode, record in records.items():
            stats[mode].records.append(record)
        if (i + 1) % 50 == 0:
            log.info("%d/%d samples done", i + 1, total)


@dataclass(frozen=True)
class VarianceReport:
    grouped_mode: str
    original_mode: str
    variance_grouped: float
    variance_original: float
    variance_ratio: float
    variance_ratio_se: float
    copies_ratio: float
    second_moment_grouped: float
    second_moment_original: float
    second_moment_diff_se: float
    appendix_b_regime: bool
    min_l1_ratio: float

    @property
    def variance_reduction(self) -> float:
        return 1.0 - self.variance_ratio

    @property
    def copies_reduction(self) -> float:
        return 1.0 - self.copies_ratio

    @property
    def variance_ordering_holds(self) -> bool:
        return self.variance_ratio <= 1.0 + 3.0 * self.variance_ratio_se

    @property
    def second_moment_ordering_holds(self) -> bool:
        diff = self.second_moment_grouped - self.second_moment_original
        return diff <= 3.0 * self.second_moment_diff_se

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(
            variance_reduction=self.variance_reduction,
            copies_reduction=self.copies_reduction,
            variance_ordering_holds=self.variance_ordering_holds,
            second_moment_ordering_holds=self.second_moment_ordering_holds,
        )
        return out


def _ratio(num: float, den: float) -> float:
    # 0/0 compares two noiseless batches; call them equal
    if den > 0:
        return num / den
    return 1.0 if num == 0 else float("inf")


def _check_comparable(a: ExperimentStats, b: ExperimentStats) -> None:
    keys = ("n", "state", "p", "epsilon", "delta", "ell")
    mismatched = [k for k in keys if getattr(a, k) != getattr(b, k)]
    if mismatched:
        raise ValueError(f"cannot compare batches differing in {mismatched}")


def variance_comparison(
    grouped: ExperimentStats,
    original: ExperimentStats,
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
    strict: bool = True,
) -> VarianceReport:
    """Compare a grouped batch with an original-protocol batch.

    Standard errors come from a bootstrap over samples, paired when both
    batches ran on the same targets. In the regime where every group has
    ``||b||_1^2 / ||b||^4 >= 10`` the grouped variance and per-round second
    moment must not exceed the original ones by more than three standard
    errors; with ``strict`` a violation raises :class:`InvariantViolation`.
    """
    _check_comparable(grouped, original)
    rng = np.random.default_rng(seed)
    rg, ro = grouped.residuals, original.residuals
    mg = np.array([r.round_second_moment for r in grouped.records])
    mo = np.array([r.round_second_moment for r in original.records])
    paired = [r.sample_id for r in grouped.records] == [r.sample_id for r in original.records]

    ratios = np.empty(resamples)
    diffs = np.empty(resamples)
    for i in range(resamples):
        ig = rng.integers(0, len(rg), len(rg))
        io = ig if paired else rng.integers(0, len(ro), len(ro))
        ratios[i] = _ratio(np.var(rg[ig], ddof=1), np.var(ro[io], ddof=1))
        diffs[i] = mg[ig].mean() - mo[io].mean()
    finite = ratios[np.isfinite(ratios)]

    var_g, var_o = grouped.variance_of_estimate, original.variance_of_estimate
    ratio = _ratio(var_g, var_o)
    report = VarianceReport(
        grouped_mode=grouped.mode,
        original_mode=original.mode,
        variance_grouped=var_g,
        variance_original=var_o,
        variance_ratio=ratio,
        variance_ratio_se=float(np.std(finite, ddof=1)) if finite.size > 1 else 0.0,
        copies_ratio=grouped.mean_copies / original.mean_copies,
        second_moment_grouped=float(mg.mean()),
        second_moment_original=float(mo.mean()),
        second_moment_diff_se=float(np.std(diffs, ddof=1)),
        appendix_b_regime=grouped.min_l1_ratio >= APPENDIX_B_THRESHOLD,
        min_l1_ratio=grouped.min_l1_ratio,
    )
    if strict and report.appendix_b_regime:
        if not report.variance_ordering_holds:
            raise InvariantViolation(
                f"{grouped.mode} variance ratio {ratio:.3f} exceeds 1 + 3 SE "
                f"({report.variance_ratio_se:.3f})"
            )
        if not report.second_moment_ordering_holds:
            raise InvariantViolation(
                f"{grouped.mode} second moment {report.second_moment_grouped:.4f} exceeds "
                f"original {report.second_moment_original:.4f} by more than 3 SE"
            )
    return report


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def write_results(stats: dict[str, ExperimentStats] | ExperimentStats, path: str | Path) -> None:
    """CSV with one row per (sample, mode) plus a JSON summary next to it."""
    if isinstance(stats, ExperimentStats):
        stats = {stats.mode: stats}
    path = Path(path)
    by_sample: dict[int, list[tuple[ExperimentStats, SampleRecord]]] = {}
    for st in stats.values():
        for rec in st.records:
            by_sample.setdefault(rec.sample_id, []).append((st, rec))
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for sample_id in sorted(by_sample):
                for st, rec in by_sample[sample_id]:
                    writer.writerow([
                        rec.sample_id, st.mode, st.n, st.state, repr(st.p), repr(rec.estimate),
                        repr(rec.true_fidelity), repr(rec.residual), rec.total_copies,
                        rec.num_groups, rec.seed,
                    ])
        sidecar = {
            mode: {
                "summary": st.summary(),
                "round_second_moments": [r.round_second_moment for r in st.records],
                "min_l1_ratios": [r.min_l1_ratio for r in st.records],
            }
            for mode, st in stats.items()
        }
        _sidecar(path).write_text(json.dumps(sidecar, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc


def read_results(path: str | Path) -> dict[str, ExperimentStats]:
    path = Path(path)
    try:
        sidecar = json.loads(_sidecar(path).read_text())
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"failed reading results from {path}: {exc}") from exc

    stats: dict[str, ExperimentStats] = {}
    for mode, meta in sidecar.items():
        s = meta["summary"]
        stats[mode] = ExperimentStats(
            s["n"], mode, s["state"], s["p"], s["epsilon"], s["delta"], s["ell"], s["shot_model"]
        )
    for row in rows:
        st = stats[row["mode"]]
        i = len(st.records)
        extra = sidecar[row["mode"]]
        st.records.append(SampleRecord(
            sample_id=int(row["sample_id"]),
            estimate=float(row["estimate"]),
            true_fidelity=float(row["true_fidelity"]),
            total_copies=int(row["total_copies"]),
            num_groups=int(row["num_groups"]),
            seed=int(row["seed"]),
            round_second_moment=extra["round_second_moments"][i],
            min_l1_ratio=extra["min_l1_ratios"][i],
        ))
    return stats


FULL_PROFILE = {"n": 8, "num_samples": 1000}
DESK_PROFILE = {"n": 4, "num_samples": 200}


def profile_config(name: str, **overrides) -> BatchConfig:
    base = {"desk": DESK_PROFILE, "full": FULL_PROFILE}[name]
    return replace(BatchConfig(**base), **overrides)
