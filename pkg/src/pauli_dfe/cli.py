"""Command line entry point: ``dfe run | groups | verify``."""

from __future__ import annotations

import argparse
import logging
import sys

from .dfe import MODES, SHOT_MODELS, normalize_mode
from .experiments import (
    DESK_PROFILE,
    FULL_PROFILE,
    BatchConfig,
    InvariantViolation,
    run_batch,
    variance_comparison,
)
from .grouping import sorted_insertion
from .states import STATE_KINDS, make_state, pauli_coefficients

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2


def _modes(arg: str) -> tuple[str, ...]:
    if arg == "all":
        return MODES
    return tuple(normalize_mode(m) for m in arg.split(","))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfe", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of fidelity estimations")
    run.add_argument("--profile", choices=("desk", "full"), default="desk",
                     help="desk: n=4, 200 samples; full: n=8, 1000 samples")
    run.add_argument("--state", choices=STATE_KINDS, default="haar")
    run.add_argument("--n", type=int)
    run.add_argument("--p", type=float, default=0.1)
    run.add_argument("--epsilon", type=float, default=0.05)
    run.add_argument("--delta", type=float, default=0.05)
    run.add_argument("--ell", type=int)
    run.add_argument("--mode", default="all", help="original, qwc, fc, a comma list, or all")
    run.add_argument("--samples", type=int)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--shots", choices=SHOT_MODELS, default="joint",
                     help="joint: common-eigenbasis POVM; marginal: independent member outcomes")
    run.add_argument("--out", help="CSV path; a JSON summary is written next to it")

    groups = sub.add_parser("groups", help="group the Pauli table of a target state")
    groups.add_argument("--state", choices=STATE_KINDS, default="haar")
    groups.add_argument("--n", type=int, default=4)
    groups.add_argument("--mode", choices=("qwc", "fc", "all"), default="all")
    groups.add_argument("--seed", type=int, default=0)
    groups.add_argument("--table", action="store_true", help="print the per-group norm table")

    sub.add_parser("verify", help="run the invariant checks")
    return parser


def _cmd_run(args) -> int:
    profile = FULL_PROFILE if args.profile == "full" else DESK_PROFILE
    cfg = BatchConfig(
        state=args.state,
        n=args.n if args.n is not None else profile["n"],
        p=args.p,
        epsilon=args.epsilon,
        delta=args.delta,
        ell=args.ell,
        modes=_modes(args.mode),
        num_samples=args.samples if args.samples is not None else profile["num_samples"],
        seed=args.seed,
        shot_model=args.shots,
        out=args.out,
    )
    stats = run_batch(cfg)
    print(f"{'mode':<12} {'groups':>8} {'variance':>12} {'mean copies':>12} {'mean resid':>11}")
    for mode, st in stats.items():
        s = st.summary()
        print(f"{mode:<12} {s['num_groups']:>8.1f} {s['variance_of_estimate']:>12.4e} "
              f"{s['mean_copies']:>12.1f} {s['mean_residual']:>11.2e}")
    if "original" in stats and cfg.num_samples > 1:
        for mode in stats:
            if mode == "original":
                continue
            report = variance_comparison(stats[mode], stats["original"])
            print(f"{mode}: variance reduction {100 * report.variance_reduction:.1f}%, "
                  f"copies reduction {100 * report.copies_reduction:.1f}%, "
                  f"appendix B regime {report.appendix_b_regime}")
    return EXIT_OK


def _cmd_groups(args) -> int:
    table = pauli_coefficients(make_state(args.state, args.n, args.seed))
    modes = ("qwc", "fc") if args.mode == "all" else (args.mode,)
    for mode in modes:
        grouping = sorted_insertion(table, mode)
        print(f"{mode}: {len(grouping)} groups over {len(table)} Pauli strings")
        if args.table:
            print(f"  {'k':>5} {'size':>5} {'||b||^2':>12} {'||b||_1':>12}")
            for g in grouping.groups:
                print(f"  {g.index:>5} {g.size:>5} {g.norm_sq:>12.6e} {g.norm_l1:>12.6e}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .checks import run_checks

    failed = 0
    for name, (ok, detail) in run_checks().items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += not ok
    return EXIT_INVARIANT if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "groups": _cmd_groups, "verify": _cmd_verify}
    try:
        return handlers[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"dfe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
