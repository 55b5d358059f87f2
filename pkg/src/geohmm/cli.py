"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io
from .errors import ComponentCollapseError, ConvergenceError, DegenerateFitError, StageError
from .experiments import format_summary, run_example1, run_example2, simulate_chains
from .learner import METRIC_NAMES, LearnConfig, evaluate, learn_full, learn_known_sensor
from .moments import DEFAULT_MC_SAMPLES

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "GEOHMM_THREADS"

NUMERIC_ERRORS = (StageError, ConvergenceError, DegenerateFitError, ComponentCollapseError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser():
    p = _Parser(prog="geohmm", description="Method-of-moments learning of HMMs with manifold-valued observations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate observation chains from a model file")
    s.add_argument("model", help="model file (JSON)")
    s.add_argument("--length", "-D", type=_positive_int, required=True, help="observations per chain")
    s.add_argument("--chains", type=_positive_int, default=1)
    s.add_argument("--burn-in", type=_nonneg_int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--with-states", action="store_true", help="append the hidden state (1-based) to each line")
    s.add_argument("--output", "-o", required=True, help="output directory")

    lr = sub.add_parser("learn", help="learn a model from observation files")
    lr.add_argument("observations", nargs="+", help="observation files, one chain each")
    lr.add_argument("--states", "-N", type=_positive_int, help="number of hidden states")
    lr.add_argument("--lags", type=_positive_int, default=1, help="largest lag tau_bar")
    lr.add_argument("--sensor", help="model file whose components are taken as known")
    lr.add_argument("--mc-samples", type=_positive_int, default=DEFAULT_MC_SAMPLES)
    lr.add_argument("--restarts", type=_positive_int, default=5, help="EM restarts")
    lr.add_argument("--seed", type=int, default=0)
    lr.add_argument("--threads", type=_positive_int, default=_default_threads(),
                    help=f"worker threads (default from ${THREADS_ENV}, else 1)")
    lr.add_argument("--report", "-o", required=True, help="report file to write")

    ev = sub.add_parser("evaluate", help="score a report against a ground-truth model")
    ev.add_argument("report")
    ev.add_argument("truth", help="ground-truth model file")

    for name, helptext in (("reproduce-example1", "Poincare-disk experiment, tau_bar = 1, 2, 3"),
                           ("reproduce-example2", "SPD(2) experiment, tau_bar = 1")):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("--seed", type=int, default=0)
        r.add_argument("--output", "-o", required=True, help="output directory")
        r.add_argument("--length", "-D", type=_positive_int, default=None,
                       help="observations per chain (default: the experiment's)")
        r.add_argument("--mc-samples", type=_positive_int, default=None)
        r.add_argument("--threads", type=_positive_int, default=_default_threads())
        if name == "reproduce-example1":
            r.add_argument("--chains", type=_positive_int, default=None)
    return p


def cmd_simulate(args):
    model = io.load_model(args.model)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    states, chains = simulate_chains(model, args.chains, args.length, args.seed, args.burn_in)
    for c, (s, y) in enumerate(zip(states, chains)):
        io.write_observations(out / f"chain_{c:03d}.txt", model.kind, y,
                              states=s if args.with_states else None,
                              seed=args.seed, chain=c, burn_in=args.burn_in)
    print(f"wrote {args.chains} chain(s) of {args.length} observations to {out}")
    return EXIT_OK


def _load_chains(paths):
    kind = None
    chains = []
    for path in paths:
        k, obs, _, _ = io.read_observations(path)
        if kind is not None and k != kind:
            raise io.DataError(f"{path}: manifold {k.value} differs from {kind.value}")
        kind = k
        chains.append(obs)
    return kind, chains


def cmd_learn(args):
    kind, chains = _load_chains(args.observations)
    shortest = min(len(c) for c in chains)
    if args.lags >= shortest:
        raise UsageError(f"--lags {args.lags} must be smaller than the chain length {shortest}")
    if args.mc_samples < 1000:
        raise UsageError("--mc-samples must be at least 1000")
    cfg = LearnConfig(tau_bar=args.lags, mc_samples=args.mc_samples, seed=args.seed, threads=args.threads)
    cfg.mixture.restarts = args.restarts
    if args.sensor:
        sensor = io.load_model(args.sensor)
        if sensor.kind != kind:
            raise io.DataError(f"{args.sensor}: manifold {sensor.kind.value} does not match observations ({kind.value})")
        if args.states is not None and args.states != sensor.n_states:
            raise UsageError(f"--states {args.states} does not match the sensor's {sensor.n_states} states")
        report = learn_known_sensor(chains, sensor.components, cfg)
    else:
        if args.states is None:
            raise UsageError("--states is required without --sensor")
        report = learn_full(chains, args.states, kind, cfg)
    io.save_report(args.report, report)
    flags = {k: v for k, v in report.solver_flags.items() if v}
    if flags:
        print(f"solver flags: {flags}", file=sys.stderr)
    print(f"wrote report to {args.report}")
    return EXIT_OK


def cmd_evaluate(args):
    report = io.load_report(args.report)
    truth = io.load_model(args.truth)
    metrics = evaluate(report, truth)
    for name in METRIC_NAMES:
        print(f"{name}: {metrics[name]:.6g}")
    io.save_report(args.report, report)
    return EXIT_OK


def cmd_reproduce(args):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    kw = {"seed": args.seed, "mc_samples": args.mc_samples, "threads": args.threads}
    if args.length is not None:
        kw["length"] = args.length
    if args.command == "reproduce-example1":
        if args.chains is not None:
            kw["n_chains"] = args.chains
        run = run_example1(**kw)
    else:
        run = run_example2(**kw)
    io.save_model(out / "truth.json", run.truth)
    for c, (s, y) in enumerate(zip(run.states, run.chains)):
        io.write_observations(out / f"chain_{c:03d}.txt", run.truth.kind, y, states=s,
                              seed=args.seed, chain=c)
    for tau, report in run.reports.items():
        io.save_report(out / f"report_tau{tau}.json", report)
    (out / "summary.json").write_text(json.dumps(run.summary, indent=1) + "\n")
    table = format_summary(run.summary)
    (out / "summary.md").write_text(table)
    print(table, end="")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "learn": cmd_learn,
    "evaluate": cmd_evaluate,
    "reproduce-example1": cmd_reproduce,
    "reproduce-example2": cmd_reproduce,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"geohmm {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"geohmm {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError) as exc:
        print(f"geohmm {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
