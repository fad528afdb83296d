"""Command-line front end."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gof, harness
from .asymptotic import mle_intervals
from .censoring import (
    PlanError,
    design_from_json,
    dumps,
    sample_from_json,
    sample_to_json,
    simulate_block,
)
from .distributions import DomainError, IepParams
from .mle import solve_mle
from .pivotal import DEFAULT_DRAWS, algorithm1

__all__ = ["main", "build_parser", "ingest_data", "UsageError"]

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

FORMATS = """\
file formats:
  design file (simulate --design), JSON:
    {"facilities": [{"n": 55, "m": 45, "removals": [0, ..., 5], "threshold": 0.75}, ...]}
    "removals" has m nonnegative entries summing to n - m; instead of it a
    facility may give "template": 1, 2 or 3. A null threshold means no threshold.
  sample file (simulate output, estimate/pivotal input), JSON:
    {"facilities": [{"n", "m", "removals", "threshold", "j_count",
                     "times": [strictly increasing failure times]}, ...]}
    j_count is the number of failures strictly before the threshold.
  data file (fit-data, plot-data): positive decimals separated by commas,
    spaces or newlines; text after '#' is ignored.
  simstudy tables (setup<i>_plan<j>.csv), one row per method and target:
    method,target,estimate,bias,variance,lower,upper,length,replications,dropped
    variance is the mean squared deviation of the replication estimates;
    lower/upper are mean interval endpoints and length the mean length.
    manifest.json records the configs, version and dropped counts.

exit status: 0 success, 1 computational failure, 2 usage or input error.
environment: BAPCS_THREADS caps simstudy worker processes.
"""


class UsageError(Exception):
    pass


def ingest_data(path) -> gof.DataSet:
    """Read a data file; errors name the offending line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return gof.parse_values(text)
    except gof.ParseError as exc:
        raise gof.ParseError(f"{path}: {exc}") from None


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    return vals


def _prob(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return v


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _count(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _choice_or_all(valid):
    def parse(text):
        if text == "all":
            return list(valid)
        v = int(text)
        if v not in valid:
            raise argparse.ArgumentTypeError(f"expected one of {list(valid)} or 'all', got {text}")
        return [v]
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bapcs",
        description="Inference for the inverted exponentiated Pareto law under block adaptive "
                    "progressive Type-II censoring.",
        epilog=FORMATS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, epilog=FORMATS,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    s = add("simulate", "simulate a censored sample from a design")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--design", type=Path, help="design JSON file")
    src.add_argument("--setup", type=int, choices=sorted(harness.SETUPS), help="built-in setup")
    s.add_argument("--plan", type=int, choices=(1, 2, 3), default=1,
                   help="withdrawal template for --setup (default 1)")
    s.add_argument("--alpha", type=_floats, required=True,
                   help="alpha, or one value per facility, comma separated")
    s.add_argument("--beta", type=_positive, required=True)
    s.add_argument("--seed", type=_seed, required=True)
    s.add_argument("--out", type=Path, required=True, help="sample JSON to write")

    e = add("estimate", "maximum likelihood fit with asymptotic intervals")
    e.add_argument("--sample", type=Path, required=True)
    e.add_argument("--gamma", type=_prob, default=0.05, help="1 - confidence level (default 0.05)")
    e.add_argument("--t", type=_positive, default=0.75, help="time for R and H (default 0.75)")
    e.add_argument("--out", type=Path, required=True,
                   help="fit JSON; intervals go to <stem>_intervals.csv beside it")

    v = add("pivotal", "pivotal estimates with generalized intervals")
    v.add_argument("--sample", type=Path, required=True)
    v.add_argument("--draws", "-N", type=_count, default=DEFAULT_DRAWS)
    v.add_argument("--gamma", type=_prob, default=0.05)
    v.add_argument("--t", type=_positive, default=0.75)
    v.add_argument("--seed", type=_seed, required=True)
    v.add_argument("--out", type=Path, required=True, help="summary JSON to write")

    st = add("simstudy", "simulation study over built-in setups")
    st.add_argument("--setup", type=_choice_or_all(sorted(harness.SETUPS)), required=True,
                    help="1..6 or 'all'")
    st.add_argument("--plan", type=_choice_or_all((1, 2, 3)), required=True, help="1..3 or 'all'")
    st.add_argument("--reps", type=_count, default=None, help="replications (default 2500)")
    st.add_argument("--fast", action="store_true", help=f"{harness.FAST_REPLICATIONS} replications")
    st.add_argument("--draws", type=_count, default=DEFAULT_DRAWS, help="pivotal draws per replication")
    st.add_argument("--seed", type=_seed, required=True)
    st.add_argument("--out-dir", type=Path, required=True)

    for name, help_ in (("fit-data", "fit the five models to a data set"),
                        ("plot-data", "write plot series for a data set")):
        d = add(name, help_)
        d.add_argument("--data", type=Path, required=True)
        d.add_argument("--out-dir", type=Path, required=True)
        d.add_argument("--ks-method", choices=("asymptotic", "exact"), default="asymptotic",
                       help="K-S p-value law (default asymptotic)")
    return p


def _check_inputs(args):
    for attr in ("design", "sample", "data"):
        path = getattr(args, attr, None)
        if path is not None and not path.is_file():
            raise UsageError(f"--{attr}: no such file: {path}")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _read_sample(path):
    return sample_from_json(path.read_text(encoding="utf-8"))


def _cmd_simulate(args):
    if args.design is not None:
        design = design_from_json(args.design.read_text(encoding="utf-8"))
    else:
        design = harness.builtin_setup(args.setup, args.plan)
    alphas = args.alpha * design.k if len(args.alpha) == 1 else args.alpha
    if len(alphas) != design.k:
        raise UsageError(f"--alpha needs 1 or {design.k} values, got {len(alphas)}")
    params = [IepParams(a, args.beta) for a in alphas]
    sample = simulate_block(params, design, np.random.default_rng(args.seed))
    _write(args.out, sample_to_json(sample))


def _intervals_csv(items):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target", "estimate", "lower", "upper", "length", "level"])
    for name, est, iv in items:
        w.writerow([name, *(format(v, ".17g") for v in (est, iv.lower, iv.upper, iv.length, iv.level))])
    return buf.getvalue()


def _cmd_estimate(args):
    fit = solve_mle(_read_sample(args.sample))
    res = mle_intervals(fit, args.gamma, args.t)
    doc = {
        "method": "MLE",
        "gamma": args.gamma,
        "t": args.t,
        "fit": fit.to_dict(),
        "vcov": [[float(v) for v in row] for row in fit.vcov],
        "estimates": {k: est for k, (est, _) in res.items()},
        "intervals": [iv.to_dict(k) for k, (_, iv) in res.items()],
    }
    _write(args.out, dumps(doc))
    _write(args.out.with_name(args.out.stem + "_intervals.csv"),
           _intervals_csv([(k, est, iv) for k, (est, iv) in res.items()]))


def _cmd_pivotal(args):
    sample = _read_sample(args.sample)
    _, summary = algorithm1(sample, args.draws, args.gamma, args.t, np.random.default_rng(args.seed))
    doc = summary.to_dict()
    doc.update(gamma=args.gamma, t=args.t, seed=args.seed)
    _write(args.out, dumps(doc))


def _cmd_simstudy(args):
    done = []
    for setup in args.setup:
        for plan in args.plan:
            cfg = harness.StudyConfig(setup, plan, master_seed=args.seed, pivotal_draws=args.draws)
            if args.fast:
                cfg = cfg.fast()
            if args.reps is not None:
                cfg = replace(cfg, replications=args.reps)
            logging.getLogger(__name__).info("setup %d plan %d: %d replications",
                                             setup, plan, cfg.replications)
            rows = harness.run_study(cfg)
            harness.emit_table(rows, args.out_dir / harness.table_filename(setup, plan))
            done.append((cfg, rows))
    harness.write_manifest(done, args.out_dir / "manifest.json")


def _cmd_fit_data(args):
    data = ingest_data(args.data)
    reports = gof.gof_table(data, ks_method=args.ks_method)
    table = gof.report_csv(reports)
    _write(args.out_dir / "gof_table.csv", table)
    sys.stdout.write(table)


def _cmd_plot_data(args):
    data = ingest_data(args.data)
    reports = gof.gof_table(data, ks_method=args.ks_method)
    gof.write_plot_data(gof.plot_data(data, reports), args.out_dir)


COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "pivotal": _cmd_pivotal,
    "simstudy": _cmd_simstudy,
    "fit-data": _cmd_fit_data,
    "plot-data": _cmd_plot_data,
}


def run(args) -> int:
    try:
        _check_inputs(args)
        COMMANDS[args.command](args)
    except (UsageError, gof.ParseError, PlanError, DomainError, UnicodeDecodeError) as exc:
        print(f"bapcs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except np.linalg.LinAlgError as exc:
        print(f"bapcs {args.command}: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        # malformed JSON and similar input problems
        print(f"bapcs {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        print(f"bapcs {args.command}: computation failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"bapcs {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
