# cli.py
"""Command-line entry point: ``python -m czreach {run,sample,plot} ...``."""
import argparse
import logging
import sys

from czreach import config
from czreach.errors import CzreachError, DimensionError, ScenarioError
from czreach.pipeline import EXIT_ERROR, EXIT_NOT_SAFE, EXIT_SAFE, run_scenario
from czreach.sampling import sample_trajectories
from czreach.scenario import METHODS, load_result, load_scenario, write_json

logger = logging.getLogger(__name__)


def parse_dims(text):
    """'x1,x2' or '1,2' -> (0, 1)."""
    parts = [p.strip().lstrip("xX") for p in text.split(",")]
    if len(parts) != 2 or not all(p.isdigit() and int(p) >= 1 for p in parts):
        raise DimensionError(f"expected two state indices like 'x1,x2', got {text!r}")
    return int(parts[0]) - 1, int(parts[1]) - 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="czreach",
        description="Reachability and safety verification of neural-network control loops.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log per-step and per-LP detail.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Compute reachable sets and verify the scenario's unsafe sets.")
    run.add_argument("scenario", help="Path to the scenario JSON file.")
    run.add_argument("--out", default=None, help="Directory for result.json, report.json and plots.")
    run.add_argument("--plot", default=None, metavar="xI,xJ", help="Also draw reach.svg over these two states.")
    run.add_argument("--samples", type=int, default=0, help="Simulate this many trajectories as a containment check.")
    run.add_argument("--seed", type=int, default=None, help="Sampling seed (defaults to the scenario's seed).")
    run.add_argument("--method", choices=METHODS, default=None, help="Override the scenario's method.")
    run.add_argument("--max-members", type=int, default=None, help="Cap on union members per step.")

    sample = sub.add_parser("sample", help="Check sampled trajectories against the reachable sets.")
    sample.add_argument("scenario", help="Path to the scenario JSON file.")
    sample.add_argument("--samples", type=int, default=1000)
    sample.add_argument("--seed", type=int, default=None)
    sample.add_argument("--result", default=None, help="Stored result.json to check instead of recomputing.")
    sample.add_argument("--out", default=None, help="Write the containment report JSON here.")

    plot = sub.add_parser("plot", help="Draw a stored result as SVG.")
    plot.add_argument("result", help="Path to result.json.")
    plot.add_argument("--dims", default="x1,x2", metavar="xI,xJ")
    plot.add_argument("--scenario", default=None, help="Scenario whose unsafe sets are drawn too.")
    plot.add_argument("--out", default="reach.svg")
    return parser


def cmd_run(args):
    scenario = load_scenario(args.scenario)
    dims = parse_dims(args.plot) if args.plot else None
    outcome = run_scenario(
        scenario,
        out_dir=args.out,
        plot_dims=dims,
        samples=args.samples,
        seed=args.seed,
        method=args.method,
        max_members=args.max_members,
    )
    return outcome.exit_code


def cmd_sample(args):
    scenario = load_scenario(args.scenario)
    result = load_result(args.result) if args.result else None
    report = sample_trajectories(scenario, args.samples, result=result, seed=args.seed)
    for t, (k, frac) in enumerate(zip(report.contained, report.fractions)):
        print(f"t={t}: {k}/{report.samples} contained ({frac:.1%})")
    if args.out:
        write_json(args.out, report.to_dict())
        print(f"Containment report saved to: {args.out}")
    return EXIT_SAFE if report.all_contained else EXIT_NOT_SAFE


def cmd_plot(args):
    from czreach.plotting import plot_reach

    result = load_result(args.result)
    unsafe = load_scenario(args.scenario).unsafe_sets if args.scenario else ()
    summary = plot_reach(result, parse_dims(args.dims), args.out, unsafe)
    print(f"Drew {len(summary.drawn)} steps ({summary.outlines} outlines) to {args.out}")
    for t in summary.skipped:
        print(f"  step t={t} has no members and was skipped")
    return EXIT_SAFE


COMMANDS = {"run": cmd_run, "sample": cmd_sample, "plot": cmd_plot}


def log_level(name):
    """Numeric logging level for a name such as ``info`` or ``WARNING``."""
    level = logging.getLevelName(str(name).strip().upper())
    if not isinstance(level, int):
        raise ValueError(f"CZREACH_LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, CRITICAL, got {name!r}")
    return level


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        level = logging.DEBUG if args.verbose else log_level(config.LOG_LEVEL)
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    source = getattr(args, "scenario", None) or getattr(args, "result", None)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as e:
        print(f"Error: {e}", file=sys.stderr)
    except (CzreachError, OSError, ValueError) as e:
        print(f"Error: {source}: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
