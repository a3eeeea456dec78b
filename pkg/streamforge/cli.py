"""Command-line interface of streamforge.
"""
import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import streamIO
from .featureOptimizer import (
    GRID_TARGETS, FeatureOptimizer, RunConfig, build_grid, random_sweep
)
from .simulation import SimulationError, iter_stream
from .sinks import SinkError, fileSink, is_endpoint, replay_to_sink, tcpSink
from .spaceAnalysis import (
    BENCHMARK_LOG, GENERATED, FeatureMatrix, compare_spaces, feature_ranges,
    summarize_grid
)
from .streamFeatures import WindowConfig, extract_stream
from .utility import print_results

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_IO = 4
SEED_ENV = "SOI_SEED"


def _seed(args, config_seed=0):
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    if args.seed is not None:
        return args.seed
    return config_seed


def _pins(items):
    pins = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"Expected name=value, got {item!r}")
        pins[name.strip()] = float(value) if "." in value else int(value)
    return pins


def _with_budget(config, budget):
    if budget is None:
        return config
    return replace(config, max_iter=budget, n_init=min(config.n_init, budget))


def _run_config(args):
    config = _with_budget(
        streamIO.load_run_config(args.config) if args.config else RunConfig(),
        args.budget,
    )
    pins = _pins(getattr(args, "fix", None))
    return replace(
        config, master_seed=_seed(args, config.master_seed),
        fixed={**config.fixed, **pins},
    )


def cmd_generate(args):
    config = _with_budget(streamIO.load_run_config(args.targets), args.budget)
    config = replace(config, master_seed=_seed(args, config.master_seed))
    run = FeatureOptimizer(config, progress=not args.quiet).optimize()
    if run.best_definition is None:
        logger.error("Every trial failed to simulate")
        return EXIT_BUDGET

    streamIO.save_definition(run.best_definition, args.out)
    history = args.history or Path(args.out).with_suffix(".history.csv")
    streamIO.write_history(run, history)
    if not args.quiet and run.best.achieved is not None:
        print_results(run.best.achieved, "best trial")
    logger.info(
        "Best distance %.4f after %d trials", run.best_distance, len(run.trials)
    )
    return EXIT_OK if run.converged else EXIT_BUDGET


def cmd_replay(args):
    definition = streamIO.load_definition(args.definition)
    events = iter_stream(definition, args.n_events)
    if is_endpoint(args.out):
        sink = tcpSink(args.out, args.suppress_case_ids)
    else:
        sink = fileSink(args.out, args.suppress_case_ids)
    with sink:
        replay_to_sink(events, sink, args.rate)
    report = sink.report
    logger.info(
        "Sent %d events (%d bytes) in %.3fs",
        report.events_sent, report.bytes_sent, report.duration
    )
    return EXIT_OK


def cmd_features(args):
    stream = streamIO.read_stream(args.input)
    cfg = WindowConfig(window_size=args.window, grouping=args.grouping)
    vectors = extract_stream(stream, cfg)
    if not vectors:
        logger.warning(
            "Stream of %d events holds no full window of %d",
            len(stream), args.window
        )
    streamIO.write_features(vectors, args.out)
    return EXIT_OK


def cmd_streamify(args):
    log = streamIO.read_static_log(args.log, args.tick_seconds)
    streamIO.write_stream(streamIO.streamify(log), args.out)
    return EXIT_OK


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_grid(args):
    config = _run_config(args)
    features = [f.strip() for f in args.features.split(",") if f.strip()]
    targets = _floats(args.targets) if args.targets else list(GRID_TARGETS)
    cells = build_grid(features, targets, config, progress=not args.quiet)
    streamIO.write_grid(cells, args.out)
    return EXIT_OK


def cmd_sweep(args):
    config = _run_config(args)
    results = random_sweep(None, args.n, config, progress=not args.quiet)
    streamIO.write_sweep(results, args.out)
    if args.ranges:
        ranges = feature_ranges(vector for _, vector in results)
        streamIO.write_ranges(ranges, args.ranges, n_points=len(results))
    return EXIT_OK


def cmd_summarize(args):
    summary = summarize_grid(streamIO.read_grid(args.grid), args.threshold)
    streamIO.write_summary(summary, args.out)
    return EXIT_OK


def _feature_tables(directory):
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise FileNotFoundError(f"No feature tables in {directory}")
    return paths


def cmd_analyze(args):
    generated = FeatureMatrix.from_feature_csvs(
        _feature_tables(args.generated), GENERATED
    )
    logs = FeatureMatrix.from_feature_csvs(_feature_tables(args.logs), BENCHMARK_LOG)
    report = compare_spaces(generated, logs, args.low, args.high)
    streamIO.write_report(report, args.out)
    for feature in report.gaps:
        print(f"Coverage gap: {feature}")
    return EXIT_OK


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="streamforge",
        description="Generate event streams with target features.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="-v for info, -vv for debug messages",
    )
    parser.add_argument(
        "--quiet", action="store_true", help="hide progress bars and summaries"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="optimize a definition for targets")
    p.add_argument("--targets", required=True, help="targets JSON file")
    p.add_argument("--out", required=True, help="definition file to write")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--budget", type=_positive_int, help="total trials")
    p.add_argument("--history", help="trial history CSV")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("replay", help="simulate a definition into a sink")
    p.add_argument("--def", dest="definition", required=True)
    p.add_argument("--n-events", type=int, required=True)
    p.add_argument("--out", required=True, help="file or host:port")
    p.add_argument("--rate", type=float, help="events per second")
    p.add_argument(
        "--suppress-case-ids", action="store_true",
        help="omit case and parent_case from records",
    )
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("features", help="extract window features")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--window", type=int, default=500)
    p.add_argument(
        "--grouping", choices=["global", "per-case"], default="global"
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("streamify", help="replay a static CSV log")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tick-seconds", type=float, default=1.0)
    p.set_defaults(func=cmd_streamify)

    for name, func, help_ in (
        ("grid", cmd_grid, "optimize every feature pair and target pair"),
        ("sweep", cmd_sweep, "measure features at random parameters"),
    ):
        p = sub.add_parser(name, help=help_)
        if name == "grid":
            p.add_argument("--features", required=True, help="f1,f2[,...]")
            p.add_argument("--targets", help="v1,v2,...")
        else:
            p.add_argument("--n", type=_positive_int, required=True)
            p.add_argument("--ranges", help="feasible ranges JSON to write")
        p.add_argument("--out", required=True)
        p.add_argument("--config", help="targets JSON file for budgets")
        p.add_argument("--seed", type=int)
        p.add_argument("--budget", type=_positive_int)
        p.add_argument(
            "--fix", action="append", metavar="NAME=VALUE",
            help="pin a parameter dimension",
        )
        p.set_defaults(func=func)

    p = sub.add_parser("summarize", help="summarize a grid table")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.07)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("analyze", help="compare feature spaces")
    p.add_argument("--generated", required=True)
    p.add_argument("--logs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--low", type=float, default=0.05)
    p.add_argument("--high", type=float, default=0.3)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    """Run the command line; returns the exit code."""
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except SinkError as err:
        print(
            f"streamforge: {err} ({err.report.events_sent} events sent)",
            file=sys.stderr,
        )
        return EXIT_IO
    except OSError as err:
        print(f"streamforge: {err}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, SimulationError) as err:
        print(f"streamforge: {err}", file=sys.stderr)
        return EXIT_USAGE
