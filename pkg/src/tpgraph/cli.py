"""``tpgraph`` command line.

Exit codes: 0 success, 2 input or configuration error, 3 runtime or
numerical error. Machine-readable output goes to stdout, diagnostics to
stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import kernels
from .finance import PriceTable, log_returns
from .graph import graph_from_precision, read_edge_list, write_edge_list
from .learner import DEFAULT_GAMMA, BatchTooSmallError, LearnerConfig, learn_structure
from .metrics import MetricsReport, ModularityUndefined, modularity, sector_statistics
from .rng import derive_seed
from .stats import DataError, ObservationMatrix, SingularMatrixError, sample_gaussian, write_matrix_csv
from .sweep import ExperimentConfig, run_sweep
from .synth import GeneratorSpec

log = logging.getLogger("tpgraph")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3


class CommandError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        self.code = code
        super().__init__(message)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def cmd_gen(args) -> int:
    try:
        spec = GeneratorSpec(args.family, args.p, density=args.density, r=args.r, seed=args.seed)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    if args.n < 1:
        raise CommandError("n must be at least 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    theta_path = Path(args.theta_out) if args.theta_out else out / "theta.csv"
    data_path = Path(args.data_out) if args.data_out else out / "data.csv"
    truth_path = Path(args.truth_out) if args.truth_out else out / "truth.tsv"
    model = spec.build()
    truth = graph_from_precision(model)
    data = sample_gaussian(model, args.n, derive_seed(args.seed, "sample"))
    write_matrix_csv(model.theta, theta_path, family=spec.family)
    write_edge_list(truth, truth_path)
    data.write_csv(data_path)
    _emit({"family": spec.family, "p": spec.p, "n": args.n, "edges": truth.n_edges, "seed": args.seed,
           "theta": str(theta_path), "data": str(data_path), "truth": str(truth_path)})
    return EXIT_OK


def cmd_learn(args) -> int:
    data = ObservationMatrix.read_csv(args.data)
    try:
        config = LearnerConfig(gamma=args.gamma, seed=args.seed, max_level=args.max_level,
                               centered=args.center, singular_policy=args.singular,
                               unsafe_gamma=args.unsafe_gamma)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    start = time.perf_counter()
    graph, record = learn_structure(data, config)
    wall_ms = (time.perf_counter() - start) * 1000.0
    write_edge_list(graph, args.out)
    summary = record.to_dict()
    summary.update(edges=graph.n_edges, wall_ms=wall_ms, backend=kernels.BACKEND, out=str(args.out))
    _emit(summary)
    return EXIT_OK


def cmd_eval(args) -> int:
    estimated = read_edge_list(args.estimated)
    truth = read_edge_list(args.truth)
    if estimated.p != truth.p:
        raise CommandError(f"node counts differ: {estimated.p} vs {truth.p}")
    report = MetricsReport.compare(estimated, truth).to_dict()
    report["p"] = truth.p
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(report)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
    except (TypeError, ValueError, KeyError) as exc:
        raise CommandError(f"{args.config}: {exc}") from None
    if args.no_timing:
        config = ExperimentConfig(**{**config.__dict__, "timing": False})
    out = args.out or config.output_path
    if not out:
        raise CommandError("no output path: pass --out or set output_path in the config")
    result = run_sweep(config, out, args.parallelism)
    result["out"] = str(out)
    _emit(result)
    if result["failed"]:
        print(f"{result['failed']} cell(s) failed; see error rows in {out}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_returns(args) -> int:
    table = PriceTable.read_csv(args.prices)
    returns = log_returns(table, centered=args.center)
    returns.write_csv(args.out)
    _emit({"rows": returns.n_rows, "columns": returns.n_cols, "centered": args.center, "out": str(args.out)})
    return EXIT_OK


def _read_sectors(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"ticker", "sector"} <= set(reader.fieldnames):
            raise CommandError(f"{path}: expected columns 'ticker,sector'")
        mapping = {}
        for row in reader:
            mapping[row["ticker"].strip()] = row["sector"].strip()
    return mapping


def cmd_modularity(args) -> int:
    graph = read_edge_list(args.graph)
    sectors = _read_sectors(args.sectors)
    if args.data:
        names = ObservationMatrix.read_csv(args.data).column_names
        if names is None:
            raise CommandError(f"{args.data}: no header row to name the nodes")
        if len(names) != graph.p:
            raise CommandError(f"{args.data} has {len(names)} columns, graph has {graph.p} nodes")
    else:
        names = list(sectors)
        if len(names) < graph.p:
            raise CommandError(f"{args.sectors} labels {len(names)} tickers, graph has {graph.p} nodes")
        names = names[: graph.p]
    missing = [t for t in names if t not in sectors]
    if missing:
        raise CommandError(f"no sector label for node(s): {', '.join(missing[:5])}")
    labels = [sectors[t] for t in names]
    try:
        q = modularity(graph, labels)
    except ModularityUndefined as exc:
        raise CommandError(str(exc), EXIT_RUNTIME) from None
    _emit({"modularity": q, "edges": graph.n_edges, "p": graph.p,
           "sectors": sector_statistics(graph, labels)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpgraph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic model, its graph and samples")
    g.add_argument("--family", choices=("grid", "random", "chain"), required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density", type=float, default=0.01)
    g.add_argument("--r", type=float, default=0.9)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--theta-out")
    g.add_argument("--data-out")
    g.add_argument("--truth-out")
    g.set_defaults(func=cmd_gen)

    lp = sub.add_parser("learn", help="estimate the graph from an observation CSV")
    lp.add_argument("--data", required=True)
    lp.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("--max-level", type=int)
    lp.add_argument("--center", action=argparse.BooleanOptionalAction, default=False)
    lp.add_argument("--unsafe-gamma", action="store_true", help="allow gamma anywhere in (0, 1)")
    lp.add_argument("--singular", choices=("skip", "error"), default="skip")
    lp.add_argument("--out", required=True)
    lp.set_defaults(func=cmd_learn)

    e = sub.add_parser("eval", help="score an estimated edge list against the truth")
    e.add_argument("--estimated", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="run a resumable experiment sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--parallelism", type=int)
    s.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for byte-stable output")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("returns", help="convert daily prices to log returns")
    r.add_argument("--prices", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--center", action=argparse.BooleanOptionalAction, default=True)
    r.set_defaults(func=cmd_returns)

    m = sub.add_parser("modularity", help="sector modularity of an edge list")
    m.add_argument("--graph", required=True)
    m.add_argument("--sectors", required=True)
    m.add_argument("--data", help="observation CSV whose header names the nodes")
    m.set_defaults(func=cmd_modularity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"tpgraph {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (BatchTooSmallError, SingularMatrixError) as exc:
        print(f"tpgraph {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (DataError, ValueError, OSError) as exc:
        print(f"tpgraph {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"tpgraph {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
