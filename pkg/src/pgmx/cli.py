"""Command-line front end.

Subcommands: ``explain`` one prediction, ``bench`` a synthetic dataset,
``gen`` a dataset file, ``query`` a saved explanation. Exit codes: 0 ok,
2 configuration error, 3 oracle error, 4 pipeline error; the reason goes to
stderr as a single JSON line. Output files are written to a temporary name
and renamed on success, so readers never observe partial files.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .bayesnet import BayesianNetwork
from .errors import ConfigError, ExplainerError, OracleError
from .graph import PERTURBATION_SCHEMES, load_graph
from .oracle import ExternalOracle, GcnOracle, motif_role_oracle
from .pipeline import ExplainConfig, Explanation, explain, explain_nochild
from .search import SearchConfig

__all__ = ["main", "export_dot"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_PIPELINE = 4


def export_dot(network: BayesianNetwork, target: str) -> str:
    """Deterministic DOT rendering; the target node is visually distinguished."""
    lines = ["digraph explanation {"]
    for v in network.variables:
        if v == target:
            lines.append(f'  "{v}" [shape=doublecircle, style=filled, fillcolor=lightblue];')
        else:
            lines.append(f'  "{v}" [shape=ellipse];')
    for p, c in sorted(network.structure.edges()):
        lines.append(f'  "{p}" -> "{c}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fail(code: int, category: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": category, "message": message}) + "\n")
    return code


def _default_jobs() -> int:
    env = os.environ.get("PGMX_JOBS")
    return int(env) if env else 1


def _add_common_numeric(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=800, help="number of perturbation samples")
    parser.add_argument("--p", type=float, default=0.5, help="per-node perturbation probability")
    parser.add_argument("--hops", "--L", dest="hops", type=int, default=3,
                        help="neighborhood radius in hops")
    parser.add_argument("--M", type=int, default=20,
                        help="cap on selected variables besides the target")
    parser.add_argument("--alpha", type=float, default=0.05, help="independence-test level")
    parser.add_argument("--delta", type=float, default=0.1,
                        help="significant probability-drop threshold")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--jobs", type=int, default=_default_jobs(),
                        help="parallel sampling workers (env PGMX_JOBS)")


def _add_oracle_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--oracle", choices=["gcn", "motif-role", "external"],
                        default="gcn", help="oracle backing")
    parser.add_argument("--weights", help="weight bundle JSON (gcn oracle)")
    parser.add_argument("--dataset", help="dataset file or id (motif-role oracle)")
    parser.add_argument("--oracle-cmd", help="command line of an external oracle process")
    parser.add_argument("--classes", type=int, help="class count (external oracle)")
    parser.add_argument("--task", choices=["node", "graph"], default="node",
                        help="prediction task mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgmx",
        description="Explain black-box graph-model predictions with learned Bayesian networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p_explain = sub.add_parser("explain", help="explain one prediction", formatter_class=fmt)
    p_explain.add_argument("--graph", required=True, help="input graph JSON")
    p_explain.add_argument("--target", type=int, help="target node id (node task)")
    p_explain.add_argument("--no-child", action="store_true",
                           help="force the target to be a leaf of the learned network")
    p_explain.add_argument("--scheme", default="mean", choices=sorted(PERTURBATION_SCHEMES),
                           help="feature perturbation scheme")
    p_explain.add_argument("--exclude-target", action="store_true",
                           help="never perturb the target node itself")
    p_explain.add_argument("--out", default="explanation",
                           help="output prefix; writes <out>.json and <out>.dot")
    _add_common_numeric(p_explain)
    _add_oracle_flags(p_explain)

    p_bench = sub.add_parser("bench", help="run a synthetic benchmark", formatter_class=fmt)
    p_bench.add_argument("--dataset", required=True,
                         help=f"dataset id {list(bench_mod.DATASET_IDS)} or dataset file")
    p_bench.add_argument("--dataset-seed", type=int, default=0,
                         help="seed for generating the dataset (id form only)")
    p_bench.add_argument("--targets", type=int, default=30, help="number of explained nodes")
    p_bench.add_argument("--pipeline", choices=["nochild", "general"], default="nochild",
                         help="explanation pipeline")
    p_bench.add_argument("--scheme", default="auto",
                         choices=["auto", *sorted(PERTURBATION_SCHEMES)],
                         help="perturbation scheme; auto avoids no-op schemes")
    p_bench.add_argument("--oracle", choices=["motif-role", "external"], default="motif-role",
                         help="oracle backing")
    p_bench.add_argument("--oracle-cmd", help="command line of an external oracle process")
    p_bench.add_argument("--classes", type=int, help="class count (external oracle)")
    p_bench.add_argument("--k", type=int,
                         help="override top-k size (default: each target's motif size)")
    p_bench.add_argument("--out", default="benchmark.json", help="report JSON path")
    p_bench.add_argument("--csv", help="also flatten per-target records to CSV")
    _add_common_numeric(p_bench)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset file", formatter_class=fmt)
    p_gen.add_argument("--dataset", required=True, help=f"one of {list(bench_mod.DATASET_IDS)}")
    p_gen.add_argument("--seed", type=int, default=0, help="random seed")
    p_gen.add_argument("--out", help="output path (default <dataset>.json)")

    p_query = sub.add_parser("query", help="query a saved explanation", formatter_class=fmt)
    p_query.add_argument("--explanation", required=True, help="explanation JSON path")
    p_query.add_argument("--evidence", nargs="*", default=[],
                         help="evidence assignments, e.g. 12=1 7=0")
    return parser


def _validate_ranges(args: argparse.Namespace) -> None:
    if getattr(args, "p", None) is not None and not (0.0 < args.p < 1.0):
        raise ConfigError(f"--p must lie strictly between 0 and 1, got {args.p}")
    if getattr(args, "n", None) is not None and args.n < 1:
        raise ConfigError("--n must be >= 1")
    if getattr(args, "hops", None) is not None and args.hops < 0:
        raise ConfigError("--hops must be >= 0")
    if getattr(args, "M", None) is not None and args.M < 1:
        raise ConfigError("--M must be >= 1")
    if getattr(args, "alpha", None) is not None and not (0.0 < args.alpha < 1.0):
        raise ConfigError("--alpha must lie strictly between 0 and 1")
    if getattr(args, "delta", None) is not None and not (0.0 <= args.delta <= 1.0):
        raise ConfigError("--delta must lie in [0, 1]")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        raise ConfigError("--seed must be non-negative")
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")


def _build_oracle(args: argparse.Namespace):
    if args.oracle == "gcn":
        if not args.weights:
            raise ConfigError("--oracle gcn needs --weights")
        if not Path(args.weights).exists():
            raise ConfigError(f"weights file not found: {args.weights}")
        return GcnOracle.from_file(args.weights, mode=args.task)
    if args.oracle == "motif-role":
        if not args.dataset:
            raise ConfigError("--oracle motif-role needs --dataset")
        return motif_role_oracle(args.dataset, seed=getattr(args, "dataset_seed", 0))
    if not args.oracle_cmd:
        raise ConfigError("--oracle external needs --oracle-cmd")
    if not args.classes:
        raise ConfigError("--oracle external needs --classes")
    return ExternalOracle(shlex.split(args.oracle_cmd), getattr(args, "task", "node"), args.classes)


def _format_distribution(vec: np.ndarray) -> str:
    return "[" + ", ".join(f"{x:.4f}" for x in vec) + "]"


def _print_readout(explanation: Explanation) -> None:
    print(f"target variable: {explanation.target}")
    print(f"baseline P({explanation.target}) = {_format_distribution(explanation.baseline_query)}")
    print(f"markov blanket: {list(explanation.markov_blanket)}")
    for v in explanation.markov_blanket:
        card = explanation.network.structure.cardinality(v)
        for value in range(card):
            posterior = explanation.query({v: value})
            print(
                f"P({explanation.target} | {v}={value}) = {_format_distribution(posterior)}"
            )
    if explanation.meta.degenerate:
        print("note: degenerate explanation (no dependence was detected)")


def cmd_explain(args: argparse.Namespace) -> int:
    _validate_ranges(args)
    if args.task == "node" and args.target is None:
        raise ConfigError("node task needs --target")
    if not Path(args.graph).exists():
        raise ConfigError(f"graph file not found: {args.graph}")
    oracle = _build_oracle(args)
    if oracle.mode != args.task:
        raise ConfigError(
            f"--task {args.task} does not match the {oracle.kind} oracle's mode {oracle.mode!r}"
        )
    graph = load_graph(args.graph)
    config = ExplainConfig(
        n=args.n, p=args.p, hops=args.hops, M=args.M, alpha=args.alpha,
        delta=args.delta, scheme=args.scheme, seed=args.seed,
        include_target=not args.exclude_target, jobs=args.jobs,
        search=SearchConfig(alpha=args.alpha, seed=args.seed),
    )
    run = explain_nochild if args.no_child else explain
    try:
        result = run(oracle, graph, args.target, config)
    finally:
        if isinstance(oracle, ExternalOracle):
            oracle.close()
    _atomic_write(Path(args.out + ".json"), result.to_json())
    _atomic_write(Path(args.out + ".dot"), export_dot(result.network, result.target))
    _print_readout(result)
    print(f"wrote {args.out}.json and {args.out}.dot")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    _validate_ranges(args)
    if args.dataset in bench_mod.DATASET_IDS:
        dataset = bench_mod.generate_synthetic(args.dataset, seed=args.dataset_seed)
    elif Path(args.dataset).exists():
        dataset = bench_mod.load_dataset(args.dataset)
    else:
        raise ConfigError(f"unknown dataset {args.dataset!r}")
    if args.oracle == "motif-role":
        oracle = motif_role_oracle(dataset)
    else:
        if not args.oracle_cmd or not args.classes:
            raise ConfigError("--oracle external needs --oracle-cmd and --classes")
        oracle = ExternalOracle(shlex.split(args.oracle_cmd), "node", args.classes)
    config = ExplainConfig(
        n=args.n, p=args.p, hops=args.hops, M=args.M, alpha=args.alpha,
        delta=args.delta, seed=args.seed, jobs=args.jobs,
    )
    if args.k is not None and args.k < 1:
        raise ConfigError("--k must be >= 1")
    try:
        report = bench_mod.run_benchmark(
            dataset, oracle, pipeline=args.pipeline, config=config,
            targets=args.targets, seed=args.seed, scheme=args.scheme, k=args.k,
        )
    finally:
        if isinstance(oracle, ExternalOracle):
            oracle.close()
    _atomic_write(Path(args.out), report.to_json())
    if args.csv:
        report.save_csv(args.csv)
    print(json.dumps(report.summary, sort_keys=True))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    _validate_ranges(args)
    dataset = bench_mod.generate_synthetic(args.dataset, seed=args.seed)
    out = args.out or f"{args.dataset}.json"
    _atomic_write(Path(out), bench_mod.dataset_json(dataset))
    print(
        f"wrote {out}: {dataset.graph.num_nodes} nodes, "
        f"{len(dataset.motifs)} motifs, {dataset.num_classes} classes"
    )
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    if not Path(args.explanation).exists():
        raise ConfigError(f"explanation file not found: {args.explanation}")
    explanation = Explanation.load(args.explanation)
    evidence: dict[str, int] = {}
    for item in args.evidence:
        if "=" not in item:
            raise ConfigError(f"evidence must look like var=value, got {item!r}")
        var, _, value = item.partition("=")
        try:
            evidence[var] = int(value)
        except ValueError:
            raise ConfigError(f"evidence value must be an integer, got {item!r}") from None
    posterior = explanation.query(evidence)
    print(json.dumps({
        "target": explanation.target,
        "evidence": evidence,
        "posterior": posterior.tolist(),
    }))
    return EXIT_OK


_COMMANDS = {
    "explain": cmd_explain,
    "bench": cmd_bench,
    "gen": cmd_gen,
    "query": cmd_query,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        return _fail(EXIT_CONFIG, "config", str(e))
    except OracleError as e:
        return _fail(EXIT_ORACLE, "oracle", str(e))
    except ExplainerError as e:
        return _fail(EXIT_PIPELINE, "pipeline", str(e))


if __name__ == "__main__":
    sys.exit(main())
