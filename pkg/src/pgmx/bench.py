"""Synthetic motif benchmarks with ground-truth explanations.

Each dataset is a base graph (preferential-attachment or balanced binary
tree) with small fixed-shape motifs hung off it by one random edge each,
plus a sprinkle of extra random edges. A node's class is its structural role
inside its motif; base nodes share class 0. The ground-truth explanation of
any motif node's prediction is its motif's node set.

Motif geometries over local nodes A..: edges, then roles:

* house   A-B A-C B-C B-D C-E D-E; apex A (1), beam B,C (2), floor D,E (3)
* bottle  A-B A-C B-D C-E D-E B-E; the house minus its B-C beam plus a B-E
  diagonal. Roles are the orbits of its automorphism group (A C)(B E):
  neck A,C (1), shoulder B,E (2), base D (3)::

        A                 A
       / \\               / \\
      B---C     ->      B   C
      |   |             | \\  \\
      D---E             D--\\--E

* cycle-6 a hexagon ring; every node has the same role (1)
* grid-3x3 the 3x3 lattice; corners (1), sides (2), center (3)
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, InputError
from .graph import Graph, graph_to_dict
from .oracle import OracleHandle
from .pipeline import ExplainConfig, explain, explain_nochild

__all__ = [
    "SyntheticDataset",
    "DATASET_IDS",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
    "dataset_json",
    "explanation_accuracy",
    "explanation_precision",
    "run_benchmark",
    "BenchmarkReport",
]

# Edges use local indices 0..size-1; roles are per local index, 0 is the
# base class so motif roles start at 1.
_HOUSE_EDGES = [(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4)]
_HOUSE_ROLES = [1, 2, 2, 3, 3]
_BOTTLE_EDGES = [(0, 1), (0, 2), (1, 3), (2, 4), (3, 4), (1, 4)]
_BOTTLE_ROLES = [1, 2, 1, 3, 2]
_CYCLE6_EDGES = [(i, (i + 1) % 6) for i in range(6)]
_CYCLE6_ROLES = [1] * 6
_GRID9_EDGES = [
    (r * 3 + c, r * 3 + c + 1) for r in range(3) for c in range(2)
] + [(r * 3 + c, (r + 1) * 3 + c) for r in range(2) for c in range(3)]
_GRID9_ROLES = [1, 2, 1, 2, 3, 2, 1, 2, 1]

_MOTIFS: dict[str, tuple[list[tuple[int, int]], list[int]]] = {
    "house": (_HOUSE_EDGES, _HOUSE_ROLES),
    "bottle": (_BOTTLE_EDGES, _BOTTLE_ROLES),
    "cycle": (_CYCLE6_EDGES, _CYCLE6_ROLES),
    "grid": (_GRID9_EDGES, _GRID9_ROLES),
}

_DATASETS: dict[str, dict] = {
    "syn1": {"base": ("ba", 300), "motif": ("house", 80), "features": "constant"},
    "syn2": {"base": ("ba", 350), "motif": ("house", 100), "features": "labels"},
    "syn3": {"base": ("ba", 300), "motif": ("grid", 80), "features": "constant"},
    "syn4": {"base": ("tree", 8), "motif": ("cycle", 60), "features": "constant"},
    "syn5": {"base": ("tree", 8), "motif": ("grid", 80), "features": "constant"},
    "syn6": {"base": ("ba", 300), "motif": ("bottle", 80), "features": "constant"},
}
DATASET_IDS = tuple(sorted(_DATASETS))

EXTRA_EDGE_FRACTION = 0.1
BA_ATTACHMENT = 1


@dataclass(frozen=True)
class SyntheticDataset:
    graph: Graph
    labels: np.ndarray
    motifs: list[tuple[int, ...]]
    params: dict

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    def motif_of(self, node: int) -> tuple[int, ...] | None:
        for m in self.motifs:
            if node in m:
                return m
        return None

    @property
    def motif_nodes(self) -> list[int]:
        return sorted(v for m in self.motifs for v in m)


def _ba_edges(num_nodes: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Preferential attachment, one edge per arriving node."""
    edges = [(0, 1)]
    stubs = [0, 1]
    for v in range(2, num_nodes):
        anchor = stubs[int(rng.integers(len(stubs)))]
        edges.append((anchor, v))
        stubs.extend((anchor, v))
    return edges


def _tree_edges(height: int) -> tuple[int, list[tuple[int, int]]]:
    """Balanced binary tree; height 8 gives 2^9 - 1 = 511 nodes."""
    count = 2 ** (height + 1) - 1
    edges = []
    for v in range(count):
        for child in (2 * v + 1, 2 * v + 2):
            if child < count:
                edges.append((v, child))
    return count, edges


def generate_synthetic(dataset_id: str, seed: int = 0) -> SyntheticDataset:
    """Build one of the six benchmark datasets, byte-reproducible per seed."""
    if dataset_id not in _DATASETS:
        raise ConfigError(f"unknown dataset {dataset_id!r}; known: {list(DATASET_IDS)}")
    recipe = _DATASETS[dataset_id]
    rng = np.random.default_rng([_id_entropy(dataset_id), seed])

    base_kind, base_arg = recipe["base"]
    if base_kind == "ba":
        base_size = base_arg
        edges = _ba_edges(base_size, rng)
    else:
        base_size, edges = _tree_edges(base_arg)

    motif_kind, motif_count = recipe["motif"]
    motif_edges, motif_roles = _MOTIFS[motif_kind]
    motif_size = len(motif_roles)
    total = base_size + motif_count * motif_size
    labels = np.zeros(total, dtype=np.int64)
    motifs: list[tuple[int, ...]] = []
    next_node = base_size
    for _ in range(motif_count):
        ids = tuple(range(next_node, next_node + motif_size))
        next_node += motif_size
        for (a, b) in motif_edges:
            edges.append((ids[a], ids[b]))
        for local, role in enumerate(motif_roles):
            labels[ids[local]] = role
        anchor = int(rng.integers(base_size))
        port = int(rng.integers(motif_size))
        edges.append((anchor, ids[port]))
        motifs.append(ids)

    existing = {(min(u, v), max(u, v)) for u, v in edges}
    extra = int(EXTRA_EDGE_FRACTION * total)
    added = 0
    while added < extra:
        u = int(rng.integers(total))
        v = int(rng.integers(total))
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in existing:
            continue
        existing.add(key)
        edges.append(key)
        added += 1

    if recipe["features"] == "labels":
        features = rng.normal(labels.astype(np.float64), 0.5).reshape(-1, 1)
    else:
        features = np.ones((total, 1), dtype=np.float64)

    graph = Graph.from_edges(total, edges, features, labels=labels)
    params = {
        "id": dataset_id,
        "seed": seed,
        "base": list(recipe["base"]),
        "motif": list(recipe["motif"]),
        "features": recipe["features"],
        "ba_attachment": BA_ATTACHMENT,
        "extra_edges": extra,
    }
    return SyntheticDataset(graph, labels, motifs, params)


def _id_entropy(dataset_id: str) -> int:
    # stable small integer per id; keeps dataset streams disjoint per id
    return sum(ord(c) * (i + 1) for i, c in enumerate(dataset_id))


def dataset_json(dataset: SyntheticDataset) -> str:
    """Dataset file content: the graph document plus labels, motifs, parameters."""
    doc = graph_to_dict(dataset.graph)
    doc["labels"] = dataset.labels.tolist()
    doc["motifs"] = [list(m) for m in dataset.motifs]
    doc["params"] = dataset.params
    return json.dumps(doc, sort_keys=True)


def save_dataset(dataset: SyntheticDataset, path: str | Path) -> None:
    Path(path).write_text(dataset_json(dataset))


def load_dataset(path: str | Path) -> SyntheticDataset:
    doc = json.loads(Path(path).read_text())
    from .graph import graph_from_dict

    if "motifs" not in doc or "labels" not in doc:
        raise InputError(f"{path}: not a dataset file (missing labels/motifs)")
    graph = graph_from_dict(doc)
    return SyntheticDataset(
        graph,
        np.asarray(doc["labels"], dtype=np.int64),
        [tuple(m) for m in doc["motifs"]],
        doc.get("params", {}),
    )


def explanation_accuracy(
    explained_nodes: Sequence[int], truth: set[int] | Sequence[int], k: int
) -> float:
    """Fraction of the top-k explained nodes that belong to the ground truth."""
    if k < 1:
        raise InputError("k must be >= 1")
    truth = set(truth)
    top = list(explained_nodes)[:k]
    return len([v for v in top if v in truth]) / k


def explanation_precision(
    explained_nodes: Sequence[int], valid: Callable[[int], bool]
) -> float | None:
    """Fraction of explained nodes passing the validity predicate.

    Undefined (None) for an empty explanation.
    """
    nodes = list(explained_nodes)
    if not nodes:
        return None
    return len([v for v in nodes if valid(v)]) / len(nodes)


def pick_scheme(dataset: SyntheticDataset, scheme: str | None) -> str:
    """Resolve "auto": mean-replacement is a no-op on constant features, so
    those datasets fall back to zeroing."""
    if scheme is not None and scheme != "auto":
        return scheme
    means = dataset.graph.features.mean(axis=0)
    if np.array_equal(dataset.graph.features, np.broadcast_to(means, dataset.graph.features.shape)):
        return "zero"
    return "mean"


@dataclass
class BenchmarkReport:
    dataset_id: str
    pipeline: str
    records: list[dict]
    summary: dict
    config: dict
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        # timing excluded: reports must be byte-identical across equal-seed runs
        return {
            "dataset": self.dataset_id,
            "pipeline": self.pipeline,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    def save_csv(self, path: str | Path) -> None:
        fields = [
            "target", "motif_size", "accuracy", "precision", "degenerate",
            "truncated", "u_size", "error",
        ]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            for rec in self.records:
                writer.writerow({k: rec.get(k) for k in fields})


def _target_seed(seed: int, target: int) -> int:
    return (seed * 1_000_003 + target) % (2**31)


def run_benchmark(
    dataset: SyntheticDataset,
    oracle: OracleHandle,
    pipeline: str = "nochild",
    config: ExplainConfig | None = None,
    targets: int | Sequence[int] = 30,
    seed: int = 7,
    scheme: str | None = "auto",
    k: int | None = None,
) -> BenchmarkReport:
    """Explain a seeded sample of motif nodes and score against ground truth.

    Per target, the explanation's top-k ranked nodes (k defaults to the
    target's motif size) yield the accuracy; the parenthesized precision
    re-scores after dropping ranked nodes that failed the marginal
    dependence test against the target.
    """
    if pipeline not in ("general", "nochild"):
        raise ConfigError(f"pipeline must be 'general' or 'nochild', got {pipeline!r}")
    config = config or ExplainConfig()
    config = replace(config, scheme=pick_scheme(dataset, scheme or config.scheme))
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    pool = dataset.motif_nodes
    if isinstance(targets, int):
        count = min(targets, len(pool))
        chosen = sorted(int(v) for v in rng.choice(pool, size=count, replace=False))
    else:
        chosen = sorted(int(v) for v in targets)

    run = explain_nochild if pipeline == "nochild" else explain
    records: list[dict] = []
    accuracies: list[float] = []
    precisions: list[float] = []
    degenerate_count = 0
    failures = 0
    for target in chosen:
        motif = dataset.motif_of(target)
        if motif is None:
            raise InputError(f"target {target} is not part of any motif")
        top_k = k or len(motif)
        record: dict = {"target": target, "motif": list(motif), "motif_size": len(motif)}
        try:
            cfg = replace(config, seed=_target_seed(seed, target))
            result = run(oracle, dataset.graph, target, cfg)
        except Exception as e:  # a failed target is recorded, not fatal
            failures += 1
            record["error"] = f"{type(e).__name__}: {e}"
            records.append(record)
            continue
        ranked = [int(v) for v in result.ranked_variables()]
        top = ranked[:top_k]
        accuracy = explanation_accuracy(ranked, set(motif), top_k)
        dependent_names = set(result.selection.s_of_t)
        kept = [v for v in top if v == target or str(v) in dependent_names]
        precision = explanation_precision(kept, lambda v: v in motif)
        record.update(
            {
                "explained": top,
                "kept_after_dependence_filter": kept,
                "accuracy": accuracy,
                "precision": precision,
                "degenerate": result.meta.degenerate,
                "truncated": result.selection.truncated,
                "u_size": len(result.selection.u_of_t),
            }
        )
        records.append(record)
        accuracies.append(accuracy)
        if precision is not None:
            precisions.append(precision)
        if result.meta.degenerate:
            degenerate_count += 1

    by_motif: dict[tuple[int, ...], list[float]] = {}
    for rec in records:
        if "accuracy" in rec:
            by_motif.setdefault(tuple(rec["motif"]), []).append(rec["accuracy"])
    summary = {
        "targets": len(chosen),
        "failures": failures,
        "degenerate": degenerate_count,
        "mean_accuracy": float(np.mean(accuracies)) if accuracies else None,
        "median_accuracy": float(np.median(accuracies)) if accuracies else None,
        "mean_precision": float(np.mean(precisions)) if precisions else None,
        "mean_accuracy_by_motif": (
            float(np.mean([np.mean(v) for v in by_motif.values()])) if by_motif else None
        ),
        "samples_per_target": config.n,
        "ranking": "dependence-strength, target first, truncated to motif size",
    }
    config_doc = {
        "n": config.n,
        "p": config.p,
        "hops": config.hops,
        "M": config.M,
        "alpha": config.alpha,
        "delta": config.delta,
        "scheme": config.scheme,
        "seed": seed,
        "include_target": config.include_target,
        "k": k,
    }
    return BenchmarkReport(
        dataset_id=str(dataset.params.get("id", "custom")),
        pipeline=pipeline,
        records=records,
        summary=summary,
        config=config_doc,
        runtime_seconds=time.perf_counter() - t0,
    )
