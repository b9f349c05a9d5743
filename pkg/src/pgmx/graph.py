"""Attributed-graph values, neighborhood extraction and feature perturbation.

Graphs are immutable: every operation returns a new value, so graphs can be
shared freely between parallel samplers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, InputError

__all__ = [
    "Graph",
    "PerturbationMask",
    "PERTURBATION_SCHEMES",
    "l_hop_neighborhood",
    "apply_perturbation",
    "graph_from_dict",
    "graph_to_dict",
    "load_graph",
    "save_graph",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Undirected attributed graph over nodes 0..num_nodes-1.

    `features` is a (num_nodes, F) float array, `adjacency` a symmetric
    boolean matrix. Self-loops are allowed at most once (the diagonal).
    """

    num_nodes: int
    features: np.ndarray
    adjacency: np.ndarray
    labels: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        adj = np.asarray(self.adjacency, dtype=bool)
        if feats.ndim != 2 or feats.shape[0] != self.num_nodes:
            raise InputError(
                f"features must be ({self.num_nodes}, F), got shape {feats.shape}"
            )
        if adj.shape != (self.num_nodes, self.num_nodes):
            raise InputError(f"adjacency must be square of size {self.num_nodes}")
        if not np.array_equal(adj, adj.T):
            raise InputError("adjacency must be symmetric (input graphs are undirected)")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "adjacency", _freeze(adj))
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (self.num_nodes,):
                raise InputError("labels must have one entry per node")
            object.__setattr__(self, "labels", _freeze(lab))

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        edges: Iterable[Sequence[int]],
        features: np.ndarray | Sequence[Sequence[float]],
        labels: Sequence[int] | None = None,
    ) -> "Graph":
        """Build a graph from an undirected edge list; duplicate edges are rejected."""
        adj = np.zeros((num_nodes, num_nodes), dtype=bool)
        seen: set[tuple[int, int]] = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise InputError(f"edge ({u}, {v}) references a node out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InputError(f"duplicate edge ({u}, {v})")
            seen.add(key)
            adj[u, v] = True
            adj[v, u] = True
        return cls(num_nodes, np.asarray(features, dtype=np.float64), adj, labels=labels)

    @property
    def feature_width(self) -> int:
        return self.features.shape[1]

    def neighbors(self, v: int) -> np.ndarray:
        """Node ids adjacent to v, ascending; excludes v unless it has a self-loop."""
        return np.flatnonzero(self.adjacency[v])

    def edge_list(self) -> list[tuple[int, int]]:
        """Sorted (u, v) pairs with u <= v."""
        iu, iv = np.nonzero(np.triu(self.adjacency))
        return list(zip(iu.tolist(), iv.tolist()))

    def with_features(self, features: np.ndarray) -> "Graph":
        return Graph(self.num_nodes, features, self.adjacency, labels=self.labels)


@dataclass(frozen=True)
class PerturbationMask:
    """One boolean per node; True marks the node's features as perturbed."""

    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", _freeze(np.asarray(self.bits, dtype=bool)))
        if self.bits.ndim != 1:
            raise InputError("mask must be one-dimensional")

    def __len__(self) -> int:
        return int(self.bits.shape[0])


def _mean_replacement(features: np.ndarray) -> np.ndarray:
    return features.mean(axis=0)


def _zero_replacement(features: np.ndarray) -> np.ndarray:
    return np.zeros(features.shape[1], dtype=np.float64)


# Replacement row is computed from the *original* feature matrix.
PERTURBATION_SCHEMES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "mean": _mean_replacement,
    "zero": _zero_replacement,
}


def apply_perturbation(graph: Graph, mask: PerturbationMask, scheme: str = "mean") -> Graph:
    """Return the induced graph with masked nodes' features replaced per scheme.

    The default "mean" scheme writes each masked node's features to the
    column means over all nodes of the original graph; adjacency is untouched.
    """
    if len(mask) != graph.num_nodes:
        raise InputError(
            f"mask length {len(mask)} does not match graph with {graph.num_nodes} nodes"
        )
    try:
        replacement = PERTURBATION_SCHEMES[scheme](graph.features)
    except KeyError:
        raise ConfigError(
            f"unknown perturbation scheme {scheme!r}; available: {sorted(PERTURBATION_SCHEMES)}"
        ) from None
    if not mask.bits.any():
        return graph
    features = graph.features.copy()
    features[mask.bits] = replacement
    return graph.with_features(features)


def l_hop_neighborhood(graph: Graph, target: int, hops: int) -> list[int]:
    """All nodes reachable from `target` within `hops` edges, target included.

    Returned in ascending node-id order.
    """
    if not (0 <= target < graph.num_nodes):
        raise InputError(f"target {target} out of range for {graph.num_nodes}-node graph")
    if hops < 0:
        raise InputError("hops must be >= 0")
    dist = {target: 0}
    queue = deque([target])
    while queue:
        u = queue.popleft()
        if dist[u] == hops:
            continue
        for v in graph.neighbors(u):
            v = int(v)
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return sorted(dist)


def graph_from_dict(doc: dict) -> Graph:
    """Parse the JSON graph document {num_nodes, edges, features[, labels]}."""
    try:
        num_nodes = int(doc["num_nodes"])
        edges = doc["edges"]
        features = doc["features"]
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed graph document: missing {e}") from None
    if len(features) != num_nodes:
        raise InputError("features must list one vector per node")
    widths = {len(row) for row in features}
    if len(widths) > 1:
        raise InputError("all feature vectors must share one width")
    return Graph.from_edges(num_nodes, edges, features, labels=doc.get("labels"))


def graph_to_dict(graph: Graph) -> dict:
    doc = {
        "num_nodes": graph.num_nodes,
        "edges": [[u, v] for u, v in graph.edge_list()],
        "features": graph.features.tolist(),
    }
    if graph.labels is not None:
        doc["labels"] = graph.labels.tolist()
    return doc


def load_graph(path: str | Path) -> Graph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))


def save_graph(graph: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph)))
