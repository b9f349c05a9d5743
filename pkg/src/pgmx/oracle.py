"""Black-box prediction oracles.

Three backings are shipped: a loadable graph-convolution forward pass, a
deterministic motif-role surrogate for the synthetic benchmarks, and a client
for external oracles spoken to over line-delimited JSON on a child process's
stdin/stdout. All oracles are deterministic per call arguments.
"""

from __future__ import annotations

import json
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, InputError, OracleError
from .graph import Graph, graph_from_dict, graph_to_dict

__all__ = [
    "Prediction",
    "OracleHandle",
    "GcnOracle",
    "gcn_forward",
    "MotifRoleOracle",
    "ExternalOracle",
    "motif_role_oracle",
    "load_weight_bundle",
    "encode_request",
    "decode_request",
    "encode_reply",
    "decode_reply",
]

_SUM_TOL = 1e-6


@dataclass(frozen=True)
class Prediction:
    """Per-node class distributions (node mode) or one distribution (graph mode)."""

    mode: str  # "node" | "graph"
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if self.mode == "node":
            if scores.ndim != 2:
                raise InputError("node-mode scores must be (num_nodes, K)")
        elif self.mode == "graph":
            if scores.ndim != 1:
                raise InputError("graph-mode scores must be a single length-K vector")
        else:
            raise InputError(f"unknown prediction mode {self.mode!r}")
        if scores.size == 0 or (scores < -_SUM_TOL).any():
            raise InputError("scores must be non-negative probabilities")
        sums = scores.sum(axis=-1)
        if not np.all(np.abs(sums - 1.0) <= _SUM_TOL):
            raise InputError("each probability vector must sum to 1 within 1e-6")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    @property
    def num_classes(self) -> int:
        return int(self.scores.shape[-1])

    def for_entity(self, entity: int | None) -> np.ndarray:
        """The distribution of one node, or the graph distribution."""
        if self.mode == "graph":
            return self.scores
        if entity is None:
            raise InputError("node-mode predictions need a node id")
        return self.scores[int(entity)]


class OracleHandle:
    """Base prediction interface: declared mode, class count and thread-safety."""

    mode: str = "node"
    num_classes: int = 0
    concurrency: str = "concurrent-safe"  # or "serial"
    kind: str = "abstract"

    def predict(self, graph: Graph) -> Prediction:
        raise NotImplementedError


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def load_weight_bundle(source: str | Path | dict) -> dict:
    """Read a weight bundle {"layers": [{"w": ..., "b": ...}], "num_classes": K}."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read weight bundle {source}: {e}") from None
    else:
        doc = source
    if "layers" not in doc or "num_classes" not in doc:
        raise ConfigError("weight bundle needs 'layers' and 'num_classes'")
    return doc


class GcnOracle(OracleHandle):
    """Deterministic graph-convolution forward pass with loadable weights.

    Each layer propagates with the row-normalized adjacency (self-loops
    added), applies an affine map, and ReLU between layers; the head is a
    softmax. Graph mode mean-pools the final logits before the softmax.
    """

    kind = "gcn-forward"
    concurrency = "concurrent-safe"

    def __init__(self, bundle: dict, mode: str = "node"):
        if mode not in ("node", "graph"):
            raise ConfigError(f"unknown oracle mode {mode!r}")
        self.mode = mode
        self.num_classes = int(bundle["num_classes"])
        self.layers: list[tuple[np.ndarray, np.ndarray]] = []
        width = None
        for i, layer in enumerate(bundle["layers"]):
            w = np.asarray(layer["w"], dtype=np.float64)
            b = np.asarray(layer["b"], dtype=np.float64)
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ConfigError(f"layer {i}: w must be 2-d and b must match its width")
            if width is not None and w.shape[0] != width:
                raise ConfigError(f"layer {i}: input width {w.shape[0]} != previous {width}")
            width = w.shape[1]
            self.layers.append((w, b))
        if not self.layers:
            raise ConfigError("weight bundle has no layers")
        if width != self.num_classes:
            raise ConfigError(
                f"last layer width {width} must equal num_classes {self.num_classes}"
            )

    @classmethod
    def from_file(cls, path: str | Path, mode: str = "node") -> "GcnOracle":
        return cls(load_weight_bundle(path), mode=mode)

    @property
    def feature_width(self) -> int:
        return int(self.layers[0][0].shape[0])

    def predict(self, graph: Graph) -> Prediction:
        if graph.feature_width != self.feature_width:
            raise InputError(
                f"graph features have width {graph.feature_width}, "
                f"oracle expects {self.feature_width}"
            )
        adj = graph.adjacency.astype(np.float64)
        np.fill_diagonal(adj, 1.0)
        prop = adj / adj.sum(axis=1, keepdims=True)
        h = graph.features
        for i, (w, b) in enumerate(self.layers):
            h = prop @ h @ w + b
            if i < len(self.layers) - 1:
                h = np.maximum(h, 0.0)
        if self.mode == "graph":
            return Prediction("graph", _softmax(h.mean(axis=0)))
        return Prediction("node", _softmax(h))


def gcn_forward(graph: Graph, weights: str | Path | dict, mode: str = "node") -> Prediction:
    """One-shot forward pass through a weight bundle (file path or document)."""
    return GcnOracle(load_weight_bundle(weights), mode=mode).predict(graph)


class MotifRoleOracle(OracleHandle):
    """Surrogate standing in for a trained structural-role classifier.

    Roles are read from ground truth: an intact motif yields a confident
    one-hot-like distribution on each member's role; every member whose
    features were replaced degrades the whole motif's role-identifiability.
    Nodes outside any motif keep a fixed base-class distribution, so their
    predictions never react to perturbation.
    """

    kind = "motif-role"
    mode = "node"
    concurrency = "concurrent-safe"

    def __init__(
        self,
        reference_features: np.ndarray,
        labels: Sequence[int],
        motifs: Sequence[Sequence[int]],
        num_classes: int,
        confidence: float = 0.9,
        degradation: float = 0.15,
    ):
        self.reference = np.asarray(reference_features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.motifs = [tuple(int(v) for v in m) for m in motifs]
        self.num_classes = int(num_classes)
        self.confidence = float(confidence)
        self.degradation = float(degradation)
        n = self.reference.shape[0]
        self.motif_index = np.full(n, -1, dtype=np.int64)
        for i, m in enumerate(self.motifs):
            for v in m:
                self.motif_index[v] = i
        self.motif_sizes = np.array([len(m) for m in self.motifs], dtype=np.int64)

    def predict(self, graph: Graph) -> Prediction:
        if graph.num_nodes != self.reference.shape[0]:
            raise InputError("graph size differs from the oracle's reference graph")
        if graph.feature_width != self.reference.shape[1]:
            raise InputError("graph feature width differs from the oracle's reference")
        perturbed = (graph.features != self.reference).any(axis=1)
        broken = np.zeros(len(self.motifs), dtype=np.int64)
        if len(self.motifs):
            hit = perturbed & (self.motif_index >= 0)
            np.add.at(broken, self.motif_index[hit], 1)
        k = self.num_classes
        scores = np.empty((graph.num_nodes, k), dtype=np.float64)
        top = np.full(graph.num_nodes, self.confidence)
        in_motif = self.motif_index >= 0
        top[in_motif] = np.maximum(
            self.confidence - self.degradation * broken[self.motif_index[in_motif]],
            0.05,
        )
        rest = (1.0 - top) / (k - 1)
        scores[:] = rest[:, None]
        scores[np.arange(graph.num_nodes), self.labels] = top
        return Prediction("node", scores)


def motif_role_oracle(dataset_spec, seed: int = 0) -> MotifRoleOracle:
    """Build the surrogate from a synthetic dataset, its file, or its id.

    Accepts a SyntheticDataset, a path to a dataset JSON, or one of the
    built-in dataset ids; anything else is a configuration error.
    """
    from . import bench  # local import: bench builds on this module

    if isinstance(dataset_spec, bench.SyntheticDataset):
        ds = dataset_spec
    elif isinstance(dataset_spec, (str, Path)) and Path(str(dataset_spec)).exists():
        ds = bench.load_dataset(dataset_spec)
    elif isinstance(dataset_spec, str) and dataset_spec in bench.DATASET_IDS:
        ds = bench.generate_synthetic(dataset_spec, seed=seed)
    else:
        raise ConfigError(f"unknown dataset {dataset_spec!r}")
    return MotifRoleOracle(
        ds.graph.features, ds.labels, ds.motifs, num_classes=ds.num_classes
    )


# ---------------------------------------------------------------------------
# Wire protocol: one JSON object per line.
#   request:  {"id": int, "graph": <graph document>}
#   reply:    {"id": int, "mode": "node"|"graph", "scores": [[...]] or [...]}
# Error replies carry {"id": int, "error": str} and fail the pending call.
# ---------------------------------------------------------------------------


def encode_request(request_id: int, graph: Graph) -> str:
    return json.dumps({"id": int(request_id), "graph": graph_to_dict(graph)})


def decode_request(line: str) -> tuple[int, Graph]:
    doc = json.loads(line)
    return int(doc["id"]), graph_from_dict(doc["graph"])


def encode_reply(request_id: int, prediction: Prediction) -> str:
    return json.dumps(
        {
            "id": int(request_id),
            "mode": prediction.mode,
            "scores": prediction.scores.tolist(),
        }
    )


def decode_reply(line: str) -> tuple[int, Prediction]:
    try:
        doc = json.loads(line)
        if "error" in doc:
            raise OracleError(f"oracle replied with error: {doc['error']}", raw=line)
        return int(doc["id"]), Prediction(str(doc["mode"]), np.asarray(doc["scores"]))
    except OracleError:
        raise
    except (ValueError, KeyError, TypeError, InputError) as e:
        raise OracleError(f"malformed oracle reply: {e}", raw=line) from None


class ExternalOracle(OracleHandle):
    """Client for an oracle living in a child process.

    Requests and replies are exchanged one JSON object per line over the
    child's stdin/stdout. Calls are strictly sequenced (declared serial).
    """

    kind = "external-process"
    concurrency = "serial"

    def __init__(self, command: Sequence[str], mode: str, num_classes: int):
        if mode not in ("node", "graph"):
            raise ConfigError(f"unknown oracle mode {mode!r}")
        self.command = list(command)
        self.mode = mode
        self.num_classes = int(num_classes)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()
        self._next_id = 0

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as e:
                raise OracleError(f"cannot start oracle process: {e}") from None
        return self._proc

    def predict(self, graph: Graph) -> Prediction:
        with self._lock:
            proc = self._ensure_process()
            request_id = self._next_id
            self._next_id += 1
            try:
                proc.stdin.write(encode_request(request_id, graph) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as e:
                raise OracleError(f"oracle process pipe failed: {e}") from None
            if not line:
                raise OracleError(
                    f"oracle process exited (status {proc.poll()}) without replying",
                    raw="",
                )
            reply_id, prediction = decode_reply(line)
            if reply_id != request_id:
                raise OracleError(
                    f"reply id {reply_id} does not match request id {request_id}",
                    raw=line,
                )
        if prediction.mode != self.mode:
            raise OracleError(
                f"oracle declared mode {self.mode!r} but replied {prediction.mode!r}",
                raw=line,
            )
        if prediction.num_classes != self.num_classes:
            raise OracleError(
                f"oracle declared {self.num_classes} classes but replied "
                f"{prediction.num_classes}",
                raw=line,
            )
        if prediction.mode == "node" and prediction.scores.shape[0] != graph.num_nodes:
            raise OracleError("node-mode reply must score every node", raw=line)
        return prediction

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None

    def __enter__(self) -> "ExternalOracle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
