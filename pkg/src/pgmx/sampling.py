"""Perturb-and-query data generation.

Each sample draws an independent Bernoulli(p) perturbation mask over the
examined nodes, runs the perturbed graph through the oracle, and records one
discrete code per examined node. Row i uses its own generator derived from
(seed, i), so serial and parallel runs produce identical tables and distinct
seeds share no row streams.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError, OracleError
from .graph import Graph, PerturbationMask, apply_perturbation, l_hop_neighborhood
from .oracle import OracleHandle, Prediction
from .table import DataTable, TableMeta

__all__ = [
    "SignificanceRule",
    "significance_indicator",
    "generate_samples",
    "GRAPH_TARGET_NAME",
]

GRAPH_TARGET_NAME = "target"


@dataclass(frozen=True)
class SignificanceRule:
    """Threshold on the probability drop of the originally predicted class."""

    delta: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.delta <= 1.0):
            raise ConfigError(f"delta must lie in [0, 1], got {self.delta}")


def significance_indicator(
    original: Prediction,
    perturbed: Prediction,
    entity: int | None,
    rule: SignificanceRule,
) -> int:
    """1 iff the perturbed prediction differs significantly from the original.

    Significant means the argmax class changed, or the probability of the
    original argmax class dropped by more than `rule.delta`.
    """
    if original.mode != perturbed.mode:
        raise InputError(
            f"prediction modes differ: {original.mode!r} vs {perturbed.mode!r}"
        )
    if original.num_classes != perturbed.num_classes:
        raise InputError("predictions must share the class count")
    before = original.for_entity(entity)
    after = perturbed.for_entity(entity)
    top = int(np.argmax(before))
    if int(np.argmax(after)) != top:
        return 1
    return int(before[top] - after[top] > rule.delta)


class _SerialCallGuard:
    """Serializes predict calls for oracles that declare themselves serial."""

    def __init__(self, oracle: OracleHandle):
        self._oracle = oracle
        self._lock = threading.Lock()

    def predict(self, graph: Graph) -> Prediction:
        with self._lock:
            return self._oracle.predict(graph)


def generate_samples(
    oracle: OracleHandle,
    graph: Graph,
    target: int | None,
    n: int,
    p: float = 0.5,
    rule: SignificanceRule | None = None,
    seed: int = 0,
    hops: int = 3,
    scheme: str = "mean",
    include_target: bool = True,
    jobs: int = 1,
) -> DataTable:
    """Sample the perturbation-response table for one prediction.

    Node mode: columns are exactly the `hops`-hop neighbors of `target`
    (target included) and each cell stores 2*s + I, where s is the node's
    perturbation bit and I the significance indicator of its prediction.
    Graph mode: columns are all nodes (storing s) plus one synthetic target
    column storing the significance indicator of the graph prediction.

    `include_target=False` exempts the target node itself from perturbation;
    its column remains.
    """
    if rule is None:
        rule = SignificanceRule()
    if not (0.0 < p < 1.0):
        raise ConfigError(f"perturbation probability must lie in (0, 1), got {p}")
    if n < 1:
        raise ConfigError(f"need at least one sample, got n={n}")
    if seed < 0:
        raise ConfigError("seed must be non-negative")

    node_mode = oracle.mode == "node"
    if node_mode:
        if target is None:
            raise InputError("node-mode sampling needs a target node")
        columns = l_hop_neighborhood(graph, int(target), hops)
        target_name = str(int(target))
        names = [str(v) for v in columns]
        cards = [4] * len(columns)
    else:
        columns = list(range(graph.num_nodes))
        target_name = GRAPH_TARGET_NAME
        names = [str(v) for v in columns] + [GRAPH_TARGET_NAME]
        cards = [2] * graph.num_nodes + [2]

    original = oracle.predict(graph)
    column_arr = np.asarray(columns, dtype=np.int64)
    target_pos = columns.index(int(target)) if node_mode else None

    predict = oracle.predict
    if jobs > 1 and oracle.concurrency == "serial":
        predict = _SerialCallGuard(oracle).predict

    def sample_row(i: int) -> np.ndarray:
        rng = np.random.default_rng([seed, i])
        bits = rng.random(len(columns)) < p
        if node_mode and not include_target:
            bits[target_pos] = False
        full = np.zeros(graph.num_nodes, dtype=bool)
        full[column_arr] = bits
        perturbed = apply_perturbation(graph, PerturbationMask(full), scheme)
        prediction = predict(perturbed)
        if node_mode:
            row = np.empty(len(columns), dtype=np.uint8)
            for j, v in enumerate(columns):
                flag = significance_indicator(original, prediction, v, rule)
                row[j] = 2 * int(bits[j]) + flag
        else:
            row = np.empty(len(columns) + 1, dtype=np.uint8)
            row[:-1] = bits.astype(np.uint8)
            row[-1] = significance_indicator(original, prediction, None, rule)
        return row

    rows = np.empty((n, len(names)), dtype=np.uint8)
    completed = 0
    try:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for i, row in enumerate(pool.map(sample_row, range(n))):
                    rows[i] = row
                    completed += 1
        else:
            for i in range(n):
                rows[i] = sample_row(i)
                completed += 1
    except OracleError as e:
        raise OracleError(
            f"{e} (sampling aborted after {completed} of {n} rows)",
            raw=e.raw,
            rows_completed=completed,
        ) from e

    meta = TableMeta(
        target=target_name,
        mode=oracle.mode,
        n=n,
        p=p,
        scheme=scheme,
        seed=seed,
        hops=hops if node_mode else None,
        delta=rule.delta,
        include_target=include_target if node_mode else None,
    )
    return DataTable(names, cards, rows, meta=meta)
