"""End-to-end explanation pipelines: sample, select, learn, fit, query.

`explain` learns an unconstrained network over the selected variables;
`explain_nochild` learns the network over the other variables first, prunes
the target's parent candidates by conditional-independence shrinking, then
attaches the target as a leaf, so the returned structure never gives the
target a child and its Markov blanket is exactly its parent set.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .bayesnet import BayesianNetwork, DagStructure, conditional_query, fit_mle, markov_blanket
from .errors import ExplainerError, OracleError, PipelineError
from .graph import Graph
from .oracle import OracleHandle
from .sampling import SignificanceRule, generate_samples
from .search import EXHAUSTIVE_LIMIT, SearchConfig, exhaustive_search, hill_climb, shrink_parents
from .selection import SelectionReport, select_u_general, select_u_nochild
from .table import DataTable

__all__ = [
    "ExplainConfig",
    "ExplanationMeta",
    "Explanation",
    "explain",
    "explain_nochild",
    "learn_structure_nochild",
]


@dataclass(frozen=True)
class ExplainConfig:
    """Knobs of the whole pipeline; the search gets a derived sub-config."""

    n: int = 800
    p: float = 0.5
    hops: int = 3
    M: int = 20
    alpha: float = 0.05
    delta: float = 0.1
    scheme: str = "mean"
    seed: int = 0
    include_target: bool = True
    jobs: int = 1
    search: SearchConfig | None = None

    def search_config(self) -> SearchConfig:
        if self.search is not None:
            return self.search
        return SearchConfig(alpha=self.alpha, seed=self.seed)


@dataclass
class ExplanationMeta:
    mode: str
    pipeline: str  # "general" | "nochild"
    n: int
    p: float
    hops: int | None
    scheme: str
    seed: int
    alpha: float
    delta: float
    M: int
    include_target: bool
    degenerate: bool
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        # runtime is volatile and stays out of the serialized form so that
        # equal-seed runs produce byte-identical files
        doc = self.__dict__.copy()
        doc.pop("runtime_seconds")
        return doc


@dataclass
class Explanation:
    """A learned network around one prediction, plus how it was obtained."""

    target: str
    network: BayesianNetwork
    markov_blanket: tuple[str, ...]
    selection: SelectionReport
    baseline_query: np.ndarray
    meta: ExplanationMeta

    def ranked_variables(self) -> tuple[str, ...]:
        """Target first, then selected variables by descending dependence."""
        return self.selection.u_of_t

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "network": self.network.to_dict(),
            "markov_blanket": list(self.markov_blanket),
            "selection": {
                "s_of_t": list(self.selection.s_of_t),
                "u_of_t": list(self.selection.u_of_t),
                "strengths": {k: self.selection.strengths[k] for k in sorted(self.selection.strengths)},
                "truncated": self.selection.truncated,
                "M": self.selection.M,
                "alpha": self.selection.alpha,
            },
            "baseline_query": self.baseline_query.tolist(),
            "meta": self.meta.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, doc: dict) -> "Explanation":
        sel = doc["selection"]
        selection = SelectionReport(
            target=doc["target"],
            s_of_t=tuple(sel["s_of_t"]),
            u_of_t=tuple(sel["u_of_t"]),
            strengths={k: float(v) for k, v in sel["strengths"].items()},
            truncated=bool(sel["truncated"]),
            M=int(sel["M"]),
            alpha=sel.get("alpha"),
        )
        meta = ExplanationMeta(**doc["meta"])
        return cls(
            target=doc["target"],
            network=BayesianNetwork.from_dict(doc["network"]),
            markov_blanket=tuple(doc["markov_blanket"]),
            selection=selection,
            baseline_query=np.asarray(doc["baseline_query"], dtype=np.float64),
            meta=meta,
        )

    @classmethod
    def load(cls, path: str | Path) -> "Explanation":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def query(self, evidence: Mapping[str, int]) -> np.ndarray:
        return conditional_query(self.network, self.target, evidence)


def _run_stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except OracleError:
        raise
    except ExplainerError as e:
        raise PipelineError(stage, str(e)) from e


def _sample(oracle: OracleHandle, graph: Graph, target: int | None, config: ExplainConfig) -> DataTable:
    return generate_samples(
        oracle,
        graph,
        target,
        n=config.n,
        p=config.p,
        rule=SignificanceRule(config.delta),
        seed=config.seed,
        hops=config.hops,
        scheme=config.scheme,
        include_target=config.include_target,
        jobs=config.jobs,
    )


def _learn(data: DataTable, variables: list[str], config: SearchConfig) -> DagStructure:
    if len(variables) <= EXHAUSTIVE_LIMIT:
        return exhaustive_search(data, variables, config)
    return hill_climb(data, variables, config)


def _meta(config: ExplainConfig, mode: str, pipeline: str, degenerate: bool, t0: float) -> ExplanationMeta:
    return ExplanationMeta(
        mode=mode,
        pipeline=pipeline,
        n=config.n,
        p=config.p,
        hops=config.hops if mode == "node" else None,
        scheme=config.scheme,
        seed=config.seed,
        alpha=config.alpha,
        delta=config.delta,
        M=config.M,
        include_target=config.include_target,
        degenerate=degenerate,
        runtime_seconds=time.perf_counter() - t0,
    )


def explain(
    oracle: OracleHandle,
    graph: Graph,
    target: int | None,
    config: ExplainConfig | None = None,
) -> Explanation:
    """Unconstrained pipeline: the learned network may give the target children."""
    config = config or ExplainConfig()
    t0 = time.perf_counter()
    table = _run_stage("sampling", _sample, oracle, graph, target, config)
    tname = table.meta.target
    report = _run_stage("selection", select_u_general, table, tname, config.M, config.alpha)
    sub = table.subset(report.u_of_t)
    structure = _run_stage("structure", _learn, sub, list(report.u_of_t), config.search_config())
    network = _run_stage("fit", fit_mle, structure, sub)
    blanket = markov_blanket(structure, tname)
    baseline = _run_stage("query", conditional_query, network, tname, {})
    degenerate = len(report.s_of_t) == 0 or len(blanket) == 0
    return Explanation(
        target=tname,
        network=network,
        markov_blanket=blanket,
        selection=report,
        baseline_query=baseline,
        meta=_meta(config, table.meta.mode, "general", degenerate, t0),
    )


def explain_nochild(
    oracle: OracleHandle,
    graph: Graph,
    target: int | None,
    config: ExplainConfig | None = None,
) -> Explanation:
    """Leaf-target pipeline: the target receives edges only from its pruned parents."""
    config = config or ExplainConfig()
    t0 = time.perf_counter()
    table = _run_stage("sampling", _sample, oracle, graph, target, config)
    tname = table.meta.target
    report = _run_stage("selection", select_u_nochild, table, tname, config.M, config.alpha)
    others = list(report.others)
    structure = _run_stage(
        "structure", learn_structure_nochild, table, tname, others, config.search_config()
    )
    sub = table.subset(report.u_of_t)
    network = _run_stage("fit", fit_mle, structure, sub)
    blanket = markov_blanket(network.structure, tname)
    baseline = _run_stage("query", conditional_query, network, tname, {})
    degenerate = len(network.structure.parent_set(tname)) == 0
    return Explanation(
        target=tname,
        network=network,
        markov_blanket=blanket,
        selection=report,
        baseline_query=baseline,
        meta=_meta(config, table.meta.mode, "nochild", degenerate, t0),
    )


def learn_structure_nochild(
    data: DataTable,
    target: str,
    candidates: list[str],
    config: SearchConfig | None = None,
) -> DagStructure:
    """Learn over the candidates, shrink the target's parents, attach the target.

    The result always satisfies children(target) == (); its Markov blanket
    therefore equals its parent set.
    """
    config = config or SearchConfig()
    tcard = data.cardinality(target)
    if not candidates:
        return DagStructure([target], [tcard], {})
    sub = data.subset(candidates)
    base = _learn(sub, candidates, config)
    parents = shrink_parents(data, target, candidates, alpha=config.alpha)
    variables = [target, *candidates]
    cards = [tcard] + [data.cardinality(v) for v in candidates]
    parent_map = {v: base.parent_set(v) for v in candidates}
    parent_map[target] = parents
    return DagStructure(variables, cards, parent_map)
