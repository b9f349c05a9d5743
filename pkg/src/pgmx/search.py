"""Score-based structure search: hill climbing, exhaustive search, shrinking.

All searches maximize the BIC score, exploit its decomposability through a
per-family score cache, and break score ties (within ``tie_epsilon``) by the
lexicographically smallest edge list so results are reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bayesnet import DagStructure, family_bic
from .errors import InputError
from .stats import conditional_dependence_test, dependence_strength
from .table import DataTable

__all__ = ["SearchConfig", "hill_climb", "exhaustive_search", "shrink_parents"]

EXHAUSTIVE_LIMIT = 5


@dataclass(frozen=True)
class SearchConfig:
    max_in_degree: int = 3
    max_iterations: int = 1000
    restarts: int = 3
    tie_epsilon: float = 1e-9
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.max_in_degree < 1:
            raise InputError("max_in_degree must be >= 1")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")


class _FamilyScores:
    """Caches the local BIC of (variable, parent set) families."""

    def __init__(self, data: DataTable):
        self.data = data
        self._cache: dict[tuple[str, tuple[str, ...]], float] = {}

    def __call__(self, v: str, parents: Sequence[str]) -> float:
        key = (v, tuple(sorted(parents)))
        if key not in self._cache:
            self._cache[key] = family_bic(self.data, v, key[1])
        return self._cache[key]


def _has_path(children: dict[str, set[str]], u: str, v: str) -> bool:
    if u == v:
        return True
    stack = [u]
    seen = {u}
    while stack:
        w = stack.pop()
        for c in children[w]:
            if c == v:
                return True
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def _edge_list(variables: Sequence[str], parents: dict[str, set[str]]) -> list[tuple[int, int]]:
    index = {v: i for i, v in enumerate(variables)}
    out = [(index[p], index[c]) for c in variables for p in parents[c]]
    out.sort()
    return out


def _random_dag(
    rng: np.random.Generator, variables: Sequence[str], cap: int
) -> dict[str, set[str]]:
    """A random DAG respecting the in-degree cap (restart starting points)."""
    order = rng.permutation(len(variables))
    parents: dict[str, set[str]] = {v: set() for v in variables}
    for pos in range(1, len(variables)):
        v = variables[order[pos]]
        k = int(rng.integers(0, min(pos, cap) + 1))
        if k:
            picks = rng.choice(pos, size=k, replace=False)
            parents[v] = {variables[order[int(q)]] for q in picks}
    return parents


def _climb_once(
    variables: Sequence[str],
    scores: _FamilyScores,
    parents: dict[str, set[str]],
    config: SearchConfig,
) -> tuple[float, dict[str, set[str]]]:
    children: dict[str, set[str]] = {v: set() for v in variables}
    for c, ps in parents.items():
        for p in ps:
            children[p].add(c)
    current = {v: scores(v, parents[v]) for v in variables}

    for _ in range(config.max_iterations):
        best_delta = config.tie_epsilon
        best_move = None
        for u, v in itertools.permutations(variables, 2):
            if u in parents[v] or v in parents[u]:
                continue
            if len(parents[v]) >= config.max_in_degree:
                continue
            if _has_path(children, v, u):
                continue
            delta = scores(v, parents[v] | {u}) - current[v]
            if delta > best_delta:
                best_delta, best_move = delta, ("add", u, v)
        for v in variables:
            for u in sorted(parents[v]):
                delta = scores(v, parents[v] - {u}) - current[v]
                if delta > best_delta:
                    best_delta, best_move = delta, ("del", u, v)
        for v in variables:
            for u in sorted(parents[v]):
                if len(parents[u]) >= config.max_in_degree:
                    continue
                children[u].discard(v)
                creates_cycle = _has_path(children, u, v)
                children[u].add(v)
                if creates_cycle:
                    continue
                delta = (
                    scores(v, parents[v] - {u})
                    + scores(u, parents[u] | {v})
                    - current[v]
                    - current[u]
                )
                if delta > best_delta:
                    best_delta, best_move = delta, ("rev", u, v)

        if best_move is None:
            break
        kind, u, v = best_move
        if kind == "add":
            parents[v].add(u)
            children[u].add(v)
        elif kind == "del":
            parents[v].discard(u)
            children[u].discard(v)
        else:
            parents[v].discard(u)
            children[u].discard(v)
            parents[u].add(v)
            children[v].add(u)
        current[v] = scores(v, parents[v])
        current[u] = scores(u, parents[u])

    return sum(current.values()), parents


def _pick_best(
    candidates: list[tuple[float, list[tuple[int, int]], dict[str, set[str]]]],
    tie_epsilon: float,
) -> dict[str, set[str]]:
    best = candidates[0]
    for cand in candidates[1:]:
        if cand[0] > best[0] + tie_epsilon:
            best = cand
        elif cand[0] >= best[0] - tie_epsilon and cand[1] < best[1]:
            best = cand
    return best[2]


def hill_climb(
    data: DataTable, variables: Sequence[str], config: SearchConfig | None = None
) -> DagStructure:
    """Best-improvement hill climbing over single-edge additions, deletions
    and reversals, restarted from seeded random DAGs.

    The first restart begins at the empty graph; each accepted move must
    improve the BIC by more than ``tie_epsilon``, so scores are strictly
    increasing within a restart.
    """
    config = config or SearchConfig()
    variables = [str(v) for v in variables]
    if not variables:
        raise InputError("need at least one variable")
    for v in variables:
        data.index(v)
    scores = _FamilyScores(data)
    candidates = []
    for r in range(config.restarts):
        if r == 0:
            start = {v: set() for v in variables}
        else:
            rng = np.random.default_rng([config.seed, r])
            start = _random_dag(rng, variables, config.max_in_degree)
        total, parents = _climb_once(variables, scores, start, config)
        candidates.append((total, _edge_list(variables, parents), parents))
    best = _pick_best(candidates, config.tie_epsilon)
    cards = [data.cardinality(v) for v in variables]
    return DagStructure(variables, cards, {v: tuple(sorted(ps)) for v, ps in best.items()})


_ALL_DAGS: dict[int, list[tuple[tuple[int, ...], ...]]] = {}


def _enumerate_dags(n: int) -> list[tuple[tuple[int, ...], ...]]:
    """Every DAG on n labeled nodes, as per-node parent-index tuples."""
    if n in _ALL_DAGS:
        return _ALL_DAGS[n]
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for orientation in itertools.product((0, 1, 2), repeat=len(pairs)):
        parents: list[list[int]] = [[] for _ in range(n)]
        for (i, j), o in zip(pairs, orientation):
            if o == 1:
                parents[j].append(i)
            elif o == 2:
                parents[i].append(j)
        # Kahn check
        indeg = [len(p) for p in parents]
        children: list[list[int]] = [[] for _ in range(n)]
        for c, ps in enumerate(parents):
            for p in ps:
                children[p].append(c)
        ready = [i for i in range(n) if indeg[i] == 0]
        seen = 0
        while ready:
            seen += 1
            for c in children[ready.pop()]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if seen == n:
            out.append(tuple(tuple(sorted(p)) for p in parents))
    _ALL_DAGS[n] = out
    return out


def exhaustive_search(
    data: DataTable, variables: Sequence[str], config: SearchConfig | None = None
) -> DagStructure:
    """Global BIC maximizer by enumerating every DAG (at most 5 variables)."""
    config = config or SearchConfig()
    variables = [str(v) for v in variables]
    n = len(variables)
    if n < 1:
        raise InputError("need at least one variable")
    if n > EXHAUSTIVE_LIMIT:
        raise InputError(
            f"exhaustive search is limited to {EXHAUSTIVE_LIMIT} variables "
            f"(got {n}); use hill_climb instead"
        )
    for v in variables:
        data.index(v)
    scores = _FamilyScores(data)
    best_score = -np.inf
    best_edges: list[tuple[int, int]] | None = None
    best_parents: tuple[tuple[int, ...], ...] | None = None
    for parents in _enumerate_dags(n):
        if any(len(ps) > config.max_in_degree for ps in parents):
            continue
        total = sum(
            scores(variables[i], [variables[p] for p in ps])
            for i, ps in enumerate(parents)
        )
        edges = sorted((p, c) for c, ps in enumerate(parents) for p in ps)
        if (
            best_parents is None
            or total > best_score + config.tie_epsilon
            or (total >= best_score - config.tie_epsilon and edges < best_edges)
        ):
            best_score, best_edges, best_parents = total, edges, parents
    cards = [data.cardinality(v) for v in variables]
    parent_map = {
        variables[i]: tuple(variables[p] for p in ps)
        for i, ps in enumerate(best_parents)
    }
    return DagStructure(variables, cards, parent_map)


def shrink_parents(
    data: DataTable,
    target: str,
    candidates: Sequence[str],
    alpha: float = 0.05,
    min_stratum: int = 5,
) -> tuple[str, ...]:
    """Prune candidates conditionally independent of the target.

    Candidates are scanned in descending dependence strength (ties by column
    order); a candidate is dropped when it tests independent of the target
    given all remaining candidates. Passes repeat until one removes nothing.
    The conditional tests split alpha across strata: with the raw any-stratum
    rule the chance of keeping a spurious parent grows quickly with the
    conditioning set, which wrecks structure recovery.
    """
    data.index(target)
    candidates = [str(v) for v in candidates]
    if target in candidates:
        raise InputError("candidates must exclude the target")
    order = {v: data.index(v) for v in candidates}
    strengths = {v: dependence_strength(data, v, target) for v in candidates}
    current = sorted(candidates, key=lambda v: (-strengths[v], order[v]))
    while True:
        removed = False
        for v in list(current):
            rest = [u for u in current if u != v]
            if not conditional_dependence_test(
                data, v, target, rest, alpha, min_stratum, stratum_correction=True
            ):
                current.remove(v)
                removed = True
        if not removed:
            break
    return tuple(current)
