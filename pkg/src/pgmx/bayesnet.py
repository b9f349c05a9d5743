"""Discrete Bayesian networks: structures, fitting, scoring, inference.

Structures are immutable; edge edits return new values and reject cycles.
Scoring uses the natural logarithm throughout. Conditional queries are exact:
non-ancestors of the query and evidence are dropped, the remaining joint is
enumerated when small enough, and summed out factor-by-factor otherwise
(both routes agree to machine precision and are cross-checked in the tests).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CycleError, InputError
from .table import DataTable, TableMeta

__all__ = [
    "DagStructure",
    "BayesianNetwork",
    "dimension",
    "fit_mle",
    "log_likelihood",
    "family_bic",
    "bic_score",
    "conditional_query",
    "markov_blanket",
    "i_equivalent",
    "forward_sample",
    "d_separated",
]

_CPT_TOL = 1e-9
_ENUMERATION_LIMIT = 1 << 22  # joint sizes above this use factor summation


class DagStructure:
    """Directed acyclic graph over named discrete variables.

    Parent lists are kept in variable order; construction validates
    acyclicity, so every reachable value is a DAG.
    """

    def __init__(
        self,
        variables: Sequence[str],
        cardinalities: Sequence[int],
        parents: Mapping[str, Iterable[str]] | None = None,
    ):
        self.variables = tuple(str(v) for v in variables)
        self.cardinalities = tuple(int(c) for c in cardinalities)
        if len(self.variables) != len(set(self.variables)):
            raise InputError("duplicate variable names")
        if len(self.cardinalities) != len(self.variables):
            raise InputError("one cardinality per variable required")
        if any(c < 1 for c in self.cardinalities):
            raise InputError("cardinalities must be >= 1")
        self._index = {v: i for i, v in enumerate(self.variables)}
        if parents:
            unknown = set(parents) - set(self.variables)
            if unknown:
                raise InputError(f"parent sets given for undeclared variables {sorted(unknown)}")
        normalized: dict[str, tuple[str, ...]] = {}
        for v in self.variables:
            plist = tuple(parents.get(v, ())) if parents else ()
            for p in plist:
                if p not in self._index:
                    raise InputError(f"parent {p!r} of {v!r} is not a declared variable")
                if p == v:
                    raise CycleError(f"{v!r} cannot be its own parent")
            if len(set(plist)) != len(plist):
                raise InputError(f"duplicate parent in Pa({v!r})")
            normalized[v] = tuple(sorted(plist, key=self._index.__getitem__))
        self.parents = normalized
        self._children: dict[str, tuple[str, ...]] = {v: () for v in self.variables}
        kids: dict[str, list[str]] = {v: [] for v in self.variables}
        for v, ps in self.parents.items():
            for p in ps:
                kids[p].append(v)
        for v in self.variables:
            self._children[v] = tuple(sorted(kids[v], key=self._index.__getitem__))
        self._topo = self._topological_order()

    def _topological_order(self) -> tuple[str, ...]:
        indeg = {v: len(self.parents[v]) for v in self.variables}
        ready = [v for v in self.variables if indeg[v] == 0]
        order: list[str] = []
        while ready:
            # pop smallest index for determinism
            ready.sort(key=self._index.__getitem__)
            v = ready.pop(0)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self.variables):
            raise CycleError("parent sets contain a directed cycle")
        return tuple(order)

    # -- read access ------------------------------------------------------

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise InputError(f"unknown variable {v!r}") from None

    def cardinality(self, v: str) -> int:
        return self.cardinalities[self.index(v)]

    def parent_set(self, v: str) -> tuple[str, ...]:
        self.index(v)
        return self.parents[v]

    def children(self, v: str) -> tuple[str, ...]:
        self.index(v)
        return self._children[v]

    def topological_order(self) -> tuple[str, ...]:
        return self._topo

    def edges(self) -> list[tuple[str, str]]:
        """Edge list sorted by (parent index, child index)."""
        out = [(p, v) for v in self.variables for p in self.parents[v]]
        out.sort(key=lambda e: (self._index[e[0]], self._index[e[1]]))
        return out

    def edge_index_list(self) -> list[tuple[int, int]]:
        return [(self._index[p], self._index[c]) for p, c in self.edges()]

    def has_edge(self, u: str, v: str) -> bool:
        return u in self.parents[v]

    def has_path(self, u: str, v: str) -> bool:
        """True iff a directed path u ~> v exists (u == v counts)."""
        if u == v:
            return True
        stack = [u]
        seen = {u}
        while stack:
            w = stack.pop()
            for c in self._children[w]:
                if c == v:
                    return True
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    # -- edits (return new values) ----------------------------------------

    def _replace_parents(self, updates: Mapping[str, tuple[str, ...]]) -> "DagStructure":
        parents = dict(self.parents)
        parents.update(updates)
        return DagStructure(self.variables, self.cardinalities, parents)

    def with_edge(self, u: str, v: str) -> "DagStructure":
        if self.has_edge(u, v):
            raise InputError(f"edge {u!r}->{v!r} already present")
        if self.has_path(v, u):
            raise CycleError(f"adding {u!r}->{v!r} would create a cycle")
        return self._replace_parents({v: self.parents[v] + (u,)})

    def without_edge(self, u: str, v: str) -> "DagStructure":
        if not self.has_edge(u, v):
            raise InputError(f"edge {u!r}->{v!r} not present")
        return self._replace_parents({v: tuple(p for p in self.parents[v] if p != u)})

    def with_reversed_edge(self, u: str, v: str) -> "DagStructure":
        removed = self.without_edge(u, v)
        if removed.has_path(u, v):
            raise CycleError(f"reversing {u!r}->{v!r} would create a cycle")
        return removed._replace_parents({u: removed.parents[u] + (v,)})

    # -- equivalence -------------------------------------------------------

    def skeleton(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset((p, v)) for p, v in self.edges())

    def immoralities(self) -> frozenset[tuple[str, str, str]]:
        """Unshielded colliders as (parent_a, parent_b, child), parents sorted.

        Pairs sort by name so immorality sets compare across structures with
        different variable orders.
        """
        skel = self.skeleton()
        found = set()
        for v in self.variables:
            ps = self.parents[v]
            for i in range(len(ps)):
                for j in range(i + 1, len(ps)):
                    a, b = sorted((ps[i], ps[j]))
                    if frozenset((a, b)) not in skel:
                        found.add((a, b, v))
        return frozenset(found)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DagStructure)
            and self.variables == other.variables
            and self.cardinalities == other.cardinalities
            and self.parents == other.parents
        )

    def __hash__(self) -> int:
        return hash((self.variables, self.cardinalities, tuple(sorted(self.parents.items()))))

    def __repr__(self) -> str:
        return f"DagStructure({len(self.variables)} vars, edges={self.edges()})"

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "cardinalities": list(self.cardinalities),
            "parents": {v: list(self.parents[v]) for v in self.variables},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DagStructure":
        return cls(doc["variables"], doc["cardinalities"], doc.get("parents", {}))

    @classmethod
    def empty(cls, variables: Sequence[str], cardinalities: Sequence[int]) -> "DagStructure":
        return cls(variables, cardinalities, {})


def dimension(structure: DagStructure) -> int:
    """Number of free parameters: sum over v of (card(v)-1) * prod card(Pa(v))."""
    total = 0
    for v in structure.variables:
        block = structure.cardinality(v) - 1
        for p in structure.parent_set(v):
            block *= structure.cardinality(p)
        total += block
    return total


def _parent_configs(structure: DagStructure, v: str, data: DataTable) -> tuple[np.ndarray, int]:
    """Mixed-radix parent-configuration index per row, and the config count."""
    ps = structure.parent_set(v)
    idx = np.zeros(data.n, dtype=np.int64)
    n_configs = 1
    for p in ps:
        card = structure.cardinality(p)
        idx = idx * card + data.column(p)
        n_configs *= card
    return idx, n_configs


_FAMILY_CELL_LIMIT = 1 << 26


def _family_counts(structure: DagStructure, v: str, data: DataTable) -> np.ndarray:
    card = structure.cardinality(v)
    idx, n_configs = _parent_configs(structure, v, data)
    if n_configs * card > _FAMILY_CELL_LIMIT:
        raise InputError(
            f"family of {v!r} spans {n_configs * card} cells; "
            "reduce its parent set or the cardinalities"
        )
    flat = np.bincount(idx * card + data.column(v), minlength=n_configs * card)
    return flat.reshape(n_configs, card)


@dataclass(frozen=True)
class BayesianNetwork:
    """A structure plus one conditional probability table per variable.

    `cpts[v]` has one row per parent configuration (mixed radix over the
    canonical parent order) and one column per value. `counts` holds the
    fitted tallies when the network came from data; `uniform_rows` flags
    parent configurations that had no support and received uniform rows.
    """

    structure: DagStructure
    cpts: dict[str, np.ndarray]
    counts: dict[str, np.ndarray] | None = None
    uniform_rows: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        for v in self.structure.variables:
            if v not in self.cpts:
                raise InputError(f"missing CPT for {v!r}")
            cpt = np.asarray(self.cpts[v], dtype=np.float64)
            n_configs = 1
            for p in self.structure.parent_set(v):
                n_configs *= self.structure.cardinality(p)
            if cpt.shape != (n_configs, self.structure.cardinality(v)):
                raise InputError(
                    f"CPT of {v!r} must be ({n_configs}, {self.structure.cardinality(v)}),"
                    f" got {cpt.shape}"
                )
            if (cpt < 0).any() or not np.all(np.abs(cpt.sum(axis=1) - 1.0) <= _CPT_TOL):
                raise InputError(f"CPT rows of {v!r} must be distributions (sum 1 ± 1e-9)")
            cpt.setflags(write=False)
            self.cpts[v] = cpt

    @property
    def variables(self) -> tuple[str, ...]:
        return self.structure.variables

    def query_cpt(self, v: str) -> np.ndarray:
        """CPT used for conditional queries: Laplace-smoothed when fitted."""
        if self.counts is None or v not in self.counts:
            return self.cpts[v]
        counts = self.counts[v].astype(np.float64) + 1.0
        return counts / counts.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        doc = {
            **self.structure.to_dict(),
            "cpts": {v: self.cpts[v].tolist() for v in self.variables},
        }
        if self.counts is not None:
            doc["counts"] = {v: self.counts[v].tolist() for v in self.variables}
        if self.uniform_rows:
            doc["uniform_rows"] = {v: list(r) for v, r in self.uniform_rows.items()}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "BayesianNetwork":
        structure = DagStructure.from_dict(doc)
        cpts = {v: np.asarray(t, dtype=np.float64) for v, t in doc["cpts"].items()}
        counts = None
        if "counts" in doc:
            counts = {v: np.asarray(t, dtype=np.int64) for v, t in doc["counts"].items()}
        uniform = {v: list(r) for v, r in doc.get("uniform_rows", {}).items()}
        return cls(structure, cpts, counts=counts, uniform_rows=uniform)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "BayesianNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_mle(structure: DagStructure, data: DataTable) -> BayesianNetwork:
    """Maximum-likelihood CPTs: conditional relative frequencies.

    Parent configurations never observed get a uniform row and are flagged.
    """
    if data.n == 0:
        raise InputError("cannot fit on an empty table")
    for v in structure.variables:
        if structure.cardinality(v) != data.cardinality(v):
            raise InputError(
                f"cardinality of {v!r} differs between structure "
                f"({structure.cardinality(v)}) and data ({data.cardinality(v)})"
            )
    cpts: dict[str, np.ndarray] = {}
    counts: dict[str, np.ndarray] = {}
    uniform_rows: dict[str, list[int]] = {}
    for v in structure.variables:
        tallies = _family_counts(structure, v, data)
        totals = tallies.sum(axis=1, keepdims=True)
        cpt = np.empty_like(tallies, dtype=np.float64)
        seen = totals[:, 0] > 0
        cpt[seen] = tallies[seen] / totals[seen]
        if (~seen).any():
            cpt[~seen] = 1.0 / structure.cardinality(v)
            uniform_rows[v] = np.flatnonzero(~seen).tolist()
        cpts[v] = cpt
        counts[v] = tallies
    return BayesianNetwork(structure, cpts, counts=counts, uniform_rows=uniform_rows)


def log_likelihood(bn: BayesianNetwork, data: DataTable) -> float:
    """Sum over rows and variables of log P(value | parent values), natural log.

    Returns -inf when the network assigns zero probability to an observed cell.
    """
    parts: list[float] = []
    for v in bn.variables:
        if bn.structure.cardinality(v) != data.cardinality(v):
            raise InputError(
                f"cardinality of {v!r} differs between network "
                f"({bn.structure.cardinality(v)}) and data ({data.cardinality(v)})"
            )
        tallies = _family_counts(bn.structure, v, data)
        cpt = bn.cpts[v]
        mask = tallies > 0
        if (cpt[mask] == 0).any():
            return float("-inf")
        parts.append(float(np.sum(tallies[mask] * np.log(cpt[mask]))))
    return math.fsum(parts)


def family_bic(data: DataTable, v: str, parents: Sequence[str]) -> float:
    """Local BIC contribution of one family; structure scores sum these."""
    scratch = DagStructure(
        data.names, data.cardinalities, {v: tuple(parents)}
    )
    tallies = _family_counts(scratch, v, data)
    totals = tallies.sum(axis=1, keepdims=True)
    mask = tallies > 0
    ll = float(np.sum(tallies[mask] * np.log(tallies[mask] / np.broadcast_to(totals, tallies.shape)[mask])))
    penalty_block = data.cardinality(v) - 1
    for p in parents:
        penalty_block *= data.cardinality(p)
    return ll - 0.5 * math.log(data.n) * penalty_block


def bic_score(structure: DagStructure, data: DataTable) -> float:
    """Log-likelihood at the MLE minus (ln n)/2 times the model dimension."""
    bn = fit_mle(structure, data)
    return log_likelihood(bn, data) - 0.5 * math.log(data.n) * dimension(structure)


def markov_blanket(structure: DagStructure, v: str) -> tuple[str, ...]:
    """Parents, children, and children's other parents of v, in variable order."""
    out = set(structure.parent_set(v)) | set(structure.children(v))
    for c in structure.children(v):
        out.update(structure.parent_set(c))
    out.discard(v)
    return tuple(sorted(out, key=structure.index))


def i_equivalent(s1: DagStructure, s2: DagStructure) -> bool:
    """True iff the structures share skeleton and immoralities."""
    if set(s1.variables) != set(s2.variables):
        raise InputError("structures must share one variable set")
    return s1.skeleton() == s2.skeleton() and s1.immoralities() == s2.immoralities()


def d_separated(
    structure: DagStructure,
    x: Iterable[str] | str,
    y: Iterable[str] | str,
    z: Iterable[str] = (),
) -> bool:
    """Graphical conditional-independence test: no active trail from x to y given z."""
    xs = {x} if isinstance(x, str) else set(x)
    ys = {y} if isinstance(y, str) else set(y)
    zs = set(z)
    for v in xs | ys | zs:
        structure.index(v)
    if xs & ys:
        return False
    # ancestors of z, z included: colliders on active trails must hit this set
    an_z = set(zs)
    stack = list(zs)
    while stack:
        v = stack.pop()
        for p in structure.parent_set(v):
            if p not in an_z:
                an_z.add(p)
                stack.append(p)
    frontier: list[tuple[str, str]] = [(v, "up") for v in xs]
    visited: set[tuple[str, str]] = set()
    while frontier:
        v, direction = frontier.pop()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v not in zs and v in ys:
            return False
        if direction == "up" and v not in zs:
            for p in structure.parent_set(v):
                frontier.append((p, "up"))
            for c in structure.children(v):
                frontier.append((c, "down"))
        elif direction == "down":
            if v not in zs:
                for c in structure.children(v):
                    frontier.append((c, "down"))
            if v in an_z:
                for p in structure.parent_set(v):
                    frontier.append((p, "up"))
    return True


# -- exact inference -------------------------------------------------------


def _ancestral_closure(structure: DagStructure, seeds: Iterable[str]) -> list[str]:
    keep = set(seeds)
    stack = list(keep)
    while stack:
        v = stack.pop()
        for p in structure.parent_set(v):
            if p not in keep:
                keep.add(p)
                stack.append(p)
    return [v for v in structure.topological_order() if v in keep]


def _conditional_tensor(bn: BayesianNetwork, v: str) -> tuple[tuple[str, ...], np.ndarray]:
    """CPT of v as a tensor over (parents..., v) in canonical parent order."""
    ps = bn.structure.parent_set(v)
    shape = tuple(bn.structure.cardinality(p) for p in ps) + (bn.structure.cardinality(v),)
    return ps + (v,), bn.query_cpt(v).reshape(shape)


def _query_by_enumeration(
    bn: BayesianNetwork, order: list[str], target: str, evidence: Mapping[str, int]
) -> np.ndarray:
    pos = {v: i for i, v in enumerate(order)}
    joint = np.ones((), dtype=np.float64)
    for k, v in enumerate(order):
        vars_v, tensor = _conditional_tensor(bn, v)
        parent_positions = [pos[p] for p in vars_v[:-1]]
        axis_order = np.argsort(parent_positions)
        tensor = np.transpose(tensor, axes=[*axis_order, len(parent_positions)])
        shape = [1] * (k + 1)
        for p in vars_v[:-1]:
            shape[pos[p]] = bn.structure.cardinality(p)
        shape[k] = bn.structure.cardinality(v)
        joint = joint[..., None] * tensor.reshape(shape)
    slicer = tuple(
        evidence[v] if v in evidence else slice(None) for v in order
    )
    sliced = joint[slicer]
    remaining = [v for v in order if v not in evidence]
    sum_axes = tuple(i for i, v in enumerate(remaining) if v != target)
    marginal = sliced.sum(axis=sum_axes) if sum_axes else sliced
    return np.atleast_1d(marginal)


def _query_by_factor_sum(
    bn: BayesianNetwork, order: list[str], target: str, evidence: Mapping[str, int]
) -> np.ndarray:
    index = {v: i for i, v in enumerate(order)}
    factors: list[tuple[tuple[str, ...], np.ndarray]] = []
    for v in order:
        vars_v, tensor = _conditional_tensor(bn, v)
        keep_vars = []
        slicer = []
        for u in vars_v:
            if u in evidence:
                slicer.append(int(evidence[u]))
            else:
                slicer.append(slice(None))
                keep_vars.append(u)
        factors.append((tuple(keep_vars), tensor[tuple(slicer)]))

    def multiply(fa, fb):
        va, ta = fa
        vb, tb = fb
        union = sorted(set(va) | set(vb), key=index.__getitem__)
        upos = {u: i for i, u in enumerate(union)}

        def expand(vs, t):
            perm = np.argsort([upos[u] for u in vs])
            t = np.transpose(t, axes=perm) if vs else t
            shape = [1] * len(union)
            for u in vs:
                shape[upos[u]] = bn.structure.cardinality(u)
            return t.reshape(shape)

        return tuple(union), expand(va, ta) * expand(vb, tb)

    hidden = [v for v in order if v != target and v not in evidence]
    for h in hidden:
        touching = [f for f in factors if h in f[0]]
        rest = [f for f in factors if h not in f[0]]
        if not touching:
            continue
        product = touching[0]
        for f in touching[1:]:
            product = multiply(product, f)
        vs, t = product
        axis = vs.index(h)
        rest.append((tuple(u for u in vs if u != h), t.sum(axis=axis)))
        factors = rest
    result = factors[0]
    for f in factors[1:]:
        result = multiply(result, f)
    vs, t = result
    if vs != (target,):
        axes = tuple(i for i, u in enumerate(vs) if u != target)
        t = t.sum(axis=axes)
    return np.atleast_1d(t)


def conditional_query(
    bn: BayesianNetwork, target: str, evidence: Mapping[str, int] | None = None
) -> np.ndarray:
    """Exact posterior distribution of `target` given the evidence assignment.

    Fitted networks answer with Laplace-smoothed CPT copies (pseudo-count 1);
    hand-built networks are evaluated exactly as given. Smoothing never touches
    scoring.
    """
    evidence = dict(evidence or {})
    bn.structure.index(target)
    if target in evidence:
        raise InputError("evidence must not assign the target")
    for v, val in evidence.items():
        if not (0 <= int(val) < bn.structure.cardinality(v)):
            raise InputError(f"evidence value {val} out of range for {v!r}")
        evidence[v] = int(val)
    order = _ancestral_closure(bn.structure, [target, *evidence])
    size = 1
    for v in order:
        size *= bn.structure.cardinality(v)
    if size <= _ENUMERATION_LIMIT:
        marginal = _query_by_enumeration(bn, order, target, evidence)
    else:
        marginal = _query_by_factor_sum(bn, order, target, evidence)
    mass = marginal.sum()
    if mass <= 0.0:
        raise InputError("evidence has zero probability under this network")
    return marginal / mass


def forward_sample(bn: BayesianNetwork, n: int, seed: int = 0) -> DataTable:
    """Ancestral sampling: n rows drawn in topological order, seed-reproducible."""
    if n < 1:
        raise InputError("need at least one sample")
    rng = np.random.default_rng(seed)
    structure = bn.structure
    values: dict[str, np.ndarray] = {}
    for v in structure.topological_order():
        ps = structure.parent_set(v)
        idx = np.zeros(n, dtype=np.int64)
        for p in ps:
            idx = idx * structure.cardinality(p) + values[p]
        rows = bn.cpts[v][idx]
        u = rng.random(n)
        cum = np.cumsum(rows, axis=1)
        values[v] = (u[:, None] > cum).sum(axis=1).astype(np.uint8)
    data = np.column_stack([values[v] for v in structure.variables])
    meta = TableMeta(target=structure.variables[-1], mode="synthetic", n=n, seed=seed)
    return DataTable(structure.variables, structure.cardinalities, data, meta=meta)
