"""Discrete (conditional) independence testing over data-table columns.

The chi-square tail probability is computed from a regularized upper
incomplete gamma function implemented here, so the package carries no
statistics dependency. Series and continued-fraction branches follow the
classical split at x = a + 1; both iterate to float64 machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .table import DataTable

__all__ = [
    "ContingencyTable",
    "TestResult",
    "regularized_upper_gamma",
    "chi_square_tail",
    "contingency_table",
    "chi_square_test",
    "conditional_dependence_test",
    "dependence_strength",
]

_EPS = 1e-16
_MAX_ITER = 800
_FPMIN = 1e-300


def _lower_gamma_series(a: float, x: float) -> float:
    """P(a, x) by the ascending series; valid and fast for x < a + 1."""
    term = 1.0 / a
    total = term
    for k in range(1, _MAX_ITER):
        term *= x / (a + k)
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    log_pref = -x + a * math.log(x) - math.lgamma(a)
    return total * math.exp(log_pref)


def _upper_gamma_contfrac(a: float, x: float) -> float:
    """Q(a, x) by the continued fraction (modified Lentz); for x >= a + 1."""
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    log_pref = -x + a * math.log(x) - math.lgamma(a)
    return math.exp(log_pref) * h


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a) for a > 0, x >= 0."""
    if a <= 0:
        raise InputError("shape parameter must be positive")
    if x < 0:
        raise InputError("argument must be non-negative")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _lower_gamma_series(a, x)
    return _upper_gamma_contfrac(a, x)


def chi_square_tail(statistic: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution with `dof` dof."""
    if dof < 1:
        raise InputError("dof must be >= 1")
    if statistic < 0:
        raise InputError("statistic must be non-negative")
    return regularized_upper_gamma(dof / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # (row_card, col_card) int64
    row_var: str
    col_var: str
    total: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float
    dependent: bool
    alpha: float


def contingency_table(
    data: DataTable,
    a: str,
    b: str,
    condition: Mapping[str, int] | None = None,
) -> ContingencyTable:
    """Tally joint counts of columns a, b over rows matching `condition`."""
    if a == b:
        raise InputError("contingency table needs two distinct variables")
    ca, cb = data.cardinality(a), data.cardinality(b)
    col_a, col_b = data.column(a), data.column(b)
    keep = np.ones(data.n, dtype=bool)
    if condition:
        for var, val in condition.items():
            if var in (a, b):
                raise InputError(f"condition variable {var!r} overlaps the tested pair")
            if not (0 <= int(val) < data.cardinality(var)):
                raise InputError(f"condition value {val} out of range for {var!r}")
            keep &= data.column(var) == int(val)
    codes = col_a[keep].astype(np.int64) * cb + col_b[keep]
    counts = np.bincount(codes, minlength=ca * cb).reshape(ca, cb)
    return ContingencyTable(counts, a, b, int(counts.sum()))


def _pearson_statistic(counts: np.ndarray) -> tuple[float, int]:
    """Pearson statistic over cells with positive expectation, plus its dof.

    dof counts only rows/columns with a nonzero marginal. The accumulation is
    oriented canonically so transposing the table yields a bit-identical value.
    """
    if counts.shape[0] > counts.shape[1] or (
        counts.shape[0] == counts.shape[1] and not _row_major_first(counts)
    ):
        counts = counts.T
    total = counts.sum()
    row_marg = counts.sum(axis=1)
    col_marg = counts.sum(axis=0)
    r_eff = int((row_marg > 0).sum())
    c_eff = int((col_marg > 0).sum())
    dof = max(r_eff - 1, 0) * max(c_eff - 1, 0)
    if dof == 0 or total == 0:
        return 0.0, 0
    expected = np.outer(row_marg, col_marg) / total
    mask = expected > 0
    obs = counts[mask].astype(np.float64)
    exp = expected[mask]
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return stat, dof


def _row_major_first(counts: np.ndarray) -> bool:
    # Deterministic orientation for square tables: compare flattened tuples.
    flat = counts.ravel().tolist()
    flat_t = counts.T.ravel().tolist()
    return flat <= flat_t


def chi_square_test(table: ContingencyTable, alpha: float = 0.05) -> TestResult:
    """Pearson chi-square test of independence on a 2-way table.

    Degenerate tables (a zero-width margin) are reported independent with p=1.
    """
    if table.total < 1:
        return TestResult(0.0, 0, 1.0, False, alpha)
    stat, dof = _pearson_statistic(table.counts)
    if dof == 0:
        return TestResult(stat, 0, 1.0, False, alpha)
    p = chi_square_tail(stat, dof)
    return TestResult(stat, dof, p, p < alpha, alpha)


def _strata_codes(data: DataTable, cond_set: Sequence[str]) -> np.ndarray:
    codes = np.zeros(data.n, dtype=np.int64)
    for var in cond_set:
        codes = codes * data.cardinality(var) + data.column(var)
    return codes


def conditional_dependence_test(
    data: DataTable,
    a: str,
    b: str,
    cond_set: Iterable[str],
    alpha: float = 0.05,
    min_stratum: int = 5,
    stratum_correction: bool = False,
) -> int:
    """1 iff a and b test dependent in ANY stratum of the conditioning set.

    Strata are the observed realizations of `cond_set`; strata with fewer
    than `min_stratum` rows are skipped. With every stratum skipped (or an
    empty table) the variables are declared independent.

    By default each stratum is tested at `alpha` (so the overall false-alarm
    rate grows with the stratum count); `stratum_correction=True` splits
    alpha across the tested strata, keeping the overall size near alpha.
    """
    cond = sorted(set(cond_set))
    if a in cond or b in cond:
        raise InputError("conditioning set must exclude the tested pair")
    if not cond:
        return int(chi_square_test(contingency_table(data, a, b), alpha).dependent)
    ca, cb = data.cardinality(a), data.cardinality(b)
    col_a, col_b = data.column(a), data.column(b)
    codes = _strata_codes(data, cond)
    values, counts_per = np.unique(codes, return_counts=True)
    supported = [(v, c) for v, c in zip(values, counts_per) if c >= min_stratum]
    if not supported:
        return 0
    level = alpha / len(supported) if stratum_correction else alpha
    for value, count in supported:
        keep = codes == value
        cell = col_a[keep].astype(np.int64) * cb + col_b[keep]
        counts = np.bincount(cell, minlength=ca * cb).reshape(ca, cb)
        stratum = ContingencyTable(counts, a, b, int(count))
        if chi_square_test(stratum, level).dependent:
            return 1
    return 0


def dependence_strength(data: DataTable, a: str, b: str) -> float:
    """Unconditioned Pearson statistic; larger means more dependent."""
    if a == b:
        raise InputError("dependence strength needs two distinct variables")
    stat, _ = _pearson_statistic(contingency_table(data, a, b).counts)
    return stat
