"""Variable selection: build a small superset of the target's Markov blanket.

Two constructions are provided. The general one unions the dependents of
every variable that tests dependent on the target; the cheaper one (valid
when the target is a leaf of the generating network) keeps the target's
direct dependents only. Both rank the survivors by dependence strength and
truncate to the top M, always keeping the target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import InputError
from .stats import chi_square_test, contingency_table, dependence_strength
from .table import DataTable

__all__ = ["SelectionReport", "select_u_general", "select_u_nochild", "select_with_oracle"]


@dataclass(frozen=True)
class SelectionReport:
    """Outcome of variable selection for one target."""

    target: str
    s_of_t: tuple[str, ...]  # variables marginally dependent on the target
    u_of_t: tuple[str, ...]  # target first, then survivors by descending strength
    strengths: dict[str, float]  # dependence statistic vs target, pre-truncation
    truncated: bool
    M: int
    alpha: float | None = None

    @property
    def others(self) -> tuple[str, ...]:
        return self.u_of_t[1:]


def _assemble(
    names: Sequence[str],
    target: str,
    dependent: Callable[[str, str], bool],
    strength: Callable[[str, str], float],
    M: int,
    general: bool,
) -> tuple[tuple[str, ...], tuple[str, ...], dict[str, float], bool]:
    order = {v: i for i, v in enumerate(names)}
    s_of_t = [v for v in names if v != target and dependent(v, target)]
    if general:
        chosen = set(s_of_t)
        for v in s_of_t:
            for u in names:
                if u != v and u != target and u not in chosen and dependent(u, v):
                    chosen.add(u)
    else:
        chosen = set(s_of_t)
    strengths = {v: float(strength(v, target)) for v in chosen}
    ranked = sorted(chosen, key=lambda v: (-strengths[v], order[v]))
    truncated = len(ranked) > M
    return tuple(s_of_t), tuple(ranked[:M]), strengths, truncated


def select_with_oracle(
    names: Sequence[str],
    target: str,
    dependent: Callable[[str, str], bool],
    strength: Callable[[str, str], float] | None = None,
    M: int | None = None,
    general: bool = True,
) -> SelectionReport:
    """Selection against an arbitrary dependence oracle (used by exact tests)."""
    if target not in names:
        raise InputError(f"target {target!r} is not among the variables")
    if strength is None:
        strength = lambda a, b: 1.0  # noqa: E731 - rank degenerate, order by id
    if M is None:
        M = len(names)
    s_of_t, ranked, strengths, truncated = _assemble(
        names, target, dependent, strength, M, general
    )
    return SelectionReport(target, s_of_t, (target,) + ranked, strengths, truncated, M)


def _data_callables(data: DataTable, alpha: float):
    def dependent(a: str, b: str) -> bool:
        return chi_square_test(contingency_table(data, a, b), alpha).dependent

    def strength(a: str, b: str) -> float:
        return dependence_strength(data, a, b)

    return dependent, strength


def select_u_general(
    data: DataTable, target: str, M: int = 20, alpha: float = 0.05
) -> SelectionReport:
    """Union the dependents of every variable dependent on the target.

    Per-pair chi-square tests at level alpha; dependents-of-dependents are
    tested only for members of S(target), keeping the test count at
    O(|S(target)| * m).
    """
    data.index(target)
    if M < 1:
        raise InputError("M must be >= 1")
    dependent, strength = _data_callables(data, alpha)
    s_of_t, ranked, strengths, truncated = _assemble(
        data.names, target, dependent, strength, M, general=True
    )
    return SelectionReport(
        target, s_of_t, (target,) + ranked, strengths, truncated, M, alpha=alpha
    )


def select_u_nochild(
    data: DataTable, target: str, M: int = 20, alpha: float = 0.05
) -> SelectionReport:
    """Keep only the target's direct dependents (leaf-target construction)."""
    data.index(target)
    if M < 1:
        raise InputError("M must be >= 1")
    dependent, strength = _data_callables(data, alpha)
    s_of_t, ranked, strengths, truncated = _assemble(
        data.names, target, dependent, strength, M, general=False
    )
    return SelectionReport(
        target, s_of_t, (target,) + ranked, strengths, truncated, M, alpha=alpha
    )
