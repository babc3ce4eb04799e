"""Instrument/conditioning-set pairs for a single path coefficient.

A pair (w, Z) identifies the coefficient on x -> y when, in the graph with
that edge deleted, Z contains no descendant of y, Z separates w from y, and
w is connected to x given Z (or w is x itself). Maximality asks whether the
pair survives in an edge-maximal supergraph above which no pair works.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Iterator

from .errors import BudgetExceeded, InputError
from .estimand import Estimand, from_iv_pair
from .graph import (
    CausalGraph,
    Edge,
    d_connected_given,
    d_separated,
    descendants,
    missing_edges,
    remove_directed_edge,
)
from .targets import TargetEdge

DEFAULT_BUDGET = 2**20


class Budget:
    """Counts lattice nodes visited across one analysis."""

    def __init__(self, limit: int = DEFAULT_BUDGET):
        self.limit = limit
        self.used = 0

    def tick(self, what: str = "lattice search") -> None:
        self.used += 1
        if self.used > self.limit:
            raise BudgetExceeded(self.limit, what)


@dataclass(frozen=True)
class IvPair:
    w: str
    z: tuple[str, ...]
    target: TargetEdge

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(self.z))
        t = self.target
        if self.w in self.z:
            raise InputError(f"instrument {self.w!r} is in its own conditioning set")
        if t.y in self.z or t.y == self.w:
            raise InputError(f"{t.y!r} cannot be the instrument or be conditioned on")
        if t.x in self.z:
            raise InputError(f"cause {t.x!r} cannot be in the conditioning set")

    def estimand(self) -> Estimand:
        return from_iv_pair(self.target.x, self.target.y, self.w, self.z)

    def __str__(self) -> str:
        return f"(W={self.w}, Z={{{','.join(self.z)}}})"


def _conditions(
    g: CausalGraph, pair: IvPair, gc: CausalGraph | None = None, de_y: set[str] | None = None
) -> tuple[bool, bool, bool]:
    x, y = pair.target.x, pair.target.y
    gc = gc or remove_directed_edge(g, x, y)
    de_y = descendants(g, y) if de_y is None else de_y
    c1 = not (set(pair.z) & de_y)
    c2 = c1 and d_separated(gc, pair.w, y, pair.z)
    c3 = c2 and (pair.w == x or d_connected_given(gc, pair.w, x, pair.z))
    return c1, c2, c3


def _separating_conditions(g: CausalGraph, pair: IvPair) -> bool:
    """The descendant and separation conditions; both only weaken as edges are added."""
    x, y = pair.target.x, pair.target.y
    if set(pair.z) & descendants(g, y):
        return False
    return d_separated(remove_directed_edge(g, x, y), pair.w, y, pair.z)


def is_iv_pair(g: CausalGraph, pair: IvPair) -> bool:
    pair.target.validate(g)
    g.check(pair.w, *pair.z)
    return all(_conditions(g, pair))


def candidate_pairs(
    g: CausalGraph, target: TargetEdge, max_z: int | None = None
) -> Iterator[IvPair]:
    """Well-formed (w, Z) in enumeration order: w by index, Z by size then index."""
    x, y = target.x, target.y
    for w in g.variables:
        if w == y:
            continue
        pool = [v for v in g.variables if v not in (x, y, w)]
        top = len(pool) if max_z is None else min(max_z, len(pool))
        for k in range(top + 1):
            for z in combinations(pool, k):
                yield IvPair(w, z, target)


def enumerate_iv_pairs(
    g: CausalGraph, target: TargetEdge, max_z: int | None = None
) -> list[IvPair]:
    target.validate(g)
    return list(_iv_pairs(g, target, max_z))


@lru_cache(maxsize=200_000)
def _iv_pairs(g: CausalGraph, target: TargetEdge, max_z: int | None) -> tuple[IvPair, ...]:
    gc = remove_directed_edge(g, target.x, target.y)
    de_y = descendants(g, target.y)
    return tuple(
        p for p in candidate_pairs(g, target, max_z) if all(_conditions(g, p, gc, de_y))
    )


def has_iv_pair(g: CausalGraph, target: TargetEdge, max_z: int | None = None) -> bool:
    return bool(_iv_pairs(g, target, max_z))


def choose_pair(g: CausalGraph, pairs: tuple[IvPair, ...] | list[IvPair]) -> IvPair:
    """Smallest conditioning set first, then instrument and Z by variable index."""
    return min(
        pairs,
        key=lambda p: (len(p.z), g.index(p.w), tuple(g.index(v) for v in p.z)),
    )


def _filled_family(
    g: CausalGraph, pair: IvPair, budget: Budget
) -> tuple[list[Edge], set[frozenset[int]]]:
    """All sets of missing edges whose addition keeps the descendant and separation conditions.

    The family is closed under taking subsets, so a canonical DFS that adds
    edges in increasing position and stops at the first failure visits each
    member exactly once.
    """
    extra = missing_edges(g)
    family: set[frozenset[int]] = set()

    def visit(chosen: frozenset[int], start: int) -> None:
        family.add(chosen)
        for i in range(start, len(extra)):
            budget.tick("maximal-fill search")
            grown = chosen | {i}
            if _separating_conditions(g.with_edges(extra[j] for j in grown), pair):
                visit(grown, i + 1)

    if _separating_conditions(g, pair):
        budget.tick("maximal-fill search")
        visit(frozenset(), 0)
    return extra, family


def maximally_filled(
    g: CausalGraph, pair: IvPair, budget: Budget | None = None
) -> list[CausalGraph]:
    """Edge-maximal supergraphs of ``g`` in which ``pair`` is an IV-pair.

    The connection condition can only become true as edges are added, so the
    maximal graphs are the maximal members of that family which also pass it.
    Sorted by their added edges.
    """
    pair.target.validate(g)
    budget = budget or Budget()
    extra, family = _filled_family(g, pair, budget)
    out = []
    for s in family:
        if any(s | {i} in family for i in range(len(extra)) if i not in s):
            continue
        filled = g.with_edges(extra[i] for i in s)
        if all(_conditions(filled, pair)):
            out.append((sorted(s), filled))
    out.sort(key=lambda t: (len(t[0]), t[0]))
    return [f for _, f in out]


def _strict_supergraphs(g: CausalGraph) -> Iterator[CausalGraph]:
    extra = missing_edges(g)
    for k in range(1, len(extra) + 1):
        for combo in combinations(extra, k):
            yield g.with_edges(combo)


def supergraph_witness(
    g: CausalGraph,
    target: TargetEdge,
    budget: Budget | None = None,
    max_z: int | None = None,
) -> CausalGraph | None:
    """First strict supergraph of ``g`` (fewest added edges) admitting an IV-pair."""
    budget = budget or Budget()
    for sup in _strict_supergraphs(g):
        budget.tick("maximality check")
        if has_iv_pair(sup, target, max_z):
            return sup
    return None


@dataclass(frozen=True)
class MaximalFillResult:
    pair: IvPair
    filled_graphs: tuple[CausalGraph, ...]
    witnesses: tuple[CausalGraph | None, ...]

    @property
    def is_maximal(self) -> bool:
        return any(w is None for w in self.witnesses)


def check_maximality(
    g: CausalGraph,
    pair: IvPair,
    budget: Budget | None = None,
    max_z: int | None = None,
) -> MaximalFillResult:
    """Filled graphs of ``pair`` with, for each, a disqualifying supergraph or None."""
    budget = budget or Budget()
    filled = maximally_filled(g, pair, budget)
    witnesses = tuple(supergraph_witness(f, pair.target, budget, max_z) for f in filled)
    return MaximalFillResult(pair, tuple(filled), witnesses)


def is_maximal_iv_pair(
    g: CausalGraph,
    pair: IvPair,
    budget: Budget | None = None,
    max_z: int | None = None,
) -> bool:
    """True iff some filled graph of ``pair`` has no strict supergraph admitting
    any IV-pair for the target. Collective identification is not considered."""
    return check_maximality(g, pair, budget, max_z).is_maximal


def maximal_iv_pairs(
    g: CausalGraph,
    target: TargetEdge,
    budget: Budget | None = None,
    max_z: int | None = None,
) -> list[tuple[IvPair, Estimand]]:
    """Maximal pairs with their estimands; the count bounds k from below."""
    target.validate(g)
    budget = budget or Budget()
    out = []
    for pair in candidate_pairs(g, target, max_z):
        if not _separating_conditions(g, pair):
            continue
        if is_maximal_iv_pair(g, pair, budget, max_z):
            out.append((pair, pair.estimand()))
    return out
