"""Mixed acyclic graphs over an ordered set of variables.

Directed edges carry path coefficients, bidirected edges carry error
covariances. The causal order is part of the graph: a directed edge must
point forward in it, which makes every graph acyclic by construction.
"""

from __future__ import annotations

import enum
import warnings
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .errors import InputError

SOFT_VARIABLE_LIMIT = 7


class EdgeKind(enum.Enum):
    DIRECTED = "directed"
    BIDIRECTED = "bidirected"


@dataclass(frozen=True, order=True)
class Edge:
    """A single edge. For bidirected edges ``tail``/``head`` are just the two ends."""

    kind: EdgeKind
    tail: str
    head: str

    def __str__(self) -> str:
        arrow = "->" if self.kind is EdgeKind.DIRECTED else "<->"
        return f"{self.tail}{arrow}{self.head}"

    @classmethod
    def directed(cls, tail: str, head: str) -> "Edge":
        return cls(EdgeKind.DIRECTED, tail, head)

    @classmethod
    def bidirected(cls, a: str, b: str) -> "Edge":
        return cls(EdgeKind.BIDIRECTED, a, b)


@dataclass(frozen=True)
class CausalGraph:
    """Immutable mixed graph.

    ``variables`` is the causal order. ``directed`` holds ``(tail, head)``
    pairs and ``bidirected`` holds pairs stored with the earlier variable
    first, so equal graphs compare and hash equal.
    """

    variables: tuple[str, ...]
    directed: frozenset[tuple[str, str]] = frozenset()
    bidirected: frozenset[tuple[str, str]] = frozenset()
    _index: dict = field(init=False, repr=False, compare=False, hash=False)
    _children: dict = field(init=False, repr=False, compare=False, hash=False)
    _parents: dict = field(init=False, repr=False, compare=False, hash=False)
    _spouses: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        if not variables:
            raise InputError("a graph needs at least one variable")
        index = {}
        for i, name in enumerate(variables):
            if not isinstance(name, str) or not name:
                raise InputError(f"variable names must be non-empty strings, got {name!r}")
            if name in index:
                raise InputError(f"duplicate variable {name!r}")
            index[name] = i

        directed = set()
        for tail, head in self.directed:
            for v in (tail, head):
                if v not in index:
                    raise InputError(f"unknown variable {v!r} in edge {tail}->{head}")
            if tail == head:
                raise InputError(f"self-loop on {tail!r}")
            if index[tail] >= index[head]:
                raise InputError(
                    f"edge {tail}->{head} violates the causal order {list(variables)}"
                )
            directed.add((tail, head))

        bidirected = set()
        for a, b in self.bidirected:
            for v in (a, b):
                if v not in index:
                    raise InputError(f"unknown variable {v!r} in edge {a}<->{b}")
            if a == b:
                raise InputError(f"self-loop on {a!r}")
            bidirected.add((a, b) if index[a] < index[b] else (b, a))

        children = {v: set() for v in variables}
        parents = {v: set() for v in variables}
        spouses = {v: set() for v in variables}
        for t, h in directed:
            children[t].add(h)
            parents[h].add(t)
        for a, b in bidirected:
            spouses[a].add(b)
            spouses[b].add(a)

        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "directed", frozenset(directed))
        object.__setattr__(self, "bidirected", frozenset(bidirected))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_children", children)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_spouses", spouses)

        if len(variables) > SOFT_VARIABLE_LIMIT:
            warnings.warn(
                f"graph has {len(variables)} variables; lattice searches are "
                f"exponential in the number of missing edges",
                stacklevel=3,
            )

    # -- basic accessors -------------------------------------------------

    def index(self, v: str) -> int:
        self.check(v)
        return self._index[v]

    def check(self, *names: str) -> None:
        for v in names:
            if v not in self._index:
                raise InputError(f"unknown variable {v!r}")

    def __contains__(self, v: object) -> bool:
        return v in self._index

    def children(self, v: str) -> set[str]:
        return set(self._children[v])

    def parents(self, v: str) -> set[str]:
        return set(self._parents[v])

    def spouses(self, v: str) -> set[str]:
        return set(self._spouses[v])

    def has_edge(self, e: Edge) -> bool:
        if e.kind is EdgeKind.DIRECTED:
            return (e.tail, e.head) in self.directed
        return _bikey(self, e.tail, e.head) in self.bidirected

    def edges(self) -> list[Edge]:
        out = [Edge.directed(t, h) for t, h in self.directed]
        out += [Edge.bidirected(a, b) for a, b in self.bidirected]
        return sorted(out, key=self.edge_key)

    def edge_key(self, e: Edge) -> tuple:
        """Sort key ordering edges by kind, then by variable index."""
        kind = 0 if e.kind is EdgeKind.DIRECTED else 1
        return (kind, self._index[e.tail], self._index[e.head])

    def sorted_names(self, names: Iterable[str]) -> list[str]:
        return sorted(names, key=self._index.__getitem__)

    def __str__(self) -> str:
        parts = [str(e) for e in self.edges()]
        return "{" + ", ".join(parts) + "}"

    # -- value-returning edits -------------------------------------------

    def with_edges(self, edges: Iterable[Edge]) -> "CausalGraph":
        directed = set(self.directed)
        bidirected = set(self.bidirected)
        for e in edges:
            if e.kind is EdgeKind.DIRECTED:
                directed.add((e.tail, e.head))
            else:
                bidirected.add((e.tail, e.head))
        return CausalGraph(self.variables, frozenset(directed), frozenset(bidirected))

    def without_edges(self, edges: Iterable[Edge]) -> "CausalGraph":
        directed = set(self.directed)
        bidirected = set(self.bidirected)
        for e in edges:
            if e.kind is EdgeKind.DIRECTED:
                directed.discard((e.tail, e.head))
            else:
                bidirected.discard(_bikey(self, e.tail, e.head))
        return CausalGraph(self.variables, frozenset(directed), frozenset(bidirected))

    @classmethod
    def complete(cls, variables: Iterable[str]) -> "CausalGraph":
        variables = tuple(variables)
        pairs = frozenset(combinations(variables, 2))
        return cls(variables, pairs, pairs)


def _bikey(g: CausalGraph, a: str, b: str) -> tuple[str, str]:
    return (a, b) if g._index[a] < g._index[b] else (b, a)


def descendants(g: CausalGraph, v: str) -> set[str]:
    """All variables reachable from ``v`` along directed edges, ``v`` included."""
    g.check(v)
    seen = {v}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for c in g._children[u]:
            if c not in seen:
                seen.add(c)
                queue.append(c)
    return seen


def ancestors_of_set(g: CausalGraph, nodes: Iterable[str]) -> set[str]:
    seen = set(nodes)
    queue = deque(seen)
    while queue:
        u = queue.popleft()
        for p in g._parents[u]:
            if p not in seen:
                seen.add(p)
                queue.append(p)
    return seen


def d_separated(g: CausalGraph, a: str, b: str, z: Iterable[str] = ()) -> bool:
    """Whether ``z`` d-separates ``a`` from ``b``.

    Bidirected edges carry arrowheads at both ends. Uses reachability over
    (node, arrived-with-arrowhead) states; a collider passes iff it is an
    ancestor of ``z`` (itself included), a non-collider passes iff it is
    not in ``z``.
    """
    z = frozenset(z)
    g.check(a, b, *z)
    if a == b:
        raise InputError(f"d-separation needs two distinct variables, got {a!r} twice")
    if a in z or b in z:
        raise InputError(f"conditioning set {sorted(z)} overlaps the query pair ({a}, {b})")
    return b not in _reachable(g, a, z)


def d_connected_given(g: CausalGraph, a: str, b: str, z: Iterable[str] = ()) -> bool:
    return not d_separated(g, a, b, z)


def _reachable(g: CausalGraph, source: str, z: frozenset[str]) -> set[str]:
    open_colliders = ancestors_of_set(g, z)
    reached = set()
    visited = set()
    queue = deque([(source, False)])
    while queue:
        v, head_in = queue.popleft()
        if (v, head_in) in visited:
            continue
        visited.add((v, head_in))
        if v != source:
            reached.add(v)
        # (neighbour, arrowhead at v, arrowhead at neighbour)
        moves = [(c, False, True) for c in g._children[v]]
        moves += [(p, True, False) for p in g._parents[v]]
        moves += [(s, True, True) for s in g._spouses[v]]
        for u, head_at_v, head_at_u in moves:
            if head_in and head_at_v:
                ok = v in open_colliders
            else:
                ok = v not in z
            if ok:
                queue.append((u, head_at_u))
    return reached


def remove_directed_edge(g: CausalGraph, tail: str, head: str) -> CausalGraph:
    if (tail, head) not in g.directed:
        raise InputError(f"edge {tail}->{head} is not in the graph")
    return g.without_edges([Edge.directed(tail, head)])


def add_edge(g: CausalGraph, e: Edge) -> CausalGraph:
    g.check(e.tail, e.head)
    if e.tail == e.head:
        raise InputError(f"self-loop on {e.tail!r}")
    if e.kind is EdgeKind.DIRECTED and g.index(e.tail) >= g.index(e.head):
        raise InputError(f"edge {e} violates the causal order {list(g.variables)}")
    if g.has_edge(e):
        raise InputError(f"edge {e} is already present")
    return g.with_edges([e])


def possible_edges(g: CausalGraph) -> list[Edge]:
    """Every order-respecting directed edge and every bidirected edge."""
    out = []
    for a, b in combinations(g.variables, 2):
        out.append(Edge.directed(a, b))
    for a, b in combinations(g.variables, 2):
        out.append(Edge.bidirected(a, b))
    return out


def missing_edges(g: CausalGraph) -> list[Edge]:
    """Edges absent from ``g``, sorted by kind and variable index."""
    return [e for e in possible_edges(g) if not g.has_edge(e)]


def directed_paths(g: CausalGraph, x: str, z: str) -> list[tuple[str, ...]]:
    """All directed paths from ``x`` to ``z`` as node sequences, in index order."""
    g.check(x, z)
    out = []

    def walk(path: tuple[str, ...]) -> None:
        v = path[-1]
        if v == z:
            out.append(path)
            return
        for c in g.sorted_names(g._children[v]):
            walk(path + (c,))

    if x != z:
        walk((x,))
    return out
