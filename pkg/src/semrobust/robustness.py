"""Assumption-level robustness analysis of a query.

Every missing edge of the analyst's graph is one assumption (a zero
coefficient or a zero error covariance). A set of assumptions induces the
graph that keeps every other possible edge. The analysis enumerates the
minimal identifying sets (msas), groups their estimands into extensional
classes, and derives degrees, constraints and relevance from them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateConditioning,
    DegenerateEvaluation,
    InputError,
    NotIdentified,
)
from .estimand import (
    CondCov,
    Constant,
    Estimand,
    Ratio,
    distinct,
    evaluate,
    product,
    render,
    total,
)
from .graph import (
    CausalGraph,
    Edge,
    EdgeKind,
    d_separated,
    descendants,
    directed_paths,
    missing_edges,
)
from .identification import (
    DEFAULT_BUDGET,
    Budget,
    IvPair,
    _iv_pairs,
    choose_pair,
    maximal_iv_pairs,
)
from .numerics import (
    Instantiation,
    implied_covariance,
    locally_identified,
    random_instantiation,
)
from .targets import Query, TargetEdge, TotalEffect

log = logging.getLogger(__name__)

COLLECTIVE_CAVEAT = (
    "maximal IV-pairs are checked against single IV-pairs only; graphs where the "
    "target is identified collectively through several pairs are not excluded"
)
NOT_IDENTIFIED = "not identified by implemented criteria"


@dataclass(frozen=True)
class Assumption:
    """A zero coefficient (``kind`` directed) or zero error covariance (bidirected)."""

    kind: EdgeKind
    a: str
    b: str

    @property
    def edge(self) -> Edge:
        return Edge(self.kind, self.a, self.b)

    @classmethod
    def for_edge(cls, e: Edge) -> "Assumption":
        return cls(e.kind, e.tail, e.head)

    @property
    def label(self) -> str:
        if self.kind is EdgeKind.DIRECTED:
            return f"coef({self.a}->{self.b})=0"
        return f"cov(e_{self.a},e_{self.b})=0"

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class AssumptionSet:
    variables: tuple[str, ...]
    members: frozenset[Assumption]

    @property
    def induced_graph(self) -> CausalGraph:
        return CausalGraph.complete(self.variables).without_edges(a.edge for a in self.members)

    def sorted(self) -> list[Assumption]:
        g = CausalGraph(self.variables)
        return sorted(self.members, key=lambda a: g.edge_key(a.edge))


@dataclass(frozen=True)
class Msa:
    assumptions: AssumptionSet
    estimand: Estimand


@dataclass
class AnalysisConfig:
    budget: int = DEFAULT_BUDGET
    max_z: int | None = None
    oracle: bool = False
    seed: int = 0
    n_probes: int = 8


def assumption_universe(g: CausalGraph) -> list[Assumption]:
    return [Assumption.for_edge(e) for e in missing_edges(g)]


def assumption_set(g: CausalGraph, members: Iterable[Assumption]) -> AssumptionSet:
    return AssumptionSet(g.variables, frozenset(members))


def _as_graph(s: AssumptionSet | CausalGraph) -> CausalGraph:
    return s if isinstance(s, CausalGraph) else s.induced_graph


# -- strategies ------------------------------------------------------------


def identify_total_effect(
    s: AssumptionSet | CausalGraph, x: str, z: str, max_z: int | None = None
) -> Estimand | None:
    """Estimand for TE(x, z) by adjustment, else by composing edge estimands."""
    g = _as_graph(s)
    TotalEffect(x, z).validate(g)
    paths = directed_paths(g, x, z)
    if not paths:
        return Constant(0.0)

    # (i) back-door adjustment over non-descendants of x
    no_out = g.without_edges(Edge.directed(x, c) for c in g.children(x))
    pool = [v for v in g.variables if v not in descendants(g, x) and v != z]
    top = len(pool) if max_z is None else min(max_z, len(pool))
    for k in range(top + 1):
        for adj in combinations(pool, k):
            if d_separated(no_out, x, z, adj):
                return Ratio(CondCov(z, x, adj), CondCov(x, x, adj))

    # (ii) every edge on every directed path identified on its own
    edge_est = {}
    for path in paths:
        for t, h in zip(path, path[1:]):
            if (t, h) in edge_est:
                continue
            pairs = _iv_pairs(g, TargetEdge(t, h), max_z)
            if not pairs:
                return None
            edge_est[(t, h)] = choose_pair(g, pairs).estimand()
    return total(product(edge_est[(t, h)] for t, h in zip(p, p[1:])) for p in paths)


def strategy_estimand(g: CausalGraph, target: Query, max_z: int | None = None) -> Estimand | None:
    """Estimand from the graphical strategy in ``g`` itself, or None."""
    if isinstance(target, TargetEdge):
        pairs = _iv_pairs(g, target, max_z)
        return choose_pair(g, pairs).estimand() if pairs else None
    return identify_total_effect(g, target.x, target.z, max_z)


def true_total_effect(inst: Instantiation, x: str, z: str) -> float:
    """Sum over directed paths of coefficient products."""
    g = inst.graph
    TotalEffect(x, z).validate(g)
    return float(
        sum(np.prod([inst.coeff[(t, h)] for t, h in zip(p, p[1:])]) for p in directed_paths(g, x, z))
    )


def true_value(inst: Instantiation, target: Query) -> float:
    if isinstance(target, TargetEdge):
        return inst.coeff[(target.x, target.y)]
    return true_total_effect(inst, target.x, target.z)


# -- the assumption lattice --------------------------------------------------


class AssumptionLattice:
    """Identification over subsets of the analyst's assumptions.

    ``sufficient`` applies the graphical strategy to the induced graph of a
    set directly. That test is not monotone (an instrument can lose its link
    to the cause when more edges are assumed away), so ``identified`` takes
    the upward closure: a set identifies the target when some subset does.
    The msas are the minimal sufficient sets under either reading.
    """

    def __init__(self, g: CausalGraph, target: Query, config: AnalysisConfig | None = None):
        target.validate(g)
        self.g = g
        self.target = target
        self.config = config or AnalysisConfig()
        self.universe = assumption_universe(g)
        self.budget = Budget(self.config.budget)
        self._complete = CausalGraph.complete(g.variables)
        self._raw: dict[frozenset[int], Estimand | None] = {}
        self._closure: dict[frozenset[int], bool] = {}
        self._msas: list[frozenset[int]] | None = None

    def key(self, members: Iterable[Assumption]) -> frozenset[int]:
        pos = {a: i for i, a in enumerate(self.universe)}
        try:
            return frozenset(pos[a] for a in members)
        except KeyError as exc:
            raise InputError(f"{exc.args[0]} is not an assumption of the model") from None

    def members(self, key: frozenset[int]) -> AssumptionSet:
        return assumption_set(self.g, (self.universe[i] for i in sorted(key)))

    def graph(self, key: frozenset[int]) -> CausalGraph:
        return self._complete.without_edges(self.universe[i].edge for i in key)

    def estimand(self, key: frozenset[int]) -> Estimand | None:
        if key not in self._raw:
            self.budget.tick("assumption lattice")
            self._raw[key] = strategy_estimand(self.graph(key), self.target, self.config.max_z)
        return self._raw[key]

    def sufficient(self, key: frozenset[int]) -> bool:
        return self.estimand(key) is not None

    def identified(self, key: frozenset[int]) -> bool:
        if key not in self._closure:
            self._closure[key] = self.sufficient(key) or any(
                self.identified(key - {i}) for i in sorted(key)
            )
        return self._closure[key]

    def msas(self) -> list[frozenset[int]]:
        """Minimal sufficient sets by increasing size, skipping supersets of earlier finds."""
        if self._msas is None:
            found: list[frozenset[int]] = []
            n = len(self.universe)
            for k in range(n + 1):
                for combo in combinations(range(n), k):
                    key = frozenset(combo)
                    if any(m <= key for m in found):
                        continue
                    if self.sufficient(key):
                        found.append(key)
            self._msas = found
        return self._msas


def identified_in(
    s: AssumptionSet, target: Query, config: AnalysisConfig | None = None
) -> bool:
    """Whether the assumptions in ``s`` suffice (some subset of them identifies the target)."""
    g = CausalGraph.complete(s.variables).without_edges(a.edge for a in s.members)
    lattice = AssumptionLattice(g, target, config)
    return lattice.identified(lattice.key(s.members))


def enumerate_msas(g: CausalGraph, target: Query, config: AnalysisConfig | None = None) -> list[Msa]:
    lattice = AssumptionLattice(g, target, config)
    return [Msa(lattice.members(k), lattice.estimand(k)) for k in lattice.msas()]


# -- degrees, constraints, relevance -------------------------------------------


def estimand_classes(
    estimands: Sequence[Estimand], n_probes: int = 8, seed: int = 0
) -> list[list[int]]:
    """Partition indices into classes of extensionally equal estimands, in first-seen order."""
    classes: list[list[int]] = []
    for i, e in enumerate(estimands):
        for cls in classes:
            if not distinct(estimands[cls[0]], e, n_probes, seed):
                cls.append(i)
                break
        else:
            classes.append([i])
    return classes


def degrees(msas: Sequence[Msa], n_probes: int = 8, seed: int = 0) -> tuple[int, int, int]:
    """(m, k, df) with df = k - 1."""
    if not msas:
        raise NotIdentified("no minimal sufficient assumption set; degrees are undefined")
    k = len(estimand_classes([m.estimand for m in msas], n_probes, seed))
    return len(msas), k, k - 1


def induced_constraints(
    msas: Sequence[Msa], n_probes: int = 8, seed: int = 0
) -> list[tuple[Estimand, Estimand]]:
    """k - 1 equalities between consecutive class representatives."""
    ests = [m.estimand for m in msas]
    reps = [ests[c[0]] for c in estimand_classes(ests, n_probes, seed)]
    return list(zip(reps, reps[1:]))


def relevance(g: CausalGraph, target: Query, config: AnalysisConfig | None = None) -> dict[Assumption, bool]:
    used = set()
    for m in enumerate_msas(g, target, config):
        used |= m.assumptions.members
    return {a: a in used for a in assumption_universe(g)}


def is_relevant(
    g: CausalGraph, target: Query, a: Assumption, config: AnalysisConfig | None = None
) -> bool:
    rel = relevance(g, target, config)
    if a not in rel:
        raise InputError(f"{a} is not an assumption of the model")
    return rel[a]


def submodel_from_msas(g: CausalGraph, msas: Sequence[Msa]) -> tuple[CausalGraph, list[Assumption]]:
    if not msas:
        raise NotIdentified("the target is not identified; there is no relevant submodel")
    keep = set().union(*(m.assumptions.members for m in msas))
    retained = [a for a in assumption_universe(g) if a in keep]
    sub = CausalGraph.complete(g.variables).without_edges(a.edge for a in retained)
    return sub, retained


def relevant_submodel(
    g: CausalGraph, target: Query, config: AnalysisConfig | None = None
) -> tuple[CausalGraph, list[Assumption]]:
    """Graph keeping only assumptions that belong to some msa."""
    return submodel_from_msas(g, enumerate_msas(g, target, config))


# -- full report -------------------------------------------------------------


@dataclass
class RobustnessReport:
    graph: CausalGraph
    target: Query
    config: AnalysisConfig
    msas: list[Msa]
    maximal_pairs: list[tuple[IvPair, Estimand]] | None
    m_corroborated: int
    k_identified: int
    df: int | None
    estimand_classes: list[list[int]]
    constraints: list[tuple[Estimand, Estimand]]
    relevance: dict[Assumption, bool]
    relevant_submodel: CausalGraph | None
    retained_assumptions: list[Assumption]
    caveats: list[str] = field(default_factory=list)
    oracle: dict | None = None

    @property
    def identified(self) -> bool:
        return bool(self.msas)

    @property
    def status(self) -> str:
        return "identified" if self.identified else NOT_IDENTIFIED

    @property
    def maximal_pair_classes(self) -> int | None:
        if self.maximal_pairs is None:
            return None
        ests = [e for _, e in self.maximal_pairs]
        return len(estimand_classes(ests, self.config.n_probes, self.config.seed))


def analyze(g: CausalGraph, target: Query, config: AnalysisConfig | None = None) -> RobustnessReport:
    config = config or AnalysisConfig()
    lattice = AssumptionLattice(g, target, config)
    msas = [Msa(lattice.members(k), lattice.estimand(k)) for k in lattice.msas()]
    log.debug("%s: %d msas after %d lattice nodes", target, len(msas), lattice.budget.used)
    ests = [m.estimand for m in msas]
    classes = estimand_classes(ests, config.n_probes, config.seed)
    reps = [ests[c[0]] for c in classes]
    used = set().union(*(m.assumptions.members for m in msas)) if msas else set()
    rel = {a: a in used for a in lattice.universe}
    if msas:
        sub, retained = submodel_from_msas(g, msas)
    else:
        sub, retained = None, []

    caveats = []
    pairs = None
    if isinstance(target, TargetEdge):
        pairs = maximal_iv_pairs(g, target, lattice.budget, config.max_z)
        caveats.append(COLLECTIVE_CAVEAT)

    report = RobustnessReport(
        graph=g,
        target=target,
        config=config,
        msas=msas,
        maximal_pairs=pairs,
        m_corroborated=len(msas),
        k_identified=len(classes),
        df=len(classes) - 1 if msas else None,
        estimand_classes=classes,
        constraints=list(zip(reps, reps[1:])),
        relevance=rel,
        relevant_submodel=sub,
        retained_assumptions=retained,
        caveats=caveats,
    )

    if pairs is not None and msas and report.maximal_pair_classes != report.k_identified:
        caveats.append(
            f"maximal IV-pairs yield {report.maximal_pair_classes} distinct estimands while "
            f"the msas yield k={report.k_identified}; the msa-based k is authoritative"
        )
    caveats.extend(_degenerate_caveats(g, msas, config.seed))
    if config.oracle:
        report.oracle = _oracle_check(g, target, lattice, msas, config, caveats)
    return report


def _degenerate_caveats(g: CausalGraph, msas: Sequence[Msa], seed: int) -> list[str]:
    """Flag msa estimands that cannot be evaluated under the analyst's own model."""
    sigma = implied_covariance(random_instantiation(g, seed))
    out = []
    for m in msas:
        try:
            evaluate(m.estimand, sigma)
        except (DegenerateEvaluation, DegenerateConditioning):
            out.append(
                f"estimand {render(m.estimand)} is degenerate under the analyst's model "
                f"(its msa relies on edges the model rules out)"
            )
    return out


def _oracle_check(g, target, lattice, msas, config, caveats) -> dict:
    graphical = lattice.identified(frozenset(range(len(lattice.universe))))
    oracle = locally_identified(g, target, seed=config.seed)
    if oracle and not graphical:
        caveats.append(
            "numeric oracle finds the target locally identified in the model, but no "
            "implemented graphical criterion identifies it; reported degrees are lower bounds"
        )
    elif graphical and not oracle:
        caveats.append("graphical criterion identifies the target but the numeric oracle does not")
    disagreements = []
    for m in msas:
        if not locally_identified(m.assumptions.induced_graph, target, seed=config.seed):
            disagreements.append(sorted(a.label for a in m.assumptions.members))
    if disagreements:
        caveats.append(f"numeric oracle rejects {len(disagreements)} msa graph(s)")
    return {
        "model_identified": oracle,
        "graphical_identified": graphical,
        "msa_disagreements": disagreements,
    }
