"""End-to-end acceptance checks, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary (see
conftest.py).
"""

import json

import numpy as np
import pytest

from oracles import all_graphs, literal_relevance, random_graphs, unvech, vech
from semrobust.estimand import CondCov, Product, Ratio, distinct, evaluate, random_pd_matrix
from semrobust.graph import CausalGraph, EdgeKind
from semrobust.identification import (
    IvPair,
    check_maximality,
    enumerate_iv_pairs,
    has_iv_pair,
    is_iv_pair,
    is_maximal_iv_pair,
    maximal_iv_pairs,
    maximally_filled,
)
from semrobust.numerics import (
    CovarianceMatrix,
    central_jacobian,
    implied_covariance,
    locally_identified,
    numerical_rank,
    random_instantiation,
)
from semrobust.robustness import (
    Assumption,
    AssumptionLattice,
    analyze,
    enumerate_msas,
    relevance,
    true_value,
)
from semrobust.targets import TargetEdge, TotalEffect

D, B = EdgeKind.DIRECTED, EdgeKind.BIDIRECTED
NO_XZ_ARC = Assumption(B, "x", "z")
NO_YZ_ARC = Assumption(B, "y", "z")
NO_XY_ARC = Assumption(B, "x", "y")
NO_XZ_ARROW = Assumption(D, "x", "z")

CHAIN = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z")})
CHAIN3 = CausalGraph(("X1", "X2", "X3"), {("X1", "X2"), ("X2", "X3")})
SINGLE = CausalGraph(("x", "y"), {("x", "y")})

B_EDGE, C_EDGE, TE = TargetEdge("x", "y"), TargetEdge("y", "z"), TotalEffect("x", "z")
C3 = TargetEdge("X2", "X3")


def cc(a, b, *z):
    return CondCov(a, b, tuple(z))


R_YX = Ratio(cc("y", "x"), cc("x", "x"))
R_ZX = Ratio(cc("z", "x"), cc("x", "x"))
R_ZY = Ratio(cc("z", "y"), cc("y", "y"))
R_ZY_X = Ratio(cc("z", "y", "x"), cc("y", "y", "x"))
R_ZX_OVER_R_YX = Ratio(cc("z", "x"), cc("y", "x"))


def equal(e1, e2):
    return not distinct(e1, e2, n_probes=8, seed=17)


def classes_match(report, expected):
    """Each expected estimand is matched by exactly one class of the report."""
    reps = [report.msas[c[0]].estimand for c in report.estimand_classes]
    return len(reps) == len(expected) and all(
        sum(equal(r, e) for r in reps) == 1 for e in expected
    )


@pytest.mark.criterion(1)
def test_criterion_01_single_link_coefficient():
    """Chain, target x->y: m=1, k=1, df=0, estimand R_yx, only the x<->y assumption relevant."""
    rep = analyze(CHAIN, B_EDGE)
    assert (rep.m_corroborated, rep.k_identified, rep.df) == (1, 1, 0)
    assert equal(rep.msas[0].estimand, R_YX)
    assert rep.relevance == {NO_XZ_ARC: False, NO_YZ_ARC: False, NO_XY_ARC: True, NO_XZ_ARROW: False}


@pytest.mark.criterion(2)
def test_criterion_02_second_coefficient():
    """Chain, target y->z: three msas; k=2 with classes R_zy.x and R_zx/R_yx; df=1."""
    rep = analyze(CHAIN, C_EDGE)
    got = {m.assumptions.members for m in rep.msas}
    assert rep.m_corroborated == 3
    assert got == {frozenset({NO_YZ_ARC, NO_XY_ARC}), frozenset({NO_XZ_ARC, NO_YZ_ARC}), frozenset({NO_XZ_ARC, NO_XZ_ARROW})}
    assert (rep.k_identified, rep.df) == (2, 1)
    assert classes_match(rep, [R_ZY_X, R_ZX_OVER_R_YX])


@pytest.mark.criterion(3)
def test_criterion_03_maximal_pairs_on_three_chain():
    """Three-chain, target X2->X3: maximal pairs are (X2,{X1}) and (X1,{}); (X2,{}) is disqualified."""
    found = {(p.w, p.z) for p, _ in maximal_iv_pairs(CHAIN3, C3)}
    assert found == {("X2", ("X1",)), ("X1", ())}

    naive = IvPair("X2", (), C3)
    assert naive in enumerate_iv_pairs(CHAIN3, C3)
    assert not is_maximal_iv_pair(CHAIN3, naive)
    result = check_maximality(CHAIN3, naive)
    assert result.witnesses and all(w is not None for w in result.witnesses)
    for filled, witness in zip(result.filled_graphs, result.witnesses):
        assert witness.directed >= filled.directed and witness.bidirected >= filled.bidirected
        assert has_iv_pair(witness, C3)

    # the supergraph with X1 <-> X3 added: empty Z no longer works, Z={X1} does
    sup = CausalGraph(CHAIN3.variables, CHAIN3.directed, {("X1", "X3")})
    assert not is_iv_pair(sup, naive)
    assert is_iv_pair(sup, IvPair("X2", ("X1",), C3))


@pytest.mark.criterion(4)
def test_criterion_04_total_effect():
    """Chain, TE(x,z): m=2, k=2, df=1, estimands R_zx and R_yx*R_zy.x, submodel = full model."""
    rep = analyze(CHAIN, TE)
    assert (rep.m_corroborated, rep.k_identified, rep.df) == (2, 2, 1)
    assert classes_match(rep, [R_ZX, Product((R_YX, R_ZY_X))])
    assert rep.relevant_submodel == CHAIN
    assert set(rep.retained_assumptions) == {NO_XZ_ARC, NO_YZ_ARC, NO_XY_ARC, NO_XZ_ARROW}


FILLED_XZ_ARC = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z"), ("x", "z")}, {("x", "z")})
FILLED_XY_ARC = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z"), ("x", "z")}, {("x", "y")})
FILLED_IV = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z")}, {("x", "y"), ("y", "z")})


@pytest.mark.criterion(5)
def test_criterion_05_filled_graphs():
    """Maximally filled graphs: (y,{x}) gives two graphs, (x,{}) gives one."""
    assert set(maximally_filled(CHAIN, IvPair("y", ("x",), C_EDGE))) == {FILLED_XZ_ARC, FILLED_XY_ARC}
    assert len(maximally_filled(CHAIN, IvPair("y", ("x",), C_EDGE))) == 2
    assert maximally_filled(CHAIN, IvPair("x", (), C_EDGE)) == [FILLED_IV]


@pytest.mark.criterion(6)
def test_criterion_06_estimands_are_numerically_sound():
    """Every msa estimand of every worked example recovers its target to 1e-9 relative error."""
    cases = [(CHAIN, B_EDGE), (CHAIN, C_EDGE), (CHAIN, TE), (CHAIN3, C3), (SINGLE, TargetEdge("x", "y"))]
    worst = 0.0
    for g, target in cases:
        for m in enumerate_msas(g, target):
            induced = m.assumptions.induced_graph
            for seed in range(100):
                inst = random_instantiation(induced, seed)
                truth = true_value(inst, target)
                got = evaluate(m.estimand, implied_covariance(inst))
                worst = max(worst, abs(got - truth) / abs(truth))
    assert worst < 1e-9, worst


def _residual(lhs, rhs):
    return lambda s: evaluate(lhs, s) - evaluate(rhs, s)


@pytest.mark.criterion(7)
def test_criterion_07_constraint_on_and_off_model():
    """The constraint for y->z holds on 100 model covariances and fails on >= 95 of 100 random ones."""
    (lhs, rhs), = analyze(CHAIN, C_EDGE).constraints
    f = _residual(lhs, rhs)
    on_model = [abs(f(implied_covariance(random_instantiation(CHAIN, s)))) for s in range(100)]
    assert max(on_model) < 1e-9
    rng = np.random.default_rng(7)
    off = [abs(f(CovarianceMatrix(CHAIN.variables, random_pd_matrix(3, rng)))) for _ in range(100)]
    assert sum(v > 1e-3 for v in off) >= 95


@pytest.mark.criterion(8)
def test_criterion_08_constraint_jacobian_rank():
    """Rank of the constraint-residual Jacobian wrt vech(sigma) is k-1 for x->y, y->z and TE(x,z)."""
    for target, expected in ((B_EDGE, 0), (C_EDGE, 1), (TE, 1)):
        rep = analyze(CHAIN, target)
        assert rep.k_identified - 1 == expected
        res = [_residual(a, b) for a, b in rep.constraints]

        def f(v):
            s = CovarianceMatrix(CHAIN.variables, unvech(v, 3))
            return np.array([r(s) for r in res])

        for seed in range(5):
            v = vech(implied_covariance(random_instantiation(CHAIN, 1000 + seed)).entries)
            J = central_jacobian(f, v) if res else np.zeros((0, v.size))
            assert numerical_rank(J) == expected


def _oracle_sweep(graphs, seed):
    confirmed, gaps, misses = 0, [], []
    for g in graphs:
        for t, h in sorted(g.directed):
            target = TargetEdge(t, h)
            graphical = has_iv_pair(g, target)
            oracle = locally_identified(g, target, seed=seed)
            if graphical and oracle:
                confirmed += 1
            elif graphical:
                misses.append((g, target))
            elif oracle:
                gaps.append((g, target))
    return confirmed, gaps, misses


def _case(g, target):
    return {
        "variables": list(g.variables),
        "directed": sorted(map(list, g.directed)),
        "bidirected": sorted(map(list, g.bidirected)),
        "target": str(target),
    }


@pytest.mark.criterion(9)
def test_criterion_09_oracle_agreement(tmp_path):
    """Every target with an IV-pair is confirmed by the Jacobian oracle; the gap cases are stable."""
    graphs = all_graphs(("a", "b", "c")) + random_graphs(("a", "b", "c", "d"), 200, seed=2026)
    confirmed, gaps0, misses = _oracle_sweep(graphs, seed=0)
    assert misses == []
    assert confirmed > 0

    # a different oracle seed must find exactly the same gap cases
    _, gaps1, misses1 = _oracle_sweep(graphs, seed=1)
    assert misses1 == []
    assert gaps0 == gaps1

    out = tmp_path / "oracle_gaps.json"
    out.write_text(json.dumps([_case(g, t) for g, t in gaps0], indent=2))
    assert len(json.loads(out.read_text())) == len(gaps0)
    print(f"{len(gaps0)} oracle-yes/graphical-no cases written to {out}")


@pytest.mark.criterion(10)
def test_criterion_10_relevance_equivalence():
    """Msa-membership relevance equals the literal witness search on all 3-variable graphs."""
    checked = 0
    for g in all_graphs(("a", "b", "c")):
        for t, h in sorted(g.directed):
            target = TargetEdge(t, h)
            lattice = AssumptionLattice(g, target)
            rel = relevance(g, target)
            for i, a in enumerate(lattice.universe):
                assert rel[a] == literal_relevance(lattice, i), (g, target, a)
                checked += 1
    assert checked > 0


@pytest.mark.criterion(11)
def test_criterion_11_dominance():
    """On the three filled graphs R_zy is biased while the graph's own estimand is exact."""
    unbiased = []
    for name, g, own in (
        ("x->z, x<->z", FILLED_XZ_ARC, R_ZY_X),
        ("x->z, x<->y", FILLED_XY_ARC, R_ZY_X),
        ("x<->y, y<->z", FILLED_IV, R_ZX_OVER_R_YX),
    ):
        for seed in range(50):
            inst = random_instantiation(g, seed)
            s = implied_covariance(inst)
            c = inst.coeff[("y", "z")]
            assert abs(evaluate(own, s) - c) <= 1e-9 * abs(c)
            rel = abs(evaluate(R_ZY, s) - c) / abs(c)
            if rel <= 0.01:
                unbiased.append(f"{name} seed {seed}: relative error {rel:.4f}")
    assert not unbiased, "R_zy within 1% of c on: " + "; ".join(unbiased)
