from itertools import combinations

import pytest

from semrobust.errors import BudgetExceeded, InputError
from semrobust.estimand import evaluate, from_iv_pair
from semrobust.graph import CausalGraph, Edge, missing_edges, remove_directed_edge
from semrobust.identification import (
    Budget,
    IvPair,
    candidate_pairs,
    check_maximality,
    enumerate_iv_pairs,
    is_iv_pair,
    is_maximal_iv_pair,
    maximal_iv_pairs,
    maximally_filled,
)
from semrobust.numerics import implied_covariance, locally_identified, random_instantiation
from semrobust.targets import TargetEdge

from oracles import _descendants, all_graphs, naive_d_separated, random_graphs


def naive_is_iv_pair(g, pair):
    x, y = pair.target.x, pair.target.y
    gc = remove_directed_edge(g, x, y)
    if set(pair.z) & _descendants(g, y):
        return False
    if not naive_d_separated(gc, pair.w, y, pair.z):
        return False
    return pair.w == x or not naive_d_separated(gc, pair.w, x, pair.z)


def brute_force_filled(g, pair):
    """Maximal supergraphs where the pair passes all three conditions, no pruning."""
    extra = missing_edges(g)
    good = []
    for k in range(len(extra) + 1):
        for combo in combinations(extra, k):
            sup = g.with_edges(combo)
            if naive_is_iv_pair(sup, pair):
                good.append(frozenset(combo))
    maximal = [s for s in good if not any(s < t for t in good)]
    return {g.with_edges(s) for s in maximal}


def pair(w, z, x, y):
    return IvPair(w, tuple(z), TargetEdge(x, y))


G1 = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z"), ("x", "z")}, {("x", "z")})
G2 = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z"), ("x", "z")}, {("x", "y")})
G3 = CausalGraph(("x", "y", "z"), {("x", "y"), ("y", "z")}, {("x", "y"), ("y", "z")})


def test_is_iv_pair_examples(chain):
    assert is_iv_pair(chain, pair("x", (), "y", "z"))
    assert is_iv_pair(chain, pair("y", ("x",), "y", "z"))
    assert not is_iv_pair(chain, pair("z", (), "x", "y"))
    with pytest.raises(InputError):
        is_iv_pair(chain, pair("x", (), "x", "z"))


def test_pair_invariants():
    with pytest.raises(InputError):
        pair("x", ("x",), "y", "z")
    with pytest.raises(InputError):
        pair("z", (), "y", "z")
    with pytest.raises(InputError):
        pair("x", ("y",), "y", "z")


def test_enumerate_fig3a(chain3):
    t = TargetEdge("X2", "X3")
    found = enumerate_iv_pairs(chain3, t)
    expected = [p for p in candidate_pairs(chain3, t) if naive_is_iv_pair(chain3, p)]
    assert found == expected
    assert {(p.w, p.z) for p in found} == {("X1", ()), ("X2", ()), ("X2", ("X1",))}


def test_enumerate_small_cases(bow):
    two = CausalGraph(("x", "y"), {("x", "y")})
    assert [(p.w, p.z) for p in enumerate_iv_pairs(two, TargetEdge("x", "y"))] == [("x", ())]
    assert enumerate_iv_pairs(bow, TargetEdge("x", "y")) == []


def test_enumerate_matches_naive_on_catalogue():
    for g in all_graphs("abc") + random_graphs("abcd", 150, seed=2):
        for x, y in sorted(g.directed):
            t = TargetEdge(x, y)
            naive = [p for p in candidate_pairs(g, t) if naive_is_iv_pair(g, p)]
            assert enumerate_iv_pairs(g, t) == naive


def test_max_z_caps_conditioning(chain):
    t = TargetEdge("y", "z")
    assert all(not p.z for p in enumerate_iv_pairs(chain, t, max_z=0))


def test_maximally_filled_fig2(chain):
    assert set(maximally_filled(chain, pair("y", ("x",), "y", "z"))) == {G1, G2}
    assert maximally_filled(chain, pair("x", (), "y", "z")) == [G3]


def test_maximally_filled_complete_graph():
    g = CausalGraph.complete("xyz").without_edges([Edge.bidirected("x", "y"), Edge.bidirected("y", "z")])
    # x instrument for y->z with nothing else addable
    p = pair("x", (), "y", "z")
    assert is_iv_pair(g, p) is False  # x->z present, so no
    c = CausalGraph(("x", "y"), {("x", "y")}, set())
    full = c.with_edges([Edge.bidirected("x", "y")])
    assert maximally_filled(full, pair("x", (), "x", "y")) == []
    lone = CausalGraph(("x", "y"), {("x", "y")})
    assert maximally_filled(lone, pair("x", (), "x", "y")) == [lone]


def test_filled_graphs_are_maximal_and_match_brute_force():
    graphs = all_graphs("abc") + random_graphs("abcd", 40, seed=9)
    for g in graphs:
        for x, y in sorted(g.directed):
            t = TargetEdge(x, y)
            for p in candidate_pairs(g, t):
                filled = maximally_filled(g, p)
                assert set(filled) == brute_force_filled(g, p), (g, p)
                for f in filled:
                    assert is_iv_pair(f, p)
                    for e in missing_edges(f):
                        assert not is_iv_pair(f.with_edges([e]), p)


def test_separation_failure_persists_in_supergraphs():
    for g in random_graphs("abcd", 60, seed=4):
        for x, y in sorted(g.directed):
            gc = remove_directed_edge(g, x, y)
            for p in candidate_pairs(g, TargetEdge(x, y)):
                if naive_d_separated(gc, p.w, y, p.z):
                    continue
                for e in missing_edges(g):
                    sup = remove_directed_edge(g.with_edges([e]), x, y)
                    assert not naive_d_separated(sup, p.w, y, p.z)


def test_maximality_examples(chain, chain3):
    t = TargetEdge("X2", "X3")
    assert is_maximal_iv_pair(chain3, pair("X2", ("X1",), "X2", "X3"))
    assert is_maximal_iv_pair(chain3, pair("X1", (), "X2", "X3"))
    assert not is_maximal_iv_pair(chain3, pair("X2", (), "X2", "X3"))
    assert is_maximal_iv_pair(chain, pair("x", (), "y", "z"))


def test_non_maximal_pair_has_witness(chain3):
    res = check_maximality(chain3, pair("X2", (), "X2", "X3"))
    assert not res.is_maximal
    (witness,) = res.witnesses
    assert witness is not None
    assert is_iv_pair(witness, pair("X2", ("X1",), "X2", "X3"))
    assert not is_iv_pair(witness, pair("X2", (), "X2", "X3"))


def test_maximal_iv_pairs(chain, chain3, bow):
    got = maximal_iv_pairs(chain3, TargetEdge("X2", "X3"))
    assert [(p.w, p.z) for p, _ in got] == [("X1", ()), ("X2", ("X1",))]
    assert got[0][1] == from_iv_pair("X2", "X3", "X1")
    assert got[1][1] == from_iv_pair("X2", "X3", "X2", ("X1",))
    got_b = maximal_iv_pairs(chain, TargetEdge("x", "y"))
    assert [(p.w, p.z) for p, _ in got_b] == [("x", ())]
    assert maximal_iv_pairs(bow, TargetEdge("x", "y")) == []


def test_budget_exceeded(chain3):
    with pytest.raises(BudgetExceeded) as info:
        maximal_iv_pairs(chain3, TargetEdge("X2", "X3"), budget=Budget(3))
    assert "3" in str(info.value)


def test_iv_estimands_sound_on_catalogue():
    """Every IV-pair estimand equals the true coefficient on the pair's own graph."""
    for g in all_graphs("abcd"):
        for x, y in sorted(g.directed):
            pairs = enumerate_iv_pairs(g, TargetEdge(x, y))
            if not pairs:
                continue
            for seed in range(5):
                inst = random_instantiation(g, seed)
                sigma = implied_covariance(inst)
                truth = inst.coeff[(x, y)]
                for p in pairs:
                    assert evaluate(p.estimand(), sigma) == pytest.approx(truth, rel=1e-9)


def test_iv_pairs_imply_oracle_identification():
    for g in all_graphs("xyz"):
        for x, y in sorted(g.directed):
            t = TargetEdge(x, y)
            if enumerate_iv_pairs(g, t):
                assert locally_identified(g, t)
