import pytest
from hypothesis import given, settings, strategies as st

from corpus import random_condition_graph, rng_for
from treedet.cycleengine import (ConditionGraph, Pair, all_scs_good, brute_scs_good,
                                 is_cyclic_component, sccs, witnessing_pairs)
from treedet.errors import TooLarge


def always(v):
    return True


def never(v):
    return False


def test_sccs_small():
    succ = {1: [2], 2: [1, 3], 3: [], 4: [4]}
    comps = sorted(sorted(c) for c in sccs(succ, succ))
    assert comps == [[1, 2], [3], [4]]
    assert is_cyclic_component([4], succ)
    assert not is_cyclic_component([3], succ)


def test_sccs_long_path_is_iterative():
    n = 5000
    succ = {i: [i + 1] for i in range(n)}
    succ[n] = [0]
    assert len(sccs(succ, succ)) == 1


def test_self_loop_good():
    g = ConditionGraph([0], {0: [0]}, [Pair(0, always, always, never)])
    assert all_scs_good(g)
    assert brute_scs_good(g)


def test_two_cycle_with_bad_node():
    g = ConditionGraph([0, 1], {0: [1], 1: [0]},
                       [Pair(0, always, lambda v: v == 0, lambda v: v == 1)])
    res = all_scs_good(g)
    assert not res
    assert res.witness == {0, 1}
    assert brute_scs_good(g).witness == {0, 1}


def test_empty_graph():
    assert brute_scs_good(ConditionGraph([], {}, []))
    assert all_scs_good(ConditionGraph([], {}, []))


def test_nested_cycles_need_recursion():
    # big cycle 0-1-2, inner loop on 2; pair 0 progresses on 0 only
    edges = {0: [1], 1: [2], 2: [0, 2]}
    pair = Pair(0, always, lambda v: v == 0, never)
    g = ConditionGraph([0, 1, 2], edges, [pair])
    res = all_scs_good(g)
    assert not res and res.witness == {2}


def test_brute_limit():
    g = ConditionGraph(list(range(16)), {}, [])
    with pytest.raises(TooLarge):
        brute_scs_good(g)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_engine_matches_brute(seed):
    g = random_condition_graph(rng_for(seed), max_nodes=8)
    assert bool(all_scs_good(g)) == bool(brute_scs_good(g))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_bad_witness_fails_every_pair(seed):
    g = random_condition_graph(rng_for(seed), max_nodes=10)
    res = all_scs_good(g)
    if not res:
        assert res.witness
        assert witnessing_pairs(g, res.witness) == []
        # and it is strongly connected
        sub = {v: [w for w in g.edges[v] if w in res.witness] for v in res.witness}
        comps = sccs(sub, sub)
        assert len(comps) == 1 and is_cyclic_component(comps[0], sub)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_monotone(seed):
    rng = rng_for(seed)
    g = random_condition_graph(rng, max_nodes=9)
    before = bool(all_scs_good(g))
    extra = Pair("extra", always, lambda v: rng.random() < 0.5, never)
    more = ConditionGraph(g.nodes, g.edges, g.pairs + [extra])
    if before:
        assert all_scs_good(more)
    if g.nodes:
        v = rng.choice(g.nodes)
        if g.edges[v]:
            fewer = dict(g.edges)
            fewer[v] = g.edges[v][1:]
            if before:
                assert all_scs_good(ConditionGraph(g.nodes, fewer, g.pairs))
