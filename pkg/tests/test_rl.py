import itertools
import random

import networkx as nx
import numpy as np
import pytest

from fairdag import OutOfOrderSubdag, RlState, ap, classify, hamilton_path, is_tournament
from fairdag.rl import (SHADED, SOLID, DependencyGraph, TxnNode, ordering_dependency,
                        pair_weights, strongly_connected_components)

from worked import RL_F, RL_N, rl_subdags

INF = float("inf")


def random_tournament(m, rng):
    nodes = [f"n{i}" for i in range(m)]
    edges = set()
    for a, b in itertools.combinations(nodes, 2):
        edges.add((a, b) if rng.random() < 0.5 else (b, a))
    return nodes, edges


def all_hamilton_paths(nodes, edges):
    return {p for p in itertools.permutations(nodes)
            if all((a, b) in edges for a, b in zip(p, p[1:]))}


@pytest.fixture
def after_a2():
    st = RlState(RL_N, RL_F)
    a2, _ = rl_subdags()
    st.process_subdag(2, a2)
    return st


def test_ap_examples(after_a2):
    assert ap(after_a2.nodes["d0"], 2) == 4
    assert ap(after_a2.nodes["d6"], 2) == 1
    assert ap(TxnNode("x", [INF] * 4, [INF] * 4), 9) == 0


def test_classify_examples():
    assert classify(3, 4, 1) == SOLID
    assert classify(2, 4, 1) == SHADED
    assert classify(1, 4, 1) == "blank"
    # odd quorum: 2*ap >= 5 needs ap >= 3
    assert classify(2, 7, 2) == "blank"
    assert classify(3, 7, 2) == SHADED


def test_graph_after_first_subdag(after_a2):
    (g,) = after_a2.snapshot()
    assert g["nodes"] == {"d0": SOLID, "d1": SOLID, "d2": SOLID, "d3": SHADED,
                          "d4": SOLID, "d5": SHADED}
    pairs = {frozenset(e) for e in g["edges"]}
    missing = {frozenset(p) for p in itertools.combinations(g["nodes"], 2)} - pairs
    assert missing == {frozenset(("d3", "d5"))}
    assert not is_tournament(after_a2.graphs[0])
    assert after_a2.batches == []


def test_second_subdag_closes_the_gap(after_a2):
    _, a4 = rl_subdags()
    after_a2.process_subdag(4, a4)
    g2, g4 = after_a2.history
    assert ("d3", "d5") in g2["edges"]
    assert g2["emitted"] == [["d0"], ["d1", "d2", "d3", "d4"]]
    assert g4["nodes"] == {"d5": SOLID, "d6": SOLID, "d7": SHADED}
    assert {("d5", "d6"), ("d5", "d7"), ("d6", "d7")} <= set(g4["edges"])
    batches = [sorted(b) for b in after_a2.batches]
    assert batches[:2] == [["d0"], ["d1", "d2", "d3", "d4"]]
    assert after_a2.graph_of["d5"] == 4
    assert after_a2.carry == ["d7"]


def test_s2_path_follows_edges(after_a2):
    _, a4 = rl_subdags()
    after_a2.process_subdag(4, a4)
    edges = set(after_a2.history[0]["edges"])
    s2 = ["d1", "d2", "d3", "d4"]
    assert hamilton_path(s2, edges) == ["d1", "d2", "d3", "d4"]
    assert tuple(after_a2.batches[1]) in all_hamilton_paths(s2, edges)


def test_out_of_order_subdag(after_a2):
    with pytest.raises(OutOfOrderSubdag):
        after_a2.process_subdag(2, [])


def test_tournament_edge_cases():
    assert DependencyGraph(0).is_tournament()
    assert DependencyGraph(0, ["a"]).is_tournament()


def test_single_solid_node_batch():
    from fairdag import Vertex
    st = RlState(4, 1)
    out = st.process_subdag(2, [Vertex(i, 1, dgs=("x",), ois=(1,)) for i in (1, 2, 3)])
    assert out == [["x"]]


def test_hamilton_small_cases():
    assert hamilton_path(["a"], set()) == ["a"]
    cyc = {("a", "b"), ("b", "c"), ("c", "a")}
    assert hamilton_path(["c", "b", "a"], cyc) == ["a", "b", "c"]
    with pytest.raises(ValueError):
        hamilton_path(["a", "b"], set())


def test_hamilton_matches_enumeration():
    rng = random.Random(7)
    for _ in range(300):
        m = rng.randint(1, 7)
        nodes, edges = random_tournament(m, rng)
        for comp in strongly_connected_components(nodes, edges):
            path = hamilton_path(comp, edges)
            assert sorted(path) == sorted(comp)
            assert all((a, b) in edges for a, b in zip(path, path[1:]))
            assert tuple(path) in all_hamilton_paths(comp, edges)


def test_scc_against_networkx():
    rng = random.Random(3)
    for _ in range(200):
        nodes, edges = random_tournament(rng.randint(1, 12), rng)
        ours = strongly_connected_components(nodes, edges)
        g = nx.DiGraph()
        g.add_nodes_from(nodes)
        g.add_edges_from(edges)
        assert {frozenset(c) for c in ours} == {frozenset(c) for c in nx.strongly_connected_components(g)}
        # components come out in topological order
        cond = nx.condensation(g)
        idx = {d: k for k, comp in enumerate(ours) for d in comp}
        for a, b in cond.edges:
            ma = next(iter(cond.nodes[a]["members"]))
            mb = next(iter(cond.nodes[b]["members"]))
            assert idx[ma] < idx[mb]


def test_pair_weights_treats_inf_as_later():
    ois = np.array([[1, 2, INF], [2, 1, 1]], dtype=float)
    w = pair_weights(ois)
    assert w[0, 1] == 1 and w[1, 0] == 2


def test_ordering_dependency_clauses():
    gof = {"d1": 2, "d2": 2, "d5": 4, "d6": 4}
    assert ordering_dependency("d1", "d2", {("d1", "d2"): 4}, gof, set(), 4, 1)
    assert ordering_dependency("d1", "d2", {("d1", "d2"): 2, ("d2", "d1"): 2}, gof,
                               {("d1", "d2")}, 4, 1)
    assert not ordering_dependency("d2", "d1", {("d1", "d2"): 2, ("d2", "d1"): 2}, gof,
                                   {("d1", "d2")}, 4, 1)
    assert ordering_dependency("d5", "d6", {("d5", "d6"): 2, ("d6", "d5"): 2}, gof,
                               {("d5", "d6")}, 4, 1)
    # earlier graph with half-quorum support
    assert ordering_dependency("d1", "d5", {("d1", "d5"): 2, ("d5", "d1"): 2}, gof, set(), 4, 1)
