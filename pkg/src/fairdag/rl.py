"""Fairness layer built on per-commit dependency graphs.

Every committed subdag opens a graph.  Digests join a graph once enough
replicas have committed an indicator for them, edges appear when one
direction of a pair gathers half a quorum of votes, and the oldest graph
is drained SCC by SCC once it becomes a tournament.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dag import Vertex
from .errors import OutOfOrderSubdag

INF = math.inf
BLANK, SHADED, SOLID = "blank", "shaded", "solid"

Edge = tuple[str, str]


@dataclass
class TxnNode:
    digest: str
    committed_ois: list[float]
    committed_rounds: list[float]
    type: str = BLANK
    graph: int | None = None


def ap(node: TxnNode, r: int) -> int:
    return sum(1 for x in node.committed_rounds if x <= r)


def classify(ap_value: int, n: int, f: int, quorum: int | None = None) -> str:
    """``quorum`` defaults to n-f; the half-quorum test stays in integers."""
    q = n - f if quorum is None else quorum
    if ap_value >= q:
        return SOLID
    if 2 * ap_value >= q:
        return SHADED
    return BLANK


def pair_weights(ois: np.ndarray) -> np.ndarray:
    """W[a, b] = number of replicas whose indicator for a is below that for b.

    ``ois`` has one row per digest and one column per replica, with inf
    for "not committed"; inf compares above every finite value.
    """
    return (ois[:, None, :] < ois[None, :, :]).sum(axis=2)


@dataclass
class DependencyGraph:
    id: int
    nodes: list[str] = field(default_factory=list)
    edges: set[Edge] = field(default_factory=set)

    def linked(self, a: str, b: str) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def is_tournament(self) -> bool:
        m = len(self.nodes)
        return len(self.edges) == m * (m - 1) // 2


def is_tournament(g: DependencyGraph) -> bool:
    return g.is_tournament()


def strongly_connected_components(nodes: Sequence[str], edges: Iterable[Edge]) -> list[list[str]]:
    """Tarjan's algorithm, iterative.  Components come out in topological order."""
    adj: dict[str, list[str]] = {u: [] for u in nodes}
    for a, b in edges:
        adj[a].append(b)
    for u in adj:
        adj[u].sort()
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    counter = 0
    for root in sorted(nodes):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            u, i = work.pop()
            if i == 0:
                index[u] = low[u] = counter
                counter += 1
                stack.append(u)
                on_stack.add(u)
            recurse = False
            succ = adj[u]
            while i < len(succ):
                w = succ[i]
                i += 1
                if w not in index:
                    work.append((u, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[u] = min(low[u], index[w])
            if recurse:
                continue
            if low[u] == index[u]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == u:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[u])
    comps.reverse()
    return comps


def hamilton_path(nodes: Iterable[str], edges: set[Edge] | Mapping,
                  score: Mapping[str, float] | None = None) -> list[str]:
    """Hamilton path through a (sub)tournament by insertion.

    Nodes are inserted by descending ``score`` (lexicographic when absent or
    tied), each at the last slot whose neighbours the edges allow; a
    tournament always has such a slot.
    """
    path: list[str] = []
    order = sorted(nodes) if score is None else sorted(nodes, key=lambda d: (-score[d], d))
    for d in order:
        for pos in range(len(path), -1, -1):
            if pos > 0 and (path[pos - 1], d) not in edges:
                continue
            if pos < len(path) and (d, path[pos]) not in edges:
                continue
            path.insert(pos, d)
            break
        else:
            raise ValueError(f"{d} cannot be placed: input is not a tournament")
    return path


class RlState:
    """Per-replica dependency-graph state.

    ``quorum`` is the solid threshold (n-f here, n-2f for the single-leader
    baseline); shaded nodes and edges need half of it.
    """

    def __init__(self, n: int, f: int, *, quorum: int | None = None, keep_history: bool = True):
        self.n = n
        self.f = f
        self.quorum = n - f if quorum is None else quorum
        self.graphs: deque[DependencyGraph] = deque()
        self.nodes: dict[str, TxnNode] = {}
        self.final_order: list[str] = []
        self.batches: list[list[str]] = []
        self.last_round: int | None = None
        self.ordered: set[str] = set()
        self.carry: list[str] = []
        self.graph_of: dict[str, int] = {}
        self.edges_ever: set[Edge] = set()
        self.keep_history = keep_history
        self.history: list[dict] = []

    # -- helpers -----------------------------------------------------------
    def _node(self, d: str) -> TxnNode:
        node = self.nodes.get(d)
        if node is None:
            node = self.nodes[d] = TxnNode(d, [INF] * self.n, [INF] * self.n)
        return node

    def _join(self, d: str, g: DependencyGraph) -> None:
        node = self.nodes[d]
        node.graph = g.id
        g.nodes.append(d)

    def weights(self, g: DependencyGraph) -> np.ndarray:
        if not g.nodes:
            return np.zeros((0, 0), dtype=int)
        ois = np.array([self.nodes[d].committed_ois for d in g.nodes], dtype=float)
        return pair_weights(ois)

    def _add_edges(self, g: DependencyGraph) -> None:
        m = len(g.nodes)
        if m < 2 or g.is_tournament():
            return
        w = self.weights(g)
        q = self.quorum
        names = g.nodes
        order = sorted(range(m), key=names.__getitem__)
        for x_pos, x in enumerate(order):
            a = names[x]
            for y in order[x_pos + 1:]:
                b = names[y]
                if g.linked(a, b):
                    continue
                wab, wba = int(w[x, y]), int(w[y, x])
                if 2 * max(wab, wba) < q:
                    continue
                e = (a, b) if wab >= wba else (b, a)
                g.edges.add(e)
                self.edges_ever.add(e)

    # -- main entry points ---------------------------------------------------
    def process_subdag(self, r: int, subdag: Iterable[Vertex]) -> list[list[str]]:
        """Feed the subdag committed at round ``r``; returns newly emitted batches."""
        if self.last_round is not None and r <= self.last_round:
            raise OutOfOrderSubdag(f"round {r} after {self.last_round}")
        self.last_round = r
        g = DependencyGraph(r)
        self.graphs.append(g)
        updated: set[str] = set()
        for v in subdag:
            i = v.replica_id - 1
            for d, oi in zip(v.dgs, v.ois):
                if d in self.ordered:
                    continue
                node = self._node(d)
                if node.committed_ois[i] == INF:
                    node.committed_ois[i] = oi
                    node.committed_rounds[i] = r
                    updated.add(d)
        carried, self.carry = self.carry, []
        for d in carried:
            node = self.nodes[d]
            node.type = max(node.type, classify(ap(node, r), self.n, self.f, self.quorum), key=_rank)
            self._join(d, g)
        for d in sorted(updated):
            node = self.nodes[d]
            if node.type == BLANK:
                node.type = classify(ap(node, r), self.n, self.f, self.quorum)
                if node.type != BLANK:
                    self._join(d, g)
        touched = {self.nodes[d].graph for d in updated} | {r}
        for h in self.graphs:
            if h.id in touched:
                self._add_edges(h)
        return self.finalize_front()

    def finalize_front(self) -> list[list[str]]:
        emitted: list[list[str]] = []
        while self.graphs and self.graphs[0].is_tournament():
            g = self.graphs.popleft()
            sccs = strongly_connected_components(g.nodes, g.edges)
            last = -1
            for j, comp in enumerate(sccs):
                if any(self.nodes[d].type == SOLID for d in comp):
                    last = j
            if self.keep_history:
                self.history.append(self._record(g, sccs[: last + 1]))
            w = self.weights(g)
            pos = {d: k for k, d in enumerate(g.nodes)}
            for comp in sccs[: last + 1]:
                batch = hamilton_path(comp, g.edges, _borda(w, pos, comp))
                emitted.append(batch)
                self.batches.append(batch)
                self.final_order.extend(batch)
                self.ordered.update(batch)
                for d in batch:
                    self.graph_of[d] = g.id
            leftover = [d for comp in sccs[last + 1:] for d in comp]
            if not leftover:
                continue
            if self.graphs:
                nxt = self.graphs[0]
                for d in leftover:
                    node = self.nodes[d]
                    node.type = max(node.type, classify(ap(node, nxt.id), self.n, self.f, self.quorum),
                                    key=_rank)
                    self._join(d, nxt)
                self._add_edges(nxt)
            else:
                # no later graph yet; the next subdag's graph takes them
                self.carry.extend(leftover)
        for d in list(self.nodes):
            if d in self.ordered:
                del self.nodes[d]
        return emitted

    # -- inspection ------------------------------------------------------------
    def _record(self, g: DependencyGraph, emitted: list[list[str]]) -> dict:
        return {
            "graph": g.id,
            "nodes": {d: self.nodes[d].type for d in sorted(g.nodes)},
            "edges": sorted(g.edges),
            "emitted": [sorted(c) for c in emitted],
        }

    def snapshot(self) -> list[dict]:
        """Open graphs with node types, pairwise weights and edges."""
        out = []
        for g in self.graphs:
            w = self.weights(g)
            names = g.nodes
            weights = [[a, b, int(w[x, y])] for x, a in enumerate(names)
                       for y, b in enumerate(names) if x != y and w[x, y] > 0]
            out.append({
                "graph": g.id,
                "nodes": {d: self.nodes[d].type for d in names},
                "weights": sorted(weights),
                "edges": sorted(g.edges),
            })
        return out


def _borda(w: np.ndarray, pos: Mapping[str, int], comp: Sequence[str]) -> dict[str, int]:
    """Votes each node collects for preceding the rest of its component."""
    idx = [pos[d] for d in comp]
    sub = w[np.ix_(idx, idx)]
    return {d: int(v) for d, v in zip(comp, sub.sum(axis=1))}


_RANKS = {BLANK: 0, SHADED: 1, SOLID: 2}


def _rank(t: str) -> int:
    return _RANKS[t]


def process_subdag(state: RlState, r: int, subdag: Iterable[Vertex]) -> RlState:
    state.process_subdag(r, subdag)
    return state


def finalize_front(state: RlState) -> list[list[str]]:
    return state.finalize_front()


def final_edges(state: RlState) -> dict[str, set[Edge]]:
    """Edges of the graph each ordered digest was emitted from."""
    by_graph = {h["graph"]: {tuple(e) for e in h["edges"]} for h in state.history}
    return {d: by_graph.get(gid, set()) for d, gid in state.graph_of.items()}


def ordering_dependency(
    d1: str,
    d2: str,
    weights_max: Mapping[Edge, int],
    graph_of: Mapping[str, int],
    edges: set[Edge],
    n: int,
    f: int,
    quorum: int | None = None,
) -> bool:
    """True when d2 depends on d1.

    ``edges`` are the final edges of the graph(s) the two digests were
    emitted from and ``graph_of`` maps each digest to that graph.
    """
    q = n - f if quorum is None else quorum
    if 2 * weights_max.get((d2, d1), 0) < q:
        return True
    if (d1, d2) in edges:
        return True
    return 2 * weights_max.get((d1, d2), 0) >= q and graph_of[d1] < graph_of[d2]
