"""Per-replica DAG: validation, causal delivery, Tusk-style wave commits.

Each replica owns one :class:`DagView`.  Vertices are immutable and shared
between views; what differs per replica is *when* each vertex shows up.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import Equivocation, InvalidVertex, NotReady

VertexKey = tuple[int, int]  # (replica_id, round)


@dataclass(frozen=True)
class Vertex:
    replica_id: int
    round: int
    strong_edges: tuple[VertexKey, ...] = ()
    weak_edges: tuple[VertexKey, ...] = ()
    dgs: tuple[str, ...] = ()
    ois: tuple[int, ...] = ()
    key: VertexKey = field(init=False, repr=False, compare=False)
    refs: tuple[VertexKey, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        # plain attributes rather than properties: both sit on hot paths
        object.__setattr__(self, "key", (self.replica_id, self.round))
        object.__setattr__(self, "refs", self.strong_edges + self.weak_edges)


def _round_key(key: VertexKey) -> tuple[int, int]:
    return (key[1], key[0])


def fmt_key(key: VertexKey) -> str:
    return f"r{key[0]}@{key[1]}"


class DagView:
    """One replica's view of the DAG.

    ``leaders`` overrides the round-robin schedule, either as a mapping
    from leader round to replica id or as a callable.
    """

    def __init__(
        self,
        n: int,
        f: int,
        *,
        owner: int | None = None,
        wave_length: int = 2,
        genesis_round: int = 0,
        leaders: Mapping[int, int] | Callable[[int], int] | None = None,
    ) -> None:
        self.n = n
        self.f = f
        self.owner = owner
        self.k = wave_length
        self.genesis_round = genesis_round
        self._leaders = leaders
        self.vertices: dict[VertexKey, Vertex] = {}
        self.by_round: dict[int, dict[int, Vertex]] = defaultdict(dict)
        self.highest_oi: dict[int, int] = {}
        self.committed_leaders: list[tuple[int, int]] = []
        self.committed_set: set[VertexKey] = set()
        self.last_committed_round = genesis_round - 1
        self._votes: Counter[int] = Counter()
        self._supported: set[int] = set()
        self._waiting: dict[VertexKey, list[Vertex]] = defaultdict(list)
        self._missing: dict[VertexKey, int] = {}
        self._parked: dict[VertexKey, Vertex] = {}
        # owner bookkeeping for weak edges
        self.covered: set[VertexKey] = set()
        self._uncovered: set[VertexKey] = set()

    # -- leader schedule -------------------------------------------------
    def is_leader_round(self, r: int) -> bool:
        return r > self.genesis_round and r % self.k == 0

    def leader_of(self, r: int) -> int | None:
        if not self.is_leader_round(r):
            return None
        if self._leaders is None:
            return (r // self.k - 1) % self.n + 1
        if callable(self._leaders):
            return self._leaders(r)
        return self._leaders.get(r)

    # -- validation and delivery ----------------------------------------
    def validate(self, v: Vertex) -> None:
        # vertices are immutable and shared between views, so a structural
        # check passed under the same (n, f, genesis) never needs repeating
        sig = (self.n, self.f, self.genesis_round)
        if v.__dict__.get("_checked") == sig:
            return
        self._validate(v)
        object.__setattr__(v, "_checked", sig)

    def _validate(self, v: Vertex) -> None:
        n, f = self.n, self.f
        if not 1 <= v.replica_id <= n:
            raise InvalidVertex(f"replica id {v.replica_id} outside 1..{n}")
        if v.round < self.genesis_round:
            raise InvalidVertex(f"round {v.round} precedes genesis")
        if len(v.dgs) != len(v.ois):
            raise InvalidVertex("dgs and ois differ in length")
        if any(a >= b for a, b in zip(v.ois, v.ois[1:])):
            raise InvalidVertex("ois must be strictly increasing")
        if v.round == self.genesis_round:
            if v.refs:
                raise InvalidVertex("genesis vertices carry no edges")
            return
        strong = set(v.strong_edges)
        if len(strong) != len(v.strong_edges) or len(strong) < n - f:
            raise InvalidVertex(f"{fmt_key(v.key)} needs {n - f} distinct strong edges")
        if any(r != v.round - 1 for _, r in strong):
            raise InvalidVertex("strong edges must point to the previous round")
        if (v.replica_id, v.round - 1) not in strong:
            raise InvalidVertex(f"{fmt_key(v.key)} lacks its self edge")
        if len(v.weak_edges) > f or len(set(v.weak_edges)) != len(v.weak_edges):
            raise InvalidVertex(f"at most {f} distinct weak edges allowed")
        if any(not self.genesis_round <= r < v.round - 1 for _, r in v.weak_edges):
            raise InvalidVertex("weak edges must point below the previous round")

    def deliver(self, v: Vertex) -> bool:
        """Add ``v``; parents must already be present.  Returns False on a duplicate."""
        old = self.vertices.get(v.key)
        if old is not None:
            if old == v:
                return False
            raise Equivocation(f"conflicting vertices for {fmt_key(v.key)}")
        self.validate(v)
        missing = [k for k in v.refs if k not in self.vertices]
        if missing:
            raise InvalidVertex(f"{fmt_key(v.key)} references undelivered {fmt_key(missing[0])}")
        self._store(v)
        return True

    def _store(self, v: Vertex) -> None:
        if v.ois:
            prev = self.highest_oi.get(v.replica_id)
            if prev is not None and v.ois[0] <= prev:
                raise InvalidVertex(f"{fmt_key(v.key)} reuses ordering indicators")
            self.highest_oi[v.replica_id] = v.ois[-1]
        self.vertices[v.key] = v
        self.by_round[v.round][v.replica_id] = v
        if self.owner is not None and v.key not in self.covered:
            self._uncovered.add(v.key)
        prev_round = v.round - 1
        if self.is_leader_round(prev_round):
            lk = (self.leader_of(prev_round), prev_round)
            if lk in v.strong_edges:
                self._votes[prev_round] += 1
                if self._votes[prev_round] >= self.f + 1:
                    self._supported.add(prev_round)

    def receive(self, v: Vertex) -> list[Vertex]:
        """Causal delivery: park ``v`` until its references arrive.

        Returns every vertex delivered as a consequence, in delivery order.
        """
        if v.key in self.vertices or v.key in self._parked:
            old = self.vertices.get(v.key) or self._parked[v.key]
            if old != v:
                raise Equivocation(f"conflicting vertices for {fmt_key(v.key)}")
            return []
        self.validate(v)
        missing = set(v.refs).difference(self.vertices)
        if missing:
            self._parked[v.key] = v
            self._missing[v.key] = len(missing)
            for k in missing:
                self._waiting[k].append(v)
            return []
        out = []
        stack = [v]
        while stack:
            cur = stack.pop()
            self._store(cur)
            out.append(cur)
            for child in self._waiting.pop(cur.key, ()):
                self._missing[child.key] -= 1
                if self._missing[child.key] == 0:
                    del self._missing[child.key]
                    del self._parked[child.key]
                    stack.append(child)
        return out

    # -- queries -----------------------------------------------------------
    def round_size(self, r: int) -> int:
        return len(self.by_round.get(r, ()))

    def causal_history(self, key: VertexKey | Vertex) -> set[VertexKey]:
        if isinstance(key, Vertex):
            key = key.key
        return self._closure([key], set())

    def _closure(self, roots: Iterable[VertexKey], stop: set[VertexKey]) -> set[VertexKey]:
        verts = self.vertices
        frontier = set(roots).difference(stop)
        seen: set[VertexKey] = set()
        while frontier:
            seen |= frontier
            nxt: set[VertexKey] = set()
            for k in frontier:
                nxt.update(verts[k].refs)
            nxt -= seen
            nxt -= stop
            frontier = nxt
        return seen

    def strong_path(self, src: VertexKey, dst: VertexKey) -> bool:
        if src == dst:
            return True
        floor = dst[1]
        seen = {src}
        stack = [src]
        verts = self.vertices
        while stack:
            for ref in verts[stack.pop()].strong_edges:
                if ref == dst:
                    return True
                if ref[1] > floor and ref not in seen:
                    seen.add(ref)
                    stack.append(ref)
        return False

    # -- proposing ---------------------------------------------------------
    def ready(self, r: int) -> bool:
        if r == self.genesis_round:
            return True
        prev = self.by_round.get(r - 1, {})
        return len(prev) >= self.n - self.f and self.owner in prev

    def propose(
        self,
        r: int,
        dgs: Iterable[str] = (),
        ois: Iterable[int] = (),
        *,
        strong: Iterable[VertexKey] | None = None,
        weak: bool = True,
    ) -> Vertex:
        """Build the owner's round-``r`` vertex (not yet delivered anywhere)."""
        if self.owner is None:
            raise NotReady("only an owned view can propose")
        if not self.ready(r):
            raise NotReady(f"replica {self.owner} lacks n-f vertices of round {r - 1}")
        dgs, ois = tuple(dgs), tuple(ois)
        if r == self.genesis_round:
            v = Vertex(self.owner, r, (), (), dgs, ois)
            self.covered.add(v.key)
            return v
        if strong is None:
            strong_t = tuple(sorted(self.by_round[r - 1]))
            strong_t = tuple((i, r - 1) for i in strong_t)
        else:
            strong_t = tuple(sorted(strong, key=_round_key))
        new = self._closure(strong_t, self.covered)
        weak_t: tuple[VertexKey, ...] = ()
        if weak and self.f > 0:
            cands = sorted((k for k in self._uncovered if k[1] < r - 1 and k not in new),
                           key=_round_key)
            weak_t = tuple(cands[: self.f])
            if weak_t:
                new |= self._closure(weak_t, self.covered | new)
        v = Vertex(self.owner, r, strong_t, weak_t, dgs, ois)
        self.validate(v)
        new.add(v.key)
        self.covered |= new
        self._uncovered -= new
        return v

    # -- commit ------------------------------------------------------------
    def try_commit(self) -> list[tuple[Vertex, list[Vertex]]]:
        ready = [r for r in self._supported if r > self.last_committed_round]
        if not ready:
            return []
        top = max(ready)
        self._supported = {r for r in self._supported if r > top}
        cur = (self.leader_of(top), top)
        chain = [cur]
        for r in range(top - self.k, self.last_committed_round, -self.k):
            if not self.is_leader_round(r):
                break
            lk = (self.leader_of(r), r)
            if lk in self.vertices and self.strong_path(cur, lk):
                chain.append(lk)
                cur = lk
        self.last_committed_round = top
        out = []
        for lk in reversed(chain):
            sub = self._closure([lk], self.committed_set)
            self.committed_set |= sub
            self.committed_leaders.append((lk[1], lk[0]))
            out.append((self.vertices[lk], [self.vertices[k] for k in sorted(sub, key=_round_key)]))
        return out

    # -- dumps -------------------------------------------------------------
    def dump_lines(self) -> list[str]:
        lines = []
        for key in sorted(self.vertices, key=_round_key):
            v = self.vertices[key]
            refs = [fmt_key(k) for k in v.strong_edges] + [f"~{fmt_key(k)}" for k in v.weak_edges]
            lines.append(f"{fmt_key(key)} -> [{', '.join(refs)}] | {' '.join(v.dgs)}")
        return lines


def propose_vertex(view: DagView, r: int, pending_dgs=(), pending_ois=()) -> Vertex:
    return view.propose(r, pending_dgs, pending_ois)


def deliver(view: DagView, vertex: Vertex) -> DagView:
    view.deliver(vertex)
    return view


def try_commit(view: DagView) -> list[tuple[Vertex, list[Vertex]]]:
    return view.try_commit()


def causal_history(view: DagView, vertex: Vertex | VertexKey) -> set[VertexKey]:
    return view.causal_history(vertex)
