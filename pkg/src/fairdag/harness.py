"""Deterministic discrete-event simulation of clients, replicas and the network.

Time is an integer tick.  Events are ordered by (time, sequence number),
and every random draw comes from streams spawned off the scenario seed:
one for the workload (shared by all protocols run on that seed), one for
the network and one for the adversary.
"""

from __future__ import annotations

import hashlib
import heapq
import warnings
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .ab import AbState
from .adversary import (BaselineConfig, Strategy, byzantine_refs, corrupt_local_ordering,
                        exclusion_set, make_strategy)
from .dag import DagView, Vertex
from .errors import NonQuiescent
from .rl import RlState
from .scenario import Scenario
from .trace import RunTrace

CLIENT_SEND, RECEIVE, DELIVER, TICK = 0, 1, 2, 3
EVENT_KINDS = ("ClientSend", "ReplicaReceiveTxn", "RbcDeliver", "ProposeTick")

# AB indicators are ticks scaled up so same-tick arrivals stay distinct
OI_SCALE = 1000


class Event(NamedTuple):
    time: int
    seq: int
    kind: int
    dest: int
    payload: Any = None

    @property
    def kind_name(self) -> str:
        return EVENT_KINDS[self.kind]


@dataclass(frozen=True)
class Transaction:
    digest: str
    client: int
    index: int
    send_time: int


def txn_digest(client: int, index: int) -> str:
    return hashlib.sha256(f"client{client}/txn{index}".encode()).hexdigest()[:16]


@dataclass
class WorkloadPlan:
    txns: list[Transaction]
    delays: np.ndarray  # [txn, replica-1]


def plan_workload(sc: Scenario, rng: np.random.Generator) -> WorkloadPlan:
    w = sc.workload
    if w.send_times is not None:
        times = list(w.send_times)
    else:
        times = [w.send_start + k * w.send_interval for k in range(w.num_txns)]
    txns = []
    for k, t in enumerate(times):
        client = k % max(1, w.num_clients)
        digest = w.digests[k] if w.digests else txn_digest(client, k)
        txns.append(Transaction(digest, client, k, int(t)))
    if w.receipt_delays is not None:
        delays = np.array(w.receipt_delays, dtype=np.int64).reshape(w.num_txns, sc.n)
    else:
        delays = rng.integers(w.delay_low, w.delay_high + 1, size=(w.num_txns, sc.n))
    if w.replica_bias is not None:
        delays = delays + np.asarray(w.replica_bias, dtype=np.int64)[None, :]
    return WorkloadPlan(txns, delays)


def broadcast_transaction(txn: Transaction, delays) -> list[Event]:
    """One receive event per replica; ``delays[i]`` is replica i+1's lag."""
    return [Event(txn.send_time + int(d), 0, RECEIVE, i + 1, txn) for i, d in enumerate(delays)]


def spawn_rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))  # type: ignore[return-value]


@dataclass
class Replica:
    id: int
    byzantine: bool
    strategy: Strategy
    view: DagView | None = None
    ab: AbState | None = None
    rl: RlState | None = None
    pending_d: list[str] = field(default_factory=list)
    pending_o: list[int] = field(default_factory=list)
    counter: int = 0
    true_counter: int = 0
    last_tick: int = -1
    tick_seq: int = 0
    true_last_tick: int = -1
    true_tick_seq: int = 0
    next_round: int = 0
    last_prop: int | None = None
    tick_at: int | None = None
    receipts: list[tuple[str, int]] = field(default_factory=list)
    reported: list[tuple[str, int]] = field(default_factory=list)
    ordered: list[str] = field(default_factory=list)
    ordered_at: dict[str, int] = field(default_factory=dict)
    subdags: list[list[tuple[int, int]]] = field(default_factory=list)

    def stamp(self, t: int, ab: bool, true: bool = False) -> int:
        """Next ordering indicator: scaled tick (AB) or counter (RL)."""
        if true:
            if not ab:
                self.true_counter += 1
                return self.true_counter
            self.true_tick_seq = self.true_tick_seq + 1 if t == self.true_last_tick else 0
            self.true_last_tick = t
            return t * OI_SCALE + self.true_tick_seq
        if not ab:
            self.counter += 1
            return self.counter
        self.tick_seq = self.tick_seq + 1 if t == self.last_tick else 0
        self.last_tick = t
        return t * OI_SCALE + self.tick_seq


class _Base:
    def __init__(self, sc: Scenario):
        sc.validate()
        self.sc = sc
        self.n, self.f = sc.n, sc.f
        self.ab_mode = sc.protocol in ("AB", "POMPE_LITE")
        self.rng_w, self.rng_net, self.rng_adv = spawn_rngs(sc.seed)
        self.plan = plan_workload(sc, self.rng_w)
        self.digests = [t.digest for t in self.plan.txns]
        if len(set(self.digests)) != len(self.digests):
            raise ValueError("duplicate transaction digests in workload")
        self.byz = set(sc.byzantine_ids)
        self.correct = sc.correct_ids
        self.strategy = make_strategy(sc, self.digests, self.rng_adv)
        self.replicas = {
            i: Replica(i, i in self.byz, self.strategy if i in self.byz else Strategy())
            for i in range(1, self.n + 1)
        }
        self.heap: list[tuple] = []
        self.seq = 0
        self.now = 0
        self.events_processed = 0

    def push(self, time: int, kind: int, dest: int, payload: Any = None) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time, self.seq, kind, dest, payload))

    def _receive_txn(self, rep: Replica, txn: Transaction, replay: bool) -> None:
        t = self.now
        if not replay:
            oi = rep.stamp(t, self.ab_mode, true=rep.byzantine)
            rep.receipts.append((txn.digest, oi))
            lag = rep.strategy.delays(txn.digest) if rep.byzantine else 0
            if lag:
                self.push(t + lag, RECEIVE, rep.id, (txn, True))
                return
            if not rep.byzantine:
                rep.pending_d.append(txn.digest)
                rep.pending_o.append(oi)
                return
        rep.pending_d.append(txn.digest)
        rep.pending_o.append(rep.stamp(t, self.ab_mode))

    def _take_pending(self, rep: Replica) -> tuple[tuple[str, ...], tuple[int, ...]]:
        dgs, ois = tuple(rep.pending_d), tuple(rep.pending_o)
        rep.pending_d.clear()
        rep.pending_o.clear()
        if rep.byzantine:
            dgs, ois = corrupt_local_ordering(rep.strategy, dgs, ois)
        rep.reported.extend(zip(dgs, ois))
        return dgs, ois

    def _trace(self, **extra) -> RunTrace:
        sc = self.sc
        reps = self.replicas
        meta = {
            "events": self.events_processed,
            "strategy": {"kind": self.strategy.kind, "targets": sorted(self.strategy.targets),
                         "delay": self.strategy.delay},
            "dist_over": "all n replicas",
        }
        meta.update(extra.pop("meta", {}))
        return RunTrace(
            protocol=sc.protocol, n=self.n, f=self.f, gamma=str(sc.gamma),
            correct=list(self.correct), byzantine=sorted(self.byz),
            digests=list(self.digests),
            send_time={t.digest: t.send_time for t in self.plan.txns},
            receipt_order={i: r.receipts for i, r in reps.items()},
            reported_order={i: r.reported for i, r in reps.items()},
            ordered_at={i: r.ordered_at for i, r in reps.items()},
            scenario=sc.to_dict(), meta=meta, **extra)


class Simulation(_Base):
    """FairDAG run: every replica keeps its own DAG view and fairness state."""

    def __init__(self, sc: Scenario, *, graphs_for: int | None = None):
        super().__init__(sc)
        quorum = self.n - self.f
        self.quorum = quorum
        for rep in self.replicas.values():
            rep.view = DagView(self.n, self.f, owner=rep.id, wave_length=sc.wave_length)
            if self.ab_mode:
                rep.ab = AbState(self.n, self.f)
            else:
                rep.rl = RlState(self.n, self.f, quorum=quorum)
        self.vertices: dict[tuple[int, int], Vertex] = {}
        self.correct_keys: list[tuple[int, int]] = []
        self.pay_round = -1
        self.receipts_left = len(self.plan.txns) * self.n
        self.stopped = False
        self.quiescent = True
        self.graphs_for = graphs_for
        self.graph_log: list[dict] = []
        self._validity_cursor = {i: 0 for i in self.correct}

    # -- event handlers ----------------------------------------------------------
    def run(self) -> RunTrace:
        sc = self.sc
        for txn in self.plan.txns:
            self.push(txn.send_time, CLIENT_SEND, 0, txn)
        for i in range(1, self.n + 1):
            self.push(0, TICK, i)
        heap = self.heap
        pop = heapq.heappop
        limit = sc.max_sim_time
        while heap:
            t, _, kind, dest, payload = pop(heap)
            if t > limit:
                self.quiescent = False
                break
            self.now = t
            self.events_processed += 1
            if kind == DELIVER:
                self._on_deliver(dest, payload)
                if not self.stopped:
                    self._maybe_propose(dest)
            elif kind == RECEIVE:
                if isinstance(payload, tuple):
                    self._receive_txn(self.replicas[dest], payload[0], True)
                else:
                    self.receipts_left -= 1
                    self._receive_txn(self.replicas[dest], payload, False)
            elif kind == CLIENT_SEND:
                delays = self.plan.delays[payload.index]
                for ev in broadcast_transaction(payload, delays):
                    self.push(ev.time, RECEIVE, ev.dest, ev.payload)
            elif kind == TICK:
                rep = self.replicas[dest]
                if rep.tick_at == t:
                    rep.tick_at = None
                if not self.stopped:
                    self._maybe_propose(dest)
        if not self.quiescent:
            warnings.warn(NonQuiescent(f"max_sim_time {limit} reached with work pending"), stacklevel=2)
        return self._build_trace()

    def _maybe_propose(self, i: int) -> None:
        if self.stopped:
            return
        rep = self.replicas[i]
        if rep.byzantine and rep.strategy.silent_at(self.now):
            return
        view = rep.view
        r = rep.next_round
        if not view.ready(r):
            return
        if rep.last_prop is not None:
            earliest = rep.last_prop + self.sc.round_interval
            if self.now < earliest:
                if rep.tick_at != earliest:
                    rep.tick_at = earliest
                    self.push(earliest, TICK, i)
                return
        dgs, ois = self._take_pending(rep)
        if rep.byzantine and rep.strategy.selective_refs and r > 0:
            strong = byzantine_refs(view.by_round[r - 1], i, self.byz, self.n - self.f, r)
            v = view.propose(r, dgs, ois, strong=strong, weak=False)
        else:
            v = view.propose(r, dgs, ois)
        rep.next_round = r + 1
        rep.last_prop = self.now
        self.vertices[v.key] = v
        if not rep.byzantine:
            self.correct_keys.append(v.key)
            if dgs:
                self.pay_round = max(self.pay_round, r)
        self._on_deliver(i, v)
        lo, hi = self.sc.network.delay_low, self.sc.network.delay_high
        lags = self.rng_net.integers(lo, hi + 1, size=self.n)
        gst, delta = self.sc.network.gst, self.sc.network.delta
        for j in range(1, self.n + 1):
            if j == i:
                continue
            at = self.now + int(lags[j - 1])
            if gst is not None:
                at = min(at, max(self.now, gst) + delta)
            self.push(at, DELIVER, j, v)
        # a replica may already hold n-f vertices of the new round
        self._maybe_propose(i)

    def _on_deliver(self, i: int, v: Vertex) -> None:
        rep = self.replicas[i]
        delivered = rep.view.receive(v)
        if not delivered:
            return
        if rep.ab is not None:
            for u in delivered:
                rep.ab.record_seen(u)
        commits = rep.view.try_commit()
        if not commits:
            return
        for leader, sub in commits:
            rep.subdags.append([u.key for u in sub])
            if rep.ab is not None:
                out = rep.ab.on_commit(sub)
            else:
                done = len(rep.rl.history)
                rep.rl.process_subdag(leader.round, sub)
                out = rep.rl.final_order[len(rep.ordered):]
                if self.graphs_for == i:
                    # open graphs after this commit, plus the ones it finalised
                    self.graph_log.append({"round": leader.round, "open": rep.rl.snapshot(),
                                           "finalized": rep.rl.history[done:]})
            for d in out:
                rep.ordered_at[d] = self.now
            rep.ordered.extend(out)
        if not self.stopped and not rep.byzantine:
            self._check_done()

    def _check_done(self) -> None:
        if self.receipts_left:
            return
        total = len(self.digests)
        for i in self.correct:
            rep = self.replicas[i]
            if rep.pending_d or len(rep.ordered) < total:
                return
        need = [k for k in self.correct_keys if k[1] <= self.pay_round]
        for i in self.correct:
            committed = self.replicas[i].view.committed_set
            cur = self._validity_cursor[i]
            while cur < len(need) and need[cur] in committed:
                cur += 1
            self._validity_cursor[i] = cur
            if any(k not in committed for k in need[cur:]):
                return
        self.stopped = True
        self.stop_time = self.now

    def _build_trace(self) -> RunTrace:
        reps = self.replicas
        extra: dict[str, Any] = {}
        if not self.ab_mode:
            extra["batches"] = {i: r.rl.batches for i, r in reps.items()}
            extra["graph_of"] = {i: dict(r.rl.graph_of) for i, r in reps.items()}
            extra["graph_edges"] = {i: {h["graph"]: [tuple(e) for e in h["edges"]]
                                        for h in r.rl.history} for i, r in reps.items()}
            extra["edges_ever"] = {i: sorted(r.rl.edges_ever) for i, r in reps.items()}
        else:
            extra["aoi"] = {i: {d: int(a) for d, a in r.ab.aoi_map().items()} for i, r in reps.items()}
        verts = {f"{k[0]}@{k[1]}": [[list(e) for e in v.strong_edges], [list(e) for e in v.weak_edges],
                                    len(v.dgs)] for k, v in sorted(self.vertices.items())}
        return self._trace(
            committed_leaders={i: list(r.view.committed_leaders) for i, r in reps.items()},
            final_order={i: list(r.ordered) for i, r in reps.items()},
            vertices=verts,
            committed_subdags={i: r.subdags for i, r in reps.items()},
            stop_round=self.pay_round, quiescent=self.quiescent, end_time=self.now,
            quorum=self.quorum, **extra)

    def dag_dump(self, replica: int | None = None) -> list[str]:
        i = replica if replica is not None else self.correct[0]
        return self.replicas[i].view.dump_lines()


class BaselineRun(_Base):
    """Single-leader baseline: one leader gathers n-f local orderings per round."""

    def __init__(self, sc: Scenario, config: BaselineConfig):
        super().__init__(sc)
        self.config = config
        self.quorum = self.n - self.f if self.ab_mode else self.n - 2 * self.f
        self.state = AbState(self.n, self.f) if self.ab_mode else RlState(self.n, self.f, quorum=self.quorum)
        self.period = sc.round_interval * sc.wave_length

    def _true_receipts(self) -> dict[int, list[str]]:
        out: dict[int, list[tuple[int, int, str]]] = {i: [] for i in range(1, self.n + 1)}
        for txn in self.plan.txns:
            for i in range(1, self.n + 1):
                out[i].append((txn.send_time + int(self.plan.delays[txn.index, i - 1]), txn.index, txn.digest))
        return {i: [d for *_, d in sorted(v)] for i, v in out.items()}

    def run(self) -> RunTrace:
        sc, cfg = self.sc, self.config
        byz_leader = cfg.byzantine_leader and bool(self.byz)
        leader = min(self.byz) if byz_leader else self.correct[0]
        if cfg.exclusion is not None:
            excluded = sorted(cfg.exclusion)
        elif byz_leader:
            excluded = exclusion_set(self._true_receipts(), self.correct, self.f, self.strategy)
        else:
            excluded = []
        silent_from = None
        if self.strategy.kind == "SilentLeader" and leader in self.byz:
            silent_from = self.strategy.crash_tick
        for txn in self.plan.txns:
            self.push(txn.send_time, CLIENT_SEND, 0, txn)
        k = 0
        self.push(self.period, TICK, 0, 1)
        total = len(self.digests)
        leaders: list[tuple[int, int]] = []
        ordered: list[str] = []
        ordered_at: dict[str, int] = {}
        carried: dict[int, list[tuple[str, int]]] = {i: [] for i in range(1, self.n + 1)}
        quiescent = True
        receipts_left = total * self.n
        while self.heap:
            t, _, kind, dest, payload = heapq.heappop(self.heap)
            if t > sc.max_sim_time:
                quiescent = False
                break
            self.now = t
            self.events_processed += 1
            if kind == CLIENT_SEND:
                for ev in broadcast_transaction(payload, self.plan.delays[payload.index]):
                    self.push(ev.time, RECEIVE, ev.dest, ev.payload)
                continue
            if kind == RECEIVE:
                if isinstance(payload, tuple):
                    self._receive_txn(self.replicas[dest], payload[0], True)
                else:
                    receipts_left -= 1
                    self._receive_txn(self.replicas[dest], payload, False)
                continue
            # leader round
            k += 1
            active = leader
            if silent_from is not None and t >= silent_from:
                if t < silent_from + cfg.recovery_delay:
                    self.push(t + self.period, TICK, 0)
                    continue
                active = self.correct[0]
                excluded = []
            for i, rep in self.replicas.items():
                if rep.pending_d:
                    dgs, ois = self._take_pending(rep)
                    carried[i].extend(zip(dgs, ois))
            if active in self.byz:
                chosen = [i for i in range(1, self.n + 1) if i not in excluded][: self.n - self.f]
            else:
                lags = self.rng_net.integers(sc.network.delay_low, sc.network.delay_high + 1, size=self.n)
                chosen = sorted(sorted(range(1, self.n + 1), key=lambda i: (lags[i - 1], i))[: self.n - self.f])
            frag = []
            for i in chosen:
                if carried[i]:
                    dgs, ois = zip(*carried[i])
                    frag.append(Vertex(i, k, (), (), tuple(dgs), tuple(ois)))
                    carried[i] = []
            leaders.append((k, active))
            if self.ab_mode:
                for v in frag:
                    self.state.record_seen(v)
                out = self.state.on_commit(frag)
            else:
                before = len(self.state.final_order)
                self.state.process_subdag(k, frag)
                out = self.state.final_order[before:]
            for d in out:
                ordered_at[d] = t
            ordered.extend(out)
            if len(ordered) < total or receipts_left:
                self.push(t + self.period, TICK, 0)
        if not quiescent:
            warnings.warn(NonQuiescent(f"max_sim_time {sc.max_sim_time} reached with work pending"),
                          stacklevel=2)
        every = range(1, self.n + 1)
        extra: dict[str, Any] = {}
        if self.ab_mode:
            extra["aoi"] = {i: {d: int(a) for d, a in self.state.aoi_map().items()} for i in every}
        else:
            extra["batches"] = {i: self.state.batches for i in every}
            extra["graph_of"] = {i: dict(self.state.graph_of) for i in every}
            edges = {h["graph"]: [tuple(e) for e in h["edges"]] for h in self.state.history}
            extra["graph_edges"] = {i: edges for i in every}
            extra["edges_ever"] = {i: sorted(self.state.edges_ever) for i in every}
        for rep in self.replicas.values():
            rep.ordered_at = dict(ordered_at)
        return self._trace(
            committed_leaders={i: list(leaders) for i in every},
            final_order={i: list(ordered) for i in every},
            quiescent=quiescent, end_time=self.now, quorum=self.quorum,
            meta={"leader": leader, "excluded": excluded, "byzantine_leader": byz_leader},
            **extra)


def run(sc: Scenario, **kwargs) -> RunTrace:
    """Run one scenario to quiescence (or ``max_sim_time``)."""
    sc.validate()
    if sc.protocol in ("POMPE_LITE", "THEMIS_LITE"):
        from .adversary import run_baseline
        return run_baseline(sc)
    return Simulation(sc, **kwargs).run()
