"""Fairness layer ordering by assigned ordering indicators (AOI).

A digest's AOI is the (f+1)-th smallest committed indicator once n-f
replicas have committed one.  A digest is released only when no digest
still lacking an AOI could end up with a smaller one (the LPAOI bound).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable

from .dag import Vertex

INF = math.inf


def kth_smallest(values: Iterable[float], k: int) -> float:
    """k-th smallest (1-based); infinity when fewer than k values exist."""
    small = heapq.nsmallest(k, values)
    return small[k - 1] if len(small) >= k else INF


@dataclass
class OIM:
    """Ordering indicator manager for one digest (index 0 is replica 1)."""

    seen_ois: list[float]
    committed_ois: list[float]
    lpaoi: float = INF
    aoi: float = INF

    @classmethod
    def empty(cls, n: int) -> "OIM":
        return cls([INF] * n, [INF] * n)


def compute_aoi(oim: OIM, n: int, f: int) -> float:
    if oim.aoi != INF:
        return oim.aoi
    finite = [x for x in oim.committed_ois if x != INF]
    if len(finite) < n - f:
        return INF
    return kth_smallest(finite, f + 1)


def compute_lpaoi(oim: OIM, highest_oi_list: list[float], f: int) -> float:
    lp = [min(s, h) for s, h in zip(oim.seen_ois, highest_oi_list)]
    return kth_smallest(lp, f + 1)


@dataclass
class AbState:
    n: int
    f: int
    oims: dict[str, OIM] = field(default_factory=dict)
    highest_oi_list: list[float] = field(default_factory=list)
    txns_w_assigned_oi: set[str] = field(default_factory=set)
    final_order: list[str] = field(default_factory=list)
    lpaoi_min: float = INF

    def __post_init__(self) -> None:
        if not self.highest_oi_list:
            self.highest_oi_list = [0] * self.n
        self._ordered: set[str] = set()
        self._pending: set[str] = set()  # digests still without an AOI

    def _oim(self, d: str) -> OIM:
        oim = self.oims.get(d)
        if oim is None:
            oim = self.oims[d] = OIM.empty(self.n)
            self._pending.add(d)
        return oim

    def record_seen(self, v: Vertex) -> None:
        i = v.replica_id - 1
        for d, oi in zip(v.dgs, v.ois):
            oim = self._oim(d)
            if oim.seen_ois[i] == INF:
                oim.seen_ois[i] = oi
        if v.ois and v.ois[-1] > self.highest_oi_list[i]:
            self.highest_oi_list[i] = v.ois[-1]

    def record_committed(self, subdag: Iterable[Vertex]) -> None:
        for v in subdag:
            i = v.replica_id - 1
            for d, oi in zip(v.dgs, v.ois):
                oim = self._oim(d)
                if oim.seen_ois[i] == INF:
                    # a commit implies delivery; tolerate callers that skip record_seen
                    oim.seen_ois[i] = oi
                if oim.committed_ois[i] == INF:
                    oim.committed_ois[i] = oim.seen_ois[i]

    def finalize(self) -> list[str]:
        n, f = self.n, self.f
        lp_min = INF
        for d in sorted(self._pending):
            oim = self.oims[d]
            aoi = compute_aoi(oim, n, f)
            if aoi != INF:
                oim.aoi = aoi
                self._pending.discard(d)
                self.txns_w_assigned_oi.add(d)
            else:
                oim.lpaoi = compute_lpaoi(oim, self.highest_oi_list, f)
                lp_min = min(lp_min, oim.lpaoi)
        self.lpaoi_min = lp_min
        ready = sorted((self.oims[d].aoi, d) for d in self.txns_w_assigned_oi
                       if self.oims[d].aoi < lp_min)
        out = [d for _, d in ready]
        self.txns_w_assigned_oi.difference_update(out)
        self._ordered.update(out)
        self.final_order.extend(out)
        return out

    def on_commit(self, subdag: Iterable[Vertex]) -> list[str]:
        """Record a committed subdag and return the digests it released."""
        self.record_committed(subdag)
        return self.finalize()

    def aoi_map(self) -> dict[str, float]:
        return {d: o.aoi for d, o in self.oims.items() if o.aoi != INF}


def record_seen(state: AbState, vertex: Vertex) -> AbState:
    state.record_seen(vertex)
    return state


def record_committed(state: AbState, subdag: Iterable[Vertex]) -> AbState:
    state.record_committed(subdag)
    return state


def finalize(state: AbState) -> list[str]:
    return state.finalize()
