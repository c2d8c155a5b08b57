"""Run trace: everything the checkers and metrics need after a run."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import IoError

Pair = tuple[str, str]


@dataclass
class RunTrace:
    protocol: str
    n: int
    f: int
    gamma: str
    correct: list[int]
    byzantine: list[int]
    digests: list[str]
    send_time: dict[str, int]
    # true receipt order per replica: (digest, indicator)
    receipt_order: dict[int, list[tuple[str, int]]]
    # what each replica put in its vertices / fragments, in proposal order
    reported_order: dict[int, list[tuple[str, int]]]
    committed_leaders: dict[int, list[tuple[int, int]]]
    final_order: dict[int, list[str]]
    ordered_at: dict[int, dict[str, int]]
    batches: dict[int, list[list[str]]] = field(default_factory=dict)
    aoi: dict[int, dict[str, int]] = field(default_factory=dict)
    graph_of: dict[int, dict[str, int]] = field(default_factory=dict)
    graph_edges: dict[int, dict[int, list[Pair]]] = field(default_factory=dict)
    edges_ever: dict[int, list[Pair]] = field(default_factory=dict)
    # global DAG: key "i@r" -> [strong refs, weak refs, digest count]
    vertices: dict[str, Any] = field(default_factory=dict)
    committed_subdags: dict[int, list[list[tuple[int, int]]]] = field(default_factory=dict)
    stop_round: int = -1
    quiescent: bool = True
    end_time: int = 0
    quorum: int = 0
    scenario: dict[str, Any] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._cache: dict[str, Any] = {}

    # -- ground truth --------------------------------------------------------
    def _weights(self, orders: dict[int, list[tuple[str, int]]], who: list[int]) -> dict[Pair, int]:
        idx = {d: k for k, d in enumerate(self.digests)}
        m = len(self.digests)
        ois = np.full((m, len(who)), np.inf)
        for col, i in enumerate(who):
            for d, oi in orders.get(i, ()):
                k = idx.get(d)
                if k is not None and ois[k, col] == np.inf:
                    ois[k, col] = oi
        w = (ois[:, None, :] < ois[None, :, :]).sum(axis=2)
        out = {}
        for a in range(m):
            for b in range(m):
                if a != b and w[a, b]:
                    out[(self.digests[a], self.digests[b])] = int(w[a, b])
        return out

    @property
    def weights_max(self) -> dict[Pair, int]:
        """Pair counts over every replica's reported local ordering."""
        if "wmax" not in self._cache:
            self._cache["wmax"] = self._weights(self.reported_order, list(range(1, self.n + 1)))
        return self._cache["wmax"]

    @property
    def weights_truth(self) -> dict[Pair, int]:
        """Pair counts over every replica's true receipt order."""
        if "wtrue" not in self._cache:
            self._cache["wtrue"] = self._weights(self.receipt_order, list(range(1, self.n + 1)))
        return self._cache["wtrue"]

    @property
    def correct_weights(self) -> dict[Pair, int]:
        if "wcorr" not in self._cache:
            self._cache["wcorr"] = self._weights(self.receipt_order, self.correct)
        return self._cache["wcorr"]

    def correct_ois(self, digest: str) -> list[int]:
        table = self._cache.get("cois")
        if table is None:
            table = {}
            for i in self.correct:
                for d, oi in self.receipt_order.get(i, ()):
                    table.setdefault(d, {}).setdefault(i, oi)
            self._cache["cois"] = table
        return sorted(table.get(digest, {}).values())

    def latency(self) -> dict[str, int]:
        """Send-to-order delay once f+1 correct replicas have ordered each digest."""
        out = {}
        for d in self.digests:
            times = sorted(self.ordered_at.get(i, {}).get(d) for i in self.correct
                           if d in self.ordered_at.get(i, {}))
            if len(times) > self.f:
                out[d] = times[self.f] - self.send_time[d]
        return out

    # -- serialisation -----------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["weights_max"] = sorted([a, b, c] for (a, b), c in self.weights_max.items())
        return data

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def write(self, path: str | Path) -> None:
        try:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(self.dumps())
        except OSError as exc:
            raise IoError(f"cannot write trace {path}: {exc}") from exc

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunTrace":
        data = dict(data)
        data.pop("weights_max", None)

        def ikeys(d):
            return {int(k): v for k, v in d.items()}

        def pairs(seq):
            return [tuple(x) for x in seq]

        for name in ("receipt_order", "reported_order", "committed_leaders"):
            data[name] = {int(k): pairs(v) for k, v in data[name].items()}
        for name in ("final_order", "ordered_at", "batches", "aoi", "graph_of"):
            data[name] = ikeys(data.get(name, {}))
        data["graph_edges"] = {int(k): {int(g): pairs(es) for g, es in v.items()}
                               for k, v in data.get("graph_edges", {}).items()}
        data["edges_ever"] = {int(k): pairs(v) for k, v in data.get("edges_ever", {}).items()}
        data["committed_subdags"] = {int(k): [pairs(s) for s in v]
                                     for k, v in data.get("committed_subdags", {}).items()}
        return cls(**data)

    @classmethod
    def read(cls, path: str | Path) -> "RunTrace":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise IoError(f"cannot read trace {path}: {exc}") from exc
