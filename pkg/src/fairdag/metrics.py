"""Fairness-quality metrics, safety checkers and reports.

Checkers are pure functions of a :class:`RunTrace` and return lists of
human-readable violation strings; an empty list means the property held.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InsufficientData, IoError
from .rl import ordering_dependency, strongly_connected_components
from .trace import RunTrace

INF = math.inf
RELATIVE, ABSOLUTE = "relative", "absolute"


def mode_for(protocol: str) -> str:
    return ABSOLUTE if protocol in ("AB", "POMPE_LITE") else RELATIVE


# -- pair metrics -------------------------------------------------------------------
def dist(weights: dict[tuple[str, str], int], d1: str, d2: str) -> int:
    return abs(weights.get((d1, d2), 0) - weights.get((d2, d1), 0))


def diff(ois1: Iterable[float], ois2: Iterable[float], f: int) -> float:
    """Fewest Byzantine indicators that could still put d2's AOI below d1's.

    min over i, j in 1..f+1 of 2(f+1) - i - j subject to asc1[i] < desc2[j];
    infinity when no (i, j) qualifies.
    """
    asc1 = sorted(ois1)
    desc2 = sorted(ois2, reverse=True)
    if len(asc1) < f + 1 or len(desc2) < f + 1:
        raise InsufficientData(f"need {f + 1} correct indicators per digest")
    best = INF
    for i in range(1, f + 2):
        a = asc1[i - 1]
        for j in range(1, f + 2):
            if a < desc2[j - 1]:
                best = min(best, 2 * (f + 1) - i - j)
    return max(best, 0)


def correctly_ordered(trace: RunTrace, d1: str, d2: str, mode: str) -> bool:
    """``d1`` precedes ``d2`` in the final order; was that the right call?"""
    if mode == RELATIVE:
        return 2 * trace.weights_truth.get((d1, d2), 0) > trace.n
    k = trace.f
    a, b = trace.correct_ois(d1), trace.correct_ois(d2)
    return a[k] <= b[k]


# -- checkers ---------------------------------------------------------------------------
def _positions(order: Sequence[str]) -> dict[str, int]:
    return {d: k for k, d in enumerate(order)}


def _agree(a: Sequence, b: Sequence, whole: bool) -> bool:
    """Equal sequences, or (for a cut-off run) one a prefix of the other."""
    if whole:
        return a == b
    k = min(len(a), len(b))
    return a[:k] == b[:k]


def check_agreement(trace: RunTrace) -> list[str]:
    out = []
    ref = trace.correct[0] if trace.correct else None
    if ref is None:
        return out
    q = trace.quiescent
    for i in trace.correct[1:]:
        if not _agree(trace.final_order.get(i, []), trace.final_order.get(ref, []), q):
            out.append(f"final_order of replica {i} differs from replica {ref}")
        if trace.batches and not _agree(trace.batches.get(i, []), trace.batches.get(ref, []), q):
            out.append(f"batches of replica {i} differ from replica {ref}")
    missing = set(trace.digests) - set(trace.final_order.get(ref, ()))
    if missing and trace.quiescent:
        out.append(f"{len(missing)} transactions never ordered")
    return out


def check_linearizability(trace: RunTrace, f: int | None = None) -> list[str]:
    """Every pair whose correct indicators are fully separated keeps that order."""
    digs = [d for d in trace.digests if trace.correct_ois(d)]
    if len(digs) < 2:
        return []
    lo = np.array([trace.correct_ois(d)[0] for d in digs], dtype=float)
    hi = np.array([trace.correct_ois(d)[-1] for d in digs], dtype=float)
    must = hi[:, None] < lo[None, :]
    pairs = np.argwhere(must)
    out = []
    for i in trace.correct:
        pos = _positions(trace.final_order.get(i, ()))
        for a, b in pairs:
            d1, d2 = digs[a], digs[b]
            p1, p2 = pos.get(d1), pos.get(d2)
            if p2 is not None and (p1 is None or p1 > p2):
                out.append(f"replica {i}: {d2} ordered before {d1}")
    return out


def _preferred_pairs(trace: RunTrace, gamma: Fraction) -> list[tuple[str, str]]:
    cw = trace.correct_weights
    need = gamma * (trace.n - trace.f)
    return sorted(p for p, c in cw.items() if c >= need)


def dependency_sccs(trace: RunTrace, replica: int) -> dict[str, int]:
    """SCC id of every ordered digest in the dependency relation at ``replica``."""
    order = trace.final_order.get(replica, [])
    gof = trace.graph_of.get(replica, {})
    gedges = trace.graph_edges.get(replica, {})
    wmax = trace.weights_max
    q = trace.quorum or trace.n - trace.f
    deps = []
    for a in order:
        for b in order:
            if a == b:
                continue
            edges = set(gedges.get(gof[a], ())) if gof.get(a) == gof.get(b) else set()
            if ordering_dependency(a, b, wmax, gof, edges, trace.n, trace.f, q):
                deps.append((a, b))
    comps = strongly_connected_components(order, deps)
    return {d: k for k, comp in enumerate(comps) for d in comp}


def check_batch_fairness(trace: RunTrace, gamma: Any = None, f: int | None = None) -> list[str]:
    """A gamma-preferred pair may not land in a later batch unless both sit in
    one cycle of the dependency relation (the same fair batch)."""
    gamma = Fraction(gamma if gamma is not None else trace.gamma)
    pairs = _preferred_pairs(trace, gamma)
    out = []
    for i in trace.correct:
        idx = {d: k for k, batch in enumerate(trace.batches.get(i, [])) for d in batch}
        bad = [(a, b) for a, b in pairs if b in idx and (a not in idx or idx[a] > idx[b])]
        if not bad:
            continue
        scc = dependency_sccs(trace, i)
        for a, b in bad:
            if a in scc and scc.get(a) == scc.get(b):
                continue
            out.append(f"replica {i}: {a} preferred but batch {idx.get(a)} after {idx[b]} of {b}")
    return out


def check_edge_soundness(trace: RunTrace, gamma: Any = None) -> list[str]:
    gamma = Fraction(gamma if gamma is not None else trace.gamma)
    pref = set(_preferred_pairs(trace, gamma))
    out = []
    for i in trace.correct:
        for a, b in trace.edges_ever.get(i, ()):
            if (b, a) in pref:
                out.append(f"replica {i}: edge {a}->{b} against a gamma-preferred order")
    return out


def _key(s: str) -> tuple[int, int]:
    a, b = s.split("@")
    return int(a), int(b)


def check_dag(trace: RunTrace) -> list[str]:
    """Commit agreement, ascending rounds, subdag partition, validity, self-chain."""
    if not trace.vertices:
        return []
    out = []
    refs = {_key(k): [tuple(e) for e in v[0]] + [tuple(e) for e in v[1]] for k, v in trace.vertices.items()}
    correct = trace.correct
    ref = correct[0]
    for i in correct:
        leaders = trace.committed_leaders[i]
        if not _agree(leaders, trace.committed_leaders[ref], trace.quiescent):
            out.append(f"replica {i}: committed leaders differ from replica {ref}")
        rounds = [r for r, _ in leaders]
        if any(a >= b for a, b in zip(rounds, rounds[1:])):
            out.append(f"replica {i}: leader rounds not strictly ascending")
        seen: set[tuple[int, int]] = set()
        for (r, lid), sub in zip(leaders, trace.committed_subdags[i]):
            sub_set = set(sub)
            if len(sub_set) != len(sub) or sub_set & seen:
                out.append(f"replica {i}: subdag of round {r} overlaps earlier commits")
            # causal history of the leader minus earlier commits
            hist, stack = set(), [(lid, r)]
            while stack:
                k = stack.pop()
                if k in hist or k in seen:
                    continue
                hist.add(k)
                stack.extend(refs[k])
            if hist != sub_set:
                out.append(f"replica {i}: subdag of round {r} is not its causal history")
            seen |= sub_set
        if trace.quiescent:
            need = {k for k in refs if k[0] in correct and k[1] <= trace.stop_round}
            lost = need - seen
            if lost:
                out.append(f"replica {i}: {len(lost)} correct vertices never committed")
        for c in correct:
            rs = sorted(r for (rid, r) in seen if rid == c)
            if rs and rs != list(range(rs[0], rs[0] + len(rs))):
                out.append(f"replica {i}: committed rounds of replica {c} have a gap")
    if not trace.quiescent:
        out.append("run did not reach quiescence")
    return out


def run_checkers(trace: RunTrace) -> dict[str, list[str]]:
    res = {"agreement": check_agreement(trace)}
    if trace.protocol in ("AB", "POMPE_LITE"):
        res["linearizability"] = check_linearizability(trace, trace.f)
    else:
        res["batch_fairness"] = check_batch_fairness(trace, trace.gamma, trace.f)
        res["edge_soundness"] = check_edge_soundness(trace, trace.gamma)
    if trace.vertices:
        res["dag"] = check_dag(trace)
    elif not trace.quiescent:
        res["quiescence"] = ["run did not reach quiescence"]
    return res


# -- reports -----------------------------------------------------------------------------
@dataclass
class PairVerdict:
    first: str
    second: str
    bucket: float
    correct: bool


def pair_verdicts(trace: RunTrace, mode: str | None = None) -> list[PairVerdict]:
    mode = mode or mode_for(trace.protocol)
    order = trace.final_order.get(trace.correct[0], [])
    targets = set(trace.meta.get("strategy", {}).get("targets", ()))
    out = []
    for x in range(len(order)):
        for y in range(x + 1, len(order)):
            a, b = order[x], order[y]
            if targets and a not in targets and b not in targets:
                continue
            if mode == RELATIVE:
                bucket: float = dist(trace.weights_truth, a, b)
                ok = correctly_ordered(trace, a, b, RELATIVE)
            else:
                oa, ob = trace.correct_ois(a), trace.correct_ois(b)
                try:
                    dab, dba = diff(oa, ob, trace.f), diff(ob, oa, trace.f)
                except InsufficientData:
                    continue
                # the orientation with Diff 0 is the right one; bucket by the other
                if (dab == 0) == (dba == 0):
                    continue
                bucket = dba if dab == 0 else dab
                if bucket == INF:
                    continue
                ok = correctly_ordered(trace, a, b, ABSOLUTE)
            out.append(PairVerdict(a, b, bucket, ok))
    return out


@dataclass
class Report:
    mode: str
    protocol: str
    runs: int
    buckets: list[dict[str, Any]]
    verdicts: dict[str, int]
    violations: list[str] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return not any(self.verdicts.values())

    def ratio(self, bucket: float) -> float | None:
        for b in self.buckets:
            if b["bucket"] == bucket:
                return b["ratio"]
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bucket", "pairs", "correct", "ratio"])
        for b in self.buckets:
            w.writerow([b["bucket"], b["pairs"], b["correct"], f"{b['ratio']:.6f}"])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        # wall time is left out so that repeated runs write identical files
        return {"mode": self.mode, "protocol": self.protocol, "runs": self.runs,
                "buckets": self.buckets, "verdicts": self.verdicts,
                "violations": self.violations[:50], "passed": self.passed, "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir: str | Path, stem: str = "report") -> tuple[Path, Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
            csv_path.write_text(self.to_csv())
            json_path.write_text(self.to_json())
        except OSError as exc:
            raise IoError(f"cannot write report to {out_dir}: {exc}") from exc
        return csv_path, json_path


def report(traces: Sequence[RunTrace], mode: str | None = None, out_dir: str | Path | None = None,
           stem: str = "report") -> Report:
    if not traces:
        raise ValueError("report needs at least one trace")
    t0 = time.perf_counter()
    mode = mode or mode_for(traces[0].protocol)
    tally: dict[float, list[int]] = {}
    verdicts: dict[str, int] = {}
    violations: list[str] = []
    for k, tr in enumerate(traces):
        for name, errs in run_checkers(tr).items():
            verdicts[name] = verdicts.get(name, 0) + len(errs)
            violations.extend(f"run {k}: {e}" for e in errs)
        for pv in pair_verdicts(tr, mode):
            slot = tally.setdefault(pv.bucket, [0, 0])
            slot[0] += 1
            slot[1] += pv.correct
    buckets = [{"bucket": int(b), "pairs": p, "correct": c, "ratio": c / p}
               for b, (p, c) in sorted(tally.items()) if p]
    meta = {"dist_over": "all n replicas", "diff_infinite_pairs": "excluded",
            "n": traces[0].n, "f": traces[0].f, "gamma": traces[0].gamma}
    rep = Report(mode, traces[0].protocol, len(traces), buckets, verdicts, violations, meta)
    rep.wall_time = time.perf_counter() - t0
    if out_dir is not None:
        rep.write(out_dir, stem)
    return rep
