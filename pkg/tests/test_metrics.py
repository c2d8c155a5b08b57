import itertools
import math
import random

import pytest

from fairdag import (InsufficientData, RunTrace, check_agreement, check_batch_fairness,
                     check_linearizability, correctly_ordered, diff, dist, report)
from fairdag.metrics import pair_verdicts

from worked import BATCHED, CONDORCET, LINEARIZABLE

INF = math.inf


def brute_diff(o1, o2, f):
    asc1, desc2 = sorted(o1), sorted(o2, reverse=True)
    vals = [2 * (f + 1) - i - j
            for i in range(1, f + 2) for j in range(1, f + 2)
            if asc1[i - 1] < desc2[j - 1]]
    return max(min(vals), 0) if vals else INF


def hand_trace(orders, final, *, byz=(), batches=None, gamma="1", protocol="AB", f=1):
    """``orders`` maps replica -> [digest] or [(digest, oi)]."""
    n = len(orders)
    recv = {i: [x if isinstance(x, tuple) else (x, k + 1) for k, x in enumerate(seq)]
            for i, seq in orders.items()}
    digests = sorted({d for seq in recv.values() for d, _ in seq})
    correct = [i for i in sorted(orders) if i not in byz]
    tr = RunTrace(protocol, n, f, gamma, correct, list(byz), digests, {d: 0 for d in digests},
                  recv, recv, {i: [] for i in correct}, {i: list(final) for i in correct},
                  {i: {} for i in correct})
    if batches is not None:
        tr.batches = {i: [list(b) for b in batches] for i in correct}
        tr.graph_of = {i: {d: 2 for d in digests} for i in correct}
        tr.graph_edges = {i: {2: []} for i in correct}
    return tr


def test_diff_examples():
    assert diff([1, 2, 3], [4, 5, 6], 1) == 0
    assert diff([1, 4], [2, 3], 1) == 1
    assert diff([5, 6], [1, 2], 1) == INF
    with pytest.raises(InsufficientData):
        diff([1], [2, 3], 1)


def test_diff_matches_brute_force():
    rng = random.Random(11)
    for _ in range(500):
        f = rng.randint(0, 3)
        k1, k2 = rng.randint(f + 1, 2 * f + 3), rng.randint(f + 1, 2 * f + 3)
        o1 = [rng.randint(0, 9) for _ in range(k1)]
        o2 = [rng.randint(0, 9) for _ in range(k2)]
        assert diff(o1, o2, f) == brute_diff(o1, o2, f)


def test_dist_examples():
    assert dist({("a", "b"): 4}, "a", "b") == 4
    assert dist({("a", "b"): 2, ("b", "a"): 2}, "a", "b") == 0
    assert dist({("d3", "d5"): 3, ("d5", "d3"): 1}, "d5", "d3") == 2


def test_linearizability_on_separated_pair():
    tr = hand_trace(LINEARIZABLE, ["T1", "T2", "T3", "T4"], byz=(4,))
    assert correctly_ordered(tr, "T1", "T4", "absolute")
    assert check_linearizability(tr) == []

    bad = hand_trace(LINEARIZABLE, ["T4", "T1", "T2", "T3"], byz=(4,))
    errs = check_linearizability(bad)
    assert len(errs) == 3  # one per correct replica
    assert all("T4 ordered before T1" in e for e in errs)


def test_linearizability_single_txn():
    tr = hand_trace({i: ["x"] for i in range(1, 5)}, ["x"])
    assert check_linearizability(tr) == []


def test_relative_correctness():
    tr = hand_trace({i: ["a", "b"] for i in range(1, 5)}, ["a", "b"], protocol="RL")
    assert correctly_ordered(tr, "a", "b", "relative")
    assert not correctly_ordered(tr, "b", "a", "relative")


def test_batched_example_passes():
    tr = hand_trace(BATCHED, [], byz=(4,), gamma="2/3", protocol="RL",
                    batches=[["T0"], ["T1", "T2", "T3", "T4"], ["T5"]])
    assert check_batch_fairness(tr) == []


def test_condorcet_single_batch_passes():
    tr = hand_trace(CONDORCET, [], protocol="RL", batches=[["T1", "T2", "T3", "T4"]])
    assert check_batch_fairness(tr) == []


def test_reversed_batches_reported():
    orders = {i: ["T0", "T1", "T2"] for i in range(1, 5)}
    tr = hand_trace(orders, [], protocol="RL", batches=[["T1"], ["T0"], ["T2"]])
    errs = check_batch_fairness(tr)
    assert errs and all("T0 preferred" in e for e in errs)


def test_split_cycle_next_to_unanimous_txn_reported():
    orders = {i: ["T0"] + CONDORCET[i] for i in range(1, 5)}
    tr = hand_trace(orders, [], protocol="RL", batches=[["T1", "T2"], ["T0", "T3", "T4"]])
    errs = check_batch_fairness(tr)
    assert any("T0 preferred" in e for e in errs)


def test_agreement():
    tr = hand_trace({i: ["a", "b"] for i in range(1, 5)}, ["a", "b"])
    assert check_agreement(tr) == []
    tr.final_order[2] = ["b", "a"]
    assert len(check_agreement(tr)) == 1


def test_report_files(tmp_path):
    tr = hand_trace({i: ["a", "b", "c"] for i in range(1, 5)}, ["a", "b", "c"], protocol="RL",
                    batches=[["a"], ["b"], ["c"]])
    rep = report([tr], out_dir=tmp_path, stem="one")
    assert rep.passed
    assert rep.ratio(4) == 1.0
    assert (tmp_path / "one.csv").read_text().splitlines()[0] == "bucket,pairs,correct,ratio"
    assert '"passed": true' in (tmp_path / "one.json").read_text()
    # only buckets with pairs appear
    assert [b["bucket"] for b in rep.buckets] == [4]


def test_absolute_pairs_skip_infinite_diff():
    orders = {i: ["a", "b"] for i in range(1, 5)}
    tr = hand_trace(orders, ["a", "b"])
    assert pair_verdicts(tr) == []  # Diff(b, a) is infinite
    wide = {1: [("a", 1), ("b", 2)], 2: [("a", 1), ("b", 3)], 3: [("b", 1), ("a", 4)],
            4: [("a", 1), ("b", 2)]}
    tr = hand_trace(wide, ["a", "b"])
    (pv,) = pair_verdicts(tr)
    assert pv.correct and pv.bucket == 1
