"""
FairDAG against single-leader baselines
=======================================

Two reversing Byzantine replicas (n=7, f=2).  In the baseline a
Byzantine leader collects n-f local orderings and leaves out the f
correct ones that would have helped most.  The DAG protocols see every
replica's ordering, so more transaction pairs end up correctly ordered.

Ratios move with the seed range; the direction is what matters.
"""

from fairdag import Scenario, report, run

workload = dict(num_txns=24, send_interval=3, delay_high=30)
seeds = range(1, 21)


def ratios(protocol, n, f):
    traces = [run(Scenario(n=n, f=f, f_actual=f, protocol=protocol, workload=workload, seed=s,
                           adversary={"kind": "ReverseOrder"}))
              for s in seeds]
    rep = report(traces)
    return {b["bucket"]: (b["ratio"], b["pairs"]) for b in rep.buckets}, rep.passed


for ours, theirs, n, f, axis in (("AB", "POMPE_LITE", 7, 2, "Diff"),
                                 ("RL", "THEMIS_LITE", 9, 2, "Dist")):
    a, ok_a = ratios(ours, n, f)
    b, ok_b = ratios(theirs, n, f)
    print(f"\n{ours} vs {theirs} (n={n}, f={f}); checkers pass: {ok_a}, {ok_b}")
    print(f"{axis:>5} {ours:>10} {theirs:>12}")
    for k in sorted(set(a) & set(b)):
        print(f"{k:>5} {a[k][0]:>10.3f} {b[k][0]:>12.3f}   ({a[k][1]} / {b[k][1]} pairs)")
