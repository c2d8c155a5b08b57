"""
Quickstart: one honest run per protocol
=======================================

Four replicas, one of which may be faulty, order eight client
transactions.  Every replica ends with the same order; the checkers
confirm the fairness property each protocol promises.
"""

from fairdag import Scenario, run, run_checkers

# a small workload: 8 transactions, one every 2 ticks, receipt lag 0..16 ticks
workload = dict(num_txns=8, send_interval=2, delay_high=16)

for protocol in ("AB", "RL"):
    sc = Scenario(n=4, f=1, protocol=protocol, workload=workload, seed=7)
    trace = run(sc)

    print(f"--- {protocol} ---")
    print("leaders committed:", trace.committed_leaders[1])
    if protocol == "AB":
        # AB assigns each digest an indicator and sorts by it
        for d in trace.final_order[1]:
            print(f"  {d}  aoi={trace.aoi[1][d]}")
    else:
        # RL emits batches; digests in one batch are tied
        for k, batch in enumerate(trace.batches[1]):
            print(f"  batch {k}: {batch}")

    same = len({tuple(trace.final_order[i]) for i in trace.correct}) == 1
    print("all replicas agree:", same)
    for name, errs in run_checkers(trace).items():
        print(f"  {name}: {'ok' if not errs else errs[:2]}")
