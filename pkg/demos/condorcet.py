"""
A Condorcet cycle
=================

Each of four replicas receives T1..T4 in a rotated order, so every
transaction is preferred to the next by three replicas and the majority
preference is cyclic.  RL reports the cycle as one batch; AB still
orders every transaction.
"""

from fairdag import Scenario, run

orders = {
    1: ["T1", "T2", "T3", "T4"],
    2: ["T2", "T3", "T4", "T1"],
    3: ["T3", "T4", "T1", "T2"],
    4: ["T4", "T1", "T2", "T3"],
}
digests = ["T1", "T2", "T3", "T4"]

# all sent at tick 0; replica i receives digest d after (position of d) * 2 ticks
delays = [[orders[i].index(d) * 2 for i in range(1, 5)] for d in digests]
workload = dict(num_txns=4, digests=digests, send_times=[0] * 4, receipt_delays=delays)

rl = run(Scenario(protocol="RL", workload=workload, seed=1))
print("RL batches:", rl.batches[1])

ab = run(Scenario(protocol="AB", workload=workload, seed=1))
print("AB order:  ", ab.final_order[1])
print("AB AOIs:   ", ab.aoi[1])
