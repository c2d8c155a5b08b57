"""
The two worked examples, step by step
=====================================

Part 1 replays a hand-built DAG with four replicas (genesis round 1,
leaders R4 at round 2 and R3 at round 4) through the AB layer.

Part 2 feeds two hand-built committed subdags into the RL layer and prints
its dependency graphs.
"""

import math

from fairdag import AbState, DagView, RlState, Vertex

# ---------------------------------------------------------------------------
# Part 1: assigned ordering indicators
# ---------------------------------------------------------------------------
R1 = ((1, 1), (2, 1), (3, 1), (4, 1))
R2 = ((2, 2), (3, 2), (4, 2))
R3 = ((2, 3), (3, 3), (4, 3))
R4 = ((2, 4), (3, 4), (4, 4))
no_r1 = R1[1:]  # round-2 vertices skip v(1,1), which arrived late

vertices = [
    Vertex(1, 1, dgs=("d1",), ois=(1,)),
    Vertex(2, 1, dgs=("d1",), ois=(1,)),
    Vertex(3, 1, dgs=("d2", "d1"), ois=(1, 2)),
    Vertex(4, 1, dgs=("d1", "d2"), ois=(1, 2)),
    Vertex(2, 2, no_r1, (), ("d2", "d4"), (2, 3)),
    Vertex(3, 2, no_r1, (), ("d4",), (3,)),
    Vertex(4, 2, no_r1, (), ("d3",), (3,)),
    Vertex(2, 3, R2, ((1, 1),), ("d3",), (4,)),  # weak edge picks up v(1,1)
    Vertex(3, 3, R2, (), ("d3",), (4,)),
    Vertex(4, 3, R2, (), ("d5",), (4,)),
    Vertex(2, 4, R3, (), ("d5",), (5,)),
    Vertex(3, 4, R3, (), ("d6",), (5,)),
    Vertex(4, 4, R3, (), ("d4",), (5,)),
    Vertex(2, 5, R4),  # two votes for the round-4 leader
    Vertex(4, 5, R4),
]

view = DagView(4, 1, genesis_round=1, leaders={2: 4, 4: 3})
ab = AbState(4, 1)
for v in vertices:
    view.deliver(v)
    ab.record_seen(v)
    for leader, subdag in view.try_commit():
        print(f"commit leader R{leader.replica_id}@{leader.round}:",
              [f"v{v.replica_id},{v.round}" for v in subdag])
        released = ab.on_commit(subdag)
        print("  released:", released)

print("AOIs:", ab.aoi_map())
print("LPAOIs:", {d: o.lpaoi for d, o in sorted(ab.oims.items()) if o.aoi == math.inf})
print("LPAOI_min:", ab.lpaoi_min, "-> d3 (AOI 4) waits")

# ---------------------------------------------------------------------------
# Part 2: dependency graphs
# ---------------------------------------------------------------------------
first = {1: ["d0", "d1", "d2", "d5", "d3"], 2: ["d0", "d2", "d3", "d4", "d5"],
         3: ["d0", "d4", "d1", "d6"], 4: ["d0", "d4", "d1", "d2"]}
second = {1: ["d4", "d6"], 2: ["d1", "d6"], 3: ["d3", "d2", "d5", "d7"], 4: ["d3", "d5", "d6", "d7"]}


def as_subdag(orders, offset=None, rnd=1):
    out = []
    for i, ds in orders.items():
        start = 1 + (len(offset[i]) if offset else 0)
        out.append(Vertex(i, rnd, dgs=tuple(ds), ois=tuple(range(start, start + len(ds)))))
    return out


rl = RlState(4, 1)
rl.process_subdag(2, as_subdag(first))
g = rl.snapshot()[0]
print("\nG_2 nodes:", g["nodes"])
print("G_2 has", len(g["edges"]), "of 15 edges; d3-d5 still undecided")

rl.process_subdag(4, as_subdag(second, first, rnd=3))
for rec in rl.history:
    print(f"G_{rec['graph']} finalised: nodes {rec['nodes']}")
    print("   emitted:", rec["emitted"])
print("batches:", rl.batches)
print("still waiting:", rl.carry)
