"""Byzantine replica behaviour and single-leader baselines.

Strategies only touch what a Byzantine replica controls: its own local
ordering, which vertices it references, and whether it participates.
The baselines reuse the two fairness layers behind one leader that picks
which n-f local orderings count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .scenario import Scenario


@dataclass(frozen=True)
class Strategy:
    kind: str = "Honest"
    targets: frozenset[str] = frozenset()
    delay: int = 0
    crash_tick: int = 0
    # reference only n-f vertices (preferring Byzantine ones) and skip weak edges
    selective_refs: bool = True

    @property
    def honest(self) -> bool:
        return self.kind == "Honest"

    def delays(self, digest: str) -> int:
        return self.delay if self.kind == "TargetedDelay" and digest in self.targets else 0

    def silent_at(self, t: int) -> bool:
        return self.kind == "SilentLeader" and t >= self.crash_tick


@dataclass(frozen=True)
class BaselineConfig:
    protocol: str
    byzantine_leader: bool = True
    exclusion: tuple[int, ...] | None = None
    recovery_delay: int = 50


def make_strategy(sc: Scenario, digests: Sequence[str], rng: np.random.Generator) -> Strategy:
    kind = sc.adversary.kind
    p = dict(sc.adversary.params)
    if kind == "TargetedDelay":
        if "targets" in p:
            targets = frozenset(digests[i] if isinstance(i, int) else i for i in p["targets"])
        else:
            k = int(p.get("num_targets", max(1, len(digests) // 5)))
            picks = rng.choice(len(digests), size=min(k, len(digests)), replace=False) if digests else []
            targets = frozenset(digests[int(i)] for i in picks)
        return Strategy(kind, targets, int(p.get("delay", 4 * sc.round_interval)),
                        selective_refs=bool(p.get("selective_refs", True)))
    if kind == "SilentLeader":
        return Strategy(kind, crash_tick=int(p.get("crash_tick", 0)))
    return Strategy(kind, selective_refs=bool(p.get("selective_refs", kind != "Honest")))


def corrupt_local_ordering(strategy: Strategy, dgs: Sequence[str], ois: Sequence[int]
                           ) -> tuple[tuple[str, ...], tuple[int, ...]]:
    dgs, ois = tuple(dgs), tuple(ois)
    if strategy.kind == "ReverseOrder":
        return dgs[::-1], tuple(sorted(ois))
    if strategy.kind == "TargetedDelay" and strategy.targets:
        keep = [d for d in dgs if d not in strategy.targets]
        late = [d for d in dgs if d in strategy.targets]
        return tuple(keep + late), tuple(sorted(ois))
    return dgs, ois


def byzantine_refs(prev_round: Iterable[int], me: int, byzantine: set[int], need: int, r: int
                   ) -> tuple[tuple[int, int], ...]:
    """Exactly ``need`` strong references: self, fellow Byzantines, then lowest ids."""
    avail = sorted(prev_round)
    chosen = [me]
    chosen += [i for i in avail if i in byzantine and i != me]
    chosen += [i for i in avail if i not in byzantine]
    return tuple((i, r - 1) for i in sorted(chosen[:need]))


def exclusion_set(receipts: dict[int, list[str]], correct: Sequence[int], f: int,
                  strategy: Strategy) -> list[int]:
    """The f correct replicas a Byzantine leader drops.

    With targets, drop those that received the targets earliest; otherwise
    drop those agreeing most with the correct majority order.
    """
    if f == 0:
        return []
    ranks = {c: {d: k for k, d in enumerate(receipts[c])} for c in correct}
    digests = sorted(ranks[correct[0]]) if correct else []
    if strategy.targets:
        def score(c: int) -> float:
            rk = ranks[c]
            return -sum(rk[d] for d in strategy.targets if d in rk)
    else:
        mat = np.array([[ranks[c][d] for d in digests] for c in correct])
        before = mat[:, :, None] < mat[:, None, :]
        majority = before.sum(axis=0) * 2 > len(correct)

        def score(c: int) -> float:
            return float((before[correct.index(c)] & majority).sum())
    order = sorted(correct, key=lambda c: (-score(c), c))
    return sorted(order[:f])


def run_baseline(sc: Scenario, config: BaselineConfig | None = None):
    from .harness import BaselineRun

    if config is None:
        config = BaselineConfig(sc.protocol, sc.baseline.byzantine_leader,
                                tuple(sc.baseline.exclusion) if sc.baseline.exclusion else None,
                                sc.baseline.recovery_delay)
    if config.protocol not in ("POMPE_LITE", "THEMIS_LITE"):
        raise ConfigError(f"{config.protocol} is not a baseline protocol")
    sc.validate()
    return BaselineRun(sc, config).run()


def describe(strategy: Strategy) -> dict[str, Any]:
    return {"kind": strategy.kind, "targets": sorted(strategy.targets), "delay": strategy.delay,
            "crash_tick": strategy.crash_tick}


__all__ = ["Strategy", "BaselineConfig", "corrupt_local_ordering", "run_baseline",
           "exclusion_set", "byzantine_refs", "make_strategy", "describe"]
