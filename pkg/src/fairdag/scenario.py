"""Scenario description, validation and JSON round-tripping."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import ConfigError

PROTOCOLS = ("AB", "RL", "POMPE_LITE", "THEMIS_LITE")
STRATEGIES = ("Honest", "ReverseOrder", "TargetedDelay", "SilentLeader")


def as_fraction(value: Any) -> Fraction:
    """Accept 1, 0.5, "2/3" or a Fraction and return an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1000)
    return Fraction(value)


def ab_threshold_ok(n: int, f: int) -> bool:
    return n > 3 * f


def rl_threshold_ok(n: int, f: int, gamma: Fraction) -> bool:
    # n > f(2g+1)/(2g-1), multiplied through by the positive (2g-1)
    return n * (2 * gamma - 1) > f * (2 * gamma + 1)


def themis_threshold_ok(n: int, f: int, gamma: Fraction) -> bool:
    return n * (2 * gamma - 1) > f * (2 * gamma + 2)


def max_f(n: int, protocol: str, gamma: Any = 1) -> int:
    """Largest f the protocol tolerates for n replicas."""
    gamma = as_fraction(gamma)
    best = 0
    for f in range(n):
        probe = Scenario(n=n, f=f, gamma=gamma, protocol=protocol)
        if probe.threshold_ok():
            best = f
    return best


@dataclass
class Workload:
    num_txns: int = 10
    num_clients: int = 4
    send_interval: int = 4
    send_start: int = 1
    send_times: list[int] | None = None
    delay_low: int = 0
    delay_high: int = 30
    # constant extra receipt delay per replica (index 0 is replica 1)
    replica_bias: list[int] | None = None
    # explicit delays[txn][replica - 1]; overrides the random draw
    receipt_delays: list[list[int]] | None = None
    digests: list[str] | None = None


@dataclass
class Network:
    delay_low: int = 1
    delay_high: int = 8
    gst: int | None = None
    delta: int | None = None


@dataclass
class AdversarySpec:
    kind: str = "Honest"
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class BaselineSpec:
    byzantine_leader: bool = True
    # explicit replica ids to drop; None picks them adversarially
    exclusion: list[int] | None = None
    recovery_delay: int = 50


@dataclass
class Scenario:
    n: int = 4
    f: int = 1
    f_actual: int = 0
    gamma: Fraction = Fraction(1)
    protocol: str = "AB"
    adversary: AdversarySpec = field(default_factory=AdversarySpec)
    workload: Workload = field(default_factory=Workload)
    network: Network = field(default_factory=Network)
    baseline: BaselineSpec = field(default_factory=BaselineSpec)
    seed: int = 1
    max_sim_time: int = 20_000
    wave_length: int = 2
    round_interval: int = 6
    byzantine: list[int] | None = None

    def __post_init__(self) -> None:
        self.gamma = as_fraction(self.gamma)
        for name, cls in (("adversary", AdversarySpec), ("workload", Workload),
                          ("network", Network), ("baseline", BaselineSpec)):
            value = getattr(self, name)
            if isinstance(value, dict):
                setattr(self, name, _build(cls, value))

    @property
    def byzantine_ids(self) -> list[int]:
        if self.byzantine is not None:
            return sorted(self.byzantine)
        # highest ids are Byzantine so replica 1 is always correct
        return list(range(self.n - self.f_actual + 1, self.n + 1))

    @property
    def correct_ids(self) -> list[int]:
        byz = set(self.byzantine_ids)
        return [i for i in range(1, self.n + 1) if i not in byz]

    def threshold_ok(self) -> bool:
        if self.protocol in ("AB", "POMPE_LITE"):
            return ab_threshold_ok(self.n, self.f)
        if self.protocol == "RL":
            return rl_threshold_ok(self.n, self.f, self.gamma)
        return themis_threshold_ok(self.n, self.f, self.gamma)

    def validate(self) -> "Scenario":
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.adversary.kind not in STRATEGIES:
            raise ConfigError(f"unknown adversary {self.adversary.kind!r}")
        if self.n < 1 or self.f < 0:
            raise ConfigError("need n >= 1 and f >= 0")
        if not 0 <= self.f_actual <= self.f:
            raise ConfigError(f"f_actual={self.f_actual} outside 0..f={self.f}")
        if not Fraction(1, 2) < self.gamma <= 1:
            raise ConfigError(f"gamma={self.gamma} outside (1/2, 1]")
        if not self.threshold_ok():
            raise ConfigError(
                f"{self.protocol} cannot tolerate f={self.f} with n={self.n}, gamma={self.gamma}")
        if self.wave_length < 2:
            raise ConfigError("wave_length must be at least 2")
        byz = self.byzantine_ids
        if len(byz) != self.f_actual or not all(1 <= i <= self.n for i in byz):
            raise ConfigError("byzantine list must name f_actual distinct replica ids")
        w = self.workload
        if w.num_txns < 0:
            raise ConfigError("num_txns must be non-negative")
        if w.send_times is not None and len(w.send_times) != w.num_txns:
            raise ConfigError("send_times length must equal num_txns")
        if w.receipt_delays is not None:
            if len(w.receipt_delays) != w.num_txns or any(len(r) != self.n for r in w.receipt_delays):
                raise ConfigError("receipt_delays must be num_txns rows of n delays")
        if w.digests is not None and len(set(w.digests)) != w.num_txns:
            raise ConfigError("digests must be num_txns unique strings")
        if w.delay_low > w.delay_high or self.network.delay_low > self.network.delay_high:
            raise ConfigError("delay_low must not exceed delay_high")
        if self.network.delay_low < 0 or w.delay_low < 0:
            raise ConfigError("delays must be non-negative")
        if (self.network.gst is None) != (self.network.delta is None):
            raise ConfigError("gst and delta must be given together")
        return self

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["gamma"] = str(self.gamma)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        return _build(cls, data)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build(cls, data: dict[str, Any]):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**data)


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return Scenario.from_dict(data)
