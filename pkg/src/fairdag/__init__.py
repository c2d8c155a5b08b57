"""Fair transaction ordering on top of a simulated DAG-based BFT protocol."""

from .ab import AbState, OIM, compute_aoi, compute_lpaoi
from .adversary import BaselineConfig, Strategy, corrupt_local_ordering, run_baseline
from .dag import DagView, Vertex
from .errors import (ConfigError, Equivocation, InsufficientData, InvalidVertex, IoError,
                     NonQuiescent, NotReady, OutOfOrderSubdag)
from .harness import Event, Simulation, Transaction, broadcast_transaction, run
from .metrics import (check_agreement, check_batch_fairness, check_dag, check_linearizability,
                      correctly_ordered, diff, dist, report, run_checkers)
from .rl import RlState, ap, classify, hamilton_path, is_tournament, ordering_dependency
from .scenario import Scenario, load_scenario, max_f
from .trace import RunTrace

__version__ = "0.1.0"

__all__ = [
    "AbState", "OIM", "compute_aoi", "compute_lpaoi",
    "BaselineConfig", "Strategy", "corrupt_local_ordering", "run_baseline",
    "DagView", "Vertex",
    "ConfigError", "Equivocation", "InsufficientData", "InvalidVertex", "IoError",
    "NonQuiescent", "NotReady", "OutOfOrderSubdag",
    "Event", "Simulation", "Transaction", "broadcast_transaction", "run",
    "check_agreement", "check_batch_fairness", "check_dag", "check_linearizability",
    "correctly_ordered", "diff", "dist", "report", "run_checkers",
    "RlState", "ap", "classify", "hamilton_path", "is_tournament", "ordering_dependency",
    "Scenario", "load_scenario", "max_f", "RunTrace",
]
