"""Exception types shared across the package."""


class FairDagError(Exception):
    """Base class for all package errors."""


class ConfigError(FairDagError, ValueError):
    """Scenario parameters violate a protocol threshold or range check."""


class NotReady(FairDagError):
    """A replica tried to propose before holding n-f vertices of the previous round."""


class InvalidVertex(FairDagError, ValueError):
    """Vertex breaks a structural DAG rule."""


class Equivocation(FairDagError):
    """Second, different vertex for an already delivered (replica, round) slot."""


class OutOfOrderSubdag(FairDagError):
    """Subdags must be fed to the RL layer in strictly ascending round order."""


class InsufficientData(FairDagError, ValueError):
    """Fewer than f+1 correct ordering indicators are available for a digest."""


class IoError(FairDagError, OSError):
    """Report or trace files could not be written."""


class NonQuiescent(FairDagError, RuntimeWarning):
    """Simulation hit max_sim_time with ordering work still pending.

    Raised only as a warning; the trace is still returned with
    ``quiescent=False``.
    """
