"""Exception hierarchy shared by all modules.

Every failure mode the library raises deliberately derives from ModnnError,
so callers (and the CLI) can map errors to exit codes without string matching.
"""


class ModnnError(Exception):
    """Base class for all library errors."""


class ConfigError(ModnnError):
    """Invalid, missing, or unknown configuration key/value."""


class ShapeError(ModnnError):
    """Operands have incompatible dimensions."""


class ContractError(ModnnError):
    """A documented precondition was violated by the caller."""


class SimulationError(ModnnError):
    """Non-finite state or input inside the thermal testbed."""


class ActuationError(ModnnError):
    """Requested actuator value outside its physical range."""


class IngestionError(ModnnError):
    """Malformed time-series file (bad row, gap, unknown column)."""


class DatasetError(ModnnError):
    """Window extraction impossible (frame too short, empty split)."""


class TrainingError(ModnnError):
    """Divergence or non-finite gradient during training."""


class MetricError(ModnnError):
    """Metric undefined for the given inputs."""


class OptimizerError(ModnnError):
    """Non-finite loss during control-sequence optimization."""


class IntegrityError(ModnnError):
    """Corrupted or inconsistent checkpoint / output file."""
