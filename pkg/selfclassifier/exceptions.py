"""Exception hierarchy shared by the library and the CLI."""


class SelfClassifierError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SelfClassifierError, ValueError):
    """Operand shapes do not agree."""


class ShapeError(DimensionError):
    """A tensor has the wrong shape for the requested operation."""


class ParameterError(SelfClassifierError, ValueError):
    """An argument is outside its valid range."""


class DomainError(SelfClassifierError, ValueError):
    """A pointwise function was applied outside its domain."""


class DegenerateSliceError(SelfClassifierError, ValueError):
    """A slice that must be normalized sums to zero (dead class or dead sample)."""


class BatchTooSmallError(SelfClassifierError, ValueError):
    """Batch statistics need at least two rows."""


class NonFiniteError(SelfClassifierError, ArithmeticError):
    """A forward op produced NaN or Inf from finite inputs."""


class GraphError(SelfClassifierError, RuntimeError):
    """Backward was requested on a tensor that was not recorded on a graph."""


class ConfigurationError(SelfClassifierError, ValueError):
    """Invalid run, loss, model or optimizer configuration."""


class HierarchyError(SelfClassifierError, ValueError):
    """Hierarchy map is malformed or does not cover a leaf label."""


class CheckpointError(SelfClassifierError, ValueError):
    """Checkpoint file is unreadable or inconsistent with its config."""


class NaNLossError(SelfClassifierError, RuntimeError):
    """Training produced a non-finite loss."""


class VerificationError(SelfClassifierError):
    """An analytic gradient disagreed with its finite-difference estimate."""
