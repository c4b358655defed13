"""Exception types shared across the package."""


class IvstackError(Exception):
    """Base class for every error raised by this package."""


class ShapeMismatch(IvstackError):
    """Vector/matrix dimensions do not match the declared chain."""


class DomainError(IvstackError):
    """Input values outside the mathematical domain of an operation."""


class MalformedImage(IvstackError):
    """Image lacks the regions needed to measure device geometry."""


class SingularSystem(IvstackError):
    """Regularized normal matrix not positive definite even after jitter."""


class NonFiniteLoss(IvstackError):
    """Training produced a NaN or infinite loss."""


class DegenerateData(IvstackError):
    """Evaluation data carries no variance or too few points."""


class ConfigError(IvstackError):
    """Run configuration file is invalid or carries unknown keys."""


class CorruptDataset(IvstackError):
    """Dataset directory fails an integrity check."""


class CorruptCheckpoint(IvstackError):
    """Checkpoint tree is unreadable or internally inconsistent."""


class VersionMismatch(IvstackError):
    """Persisted artifact was written by an incompatible format version."""
