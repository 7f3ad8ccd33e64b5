"""Error taxonomy: one root, one class per failure kind."""


class TrainerError(Exception):
    """Root of all errors raised by this package."""


class InvalidConfig(TrainerError):
    """A config value violates its documented range or relation."""


class DataFormatError(TrainerError):
    """A dataset file or manifest cannot be parsed or fails its checksum."""


class ShapeError(TrainerError):
    """Tensor shapes violate an operation's contract."""


class ArchMismatch(TrainerError):
    """A checkpoint's architecture does not fit the requested data view."""


class DivergenceDetected(TrainerError):
    """A training loss became non-finite."""


class NonFiniteGradient(TrainerError):
    """A gradient used by the regularizer is NaN or infinite."""
