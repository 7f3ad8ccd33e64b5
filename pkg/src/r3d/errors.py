"""Exception taxonomy shared by every r3d module.

All domain errors derive from :class:`R3DError` so callers can catch one root.
I/O failures from the OS propagate as plain ``OSError``.
"""


class R3DError(Exception):
    """Root of all r3d domain errors."""


class InvalidParams(R3DError):
    """A parameter object violates its own invariants."""


class FormatError(R3DError):
    """A byte stream is not a well-formed R3DM file (magic, version, layout)."""


class ChecksumMismatch(FormatError):
    """R3DM trailer checksum does not match the file contents."""


class DimsMismatch(R3DError):
    """Grid dimensions of two volumes (or file vs. expectation) disagree."""


class ShapeMismatch(R3DError):
    """An array's shape does not match its declared grid."""


class NonBinaryValue(R3DError):
    """An occupancy volume contains a value other than 0.0 or 1.0."""


class NonFiniteValue(R3DError):
    """A volume that must be finite contains NaN or infinity."""


class IndexOutOfRange(R3DError):
    """A voxel index lies outside the grid."""


class OutOfBounds(R3DError):
    """A point in meters lies outside the grid volume."""


class DegenerateGeometry(R3DError):
    """A distance that must be positive is zero (log-distance undefined)."""


class SingularDesign(R3DError):
    """Fit design matrix is rank-deficient or numerically singular."""


class TooFewSamples(R3DError):
    """Not enough measurements to identify the model coefficients."""


class EmptyInput(R3DError):
    """An aggregate received no elements."""


class ConstantDataset(R3DError):
    """Dataset min equals max; normalization is undefined."""


class EmptyCandidates(R3DError):
    """Sparse sampling has an empty candidate voxel set."""


class NonPositivePower(R3DError):
    """A linear-scale transmit power is zero or negative."""


class MissingChannel(R3DError):
    """A feature assembly or sample lacks a channel its config requires."""


class ZeroEnergyTruth(R3DError):
    """NMSE reference volume has zero energy."""


class DomainMismatch(R3DError):
    """Two volumes carry different domain tags (dB vs. normalized)."""


class VolumeTooSmall(R3DError):
    """Volume is smaller than the minimum the operation supports."""


class InvariantViolation(R3DError):
    """A loaded sample violates a structural invariant."""


class BadFractions(R3DError):
    """Split fractions are negative or do not sum to 1."""
