"""Exception types shared across the package."""


class AnchorScoreError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(AnchorScoreError):
    """A file does not conform to its declared on-disk format."""


class ValidationError(AnchorScoreError):
    """A value violates a documented invariant (dimensions, finiteness, ids)."""


class MissingMetadataError(AnchorScoreError):
    """An operation needs per-record metadata (MOS, reference flag) that is absent."""


class EmptySubsetError(AnchorScoreError):
    """An aggregation was asked to run on zero records."""


class ZeroNormError(AnchorScoreError):
    """A vector with zero Euclidean norm reached a norm-sensitive operation."""


class DimensionMismatchError(AnchorScoreError):
    """Two vectors or collections have incompatible dimensions."""


class ConstantInputError(AnchorScoreError):
    """A correlation was requested for a constant sequence (undefined)."""


class ConfigError(AnchorScoreError):
    """A sweep or CLI configuration is invalid."""


class SweepError(AnchorScoreError):
    """A sweep repeat failed; message carries (axis value, repeat, seed) context."""
