"""Exception hierarchy shared by every module in the package."""


class TokenPruneError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(TokenPruneError):
    """A matrix or vector with zero rows/entries where at least one is required."""


class InvalidValue(TokenPruneError):
    """NaN/Inf payload, negative attention score, or an out-of-range parameter."""


class DimensionMismatch(TokenPruneError):
    """Paired inputs whose lengths disagree (attention length vs token count)."""


class ZeroMass(TokenPruneError):
    """Attention scores that sum to zero; no probability distribution exists."""


class ZeroMatrix(TokenPruneError):
    """A matrix whose singular values are all zero; effective rank is undefined."""


class EmptyCorpus(TokenPruneError):
    """An aggregate operation was handed an empty sample collection."""


class StartOutOfRange(TokenPruneError):
    """Farthest-point start index outside the token range."""


class NonPositiveAverage(TokenPruneError):
    """A corpus reference average that must be positive was zero or negative."""


class BadMagic(TokenPruneError):
    """Token dump file does not begin with the expected magic bytes."""


class TruncatedFile(TokenPruneError):
    """Token dump file length disagrees with its header."""


class HeaderMismatch(TokenPruneError):
    """Token dump header fields are internally inconsistent."""


class IoFailure(TokenPruneError):
    """Underlying OS error while writing a token dump."""
