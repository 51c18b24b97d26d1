"""Exception hierarchy shared across the suite."""


class ArenaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ArenaError):
    """An operation was called with arguments outside its contract."""


class DataError(ArenaError):
    """Ingested data violates an invariant (duplicates, unknown ids, ...)."""


class FormatError(DataError):
    """A file does not conform to its container format."""


class ShortfallError(ArenaError):
    """Not enough source material to satisfy the requested amount."""


class EmptySampleError(ArenaError):
    """A statistic was requested over an empty (fully excluded) sample."""


class UndefinedKappaError(ArenaError):
    """Chance agreement is 1, so the kappa denominator vanishes."""


class InsufficientSampleError(ArenaError):
    """Too few rows to fit the requested statistic."""


class CannotSplitError(ArenaError):
    """A song-disjoint split is impossible for this corpus."""


class TemplateError(ArenaError):
    """A prompt template is malformed or missing a slot value."""


class TrainingError(ArenaError):
    """Adapter training produced a non-finite loss."""


class ConflictError(ArenaError):
    """A write collides with an existing record (first write wins)."""


class NotFoundError(ArenaError):
    """A referenced entity does not exist."""
