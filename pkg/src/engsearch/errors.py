"""Exception hierarchy shared across the engine."""


class EngSearchError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(EngSearchError):
    """Caller passed a value that violates a documented precondition."""


class SchemaError(InvalidInputError):
    """A record failed schema validation; `field` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateTrainingError(EngSearchError):
    """Training data cannot identify a model (e.g. a single class)."""


class DegenerateEmbeddingError(EngSearchError):
    """A vector with no direction (zero norm) cannot be normalized."""


class DegenerateAgreementError(EngSearchError):
    """Chance agreement is 1; kappa is undefined."""


class UndefinedRateError(EngSearchError):
    """wins + losses = 0; a win rate has no denominator."""


class ConflictError(EngSearchError):
    """Write conflicts with existing state (duplicate doc_id)."""


class NotFoundError(EngSearchError):
    """Referenced document or resource does not exist."""


class CorruptIndexError(EngSearchError):
    """On-disk index data failed checksum, framing, or version checks."""


class ClassificationUnavailableError(EngSearchError):
    """External document classifier unreachable or timed out."""


class JudgeTransportError(EngSearchError):
    """Judge endpoint unreachable; safe to retry."""


class JudgeFormatError(EngSearchError):
    """Judge reply violated the strict JSON contract after retry."""
