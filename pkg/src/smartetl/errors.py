"""Exception hierarchy shared across the pipeline stages."""


class SmartETLError(Exception):
    """Base class for every error raised by this package."""


# extraction
class MalformedPdf(SmartETLError):
    pass


class ManifestMismatch(SmartETLError):
    pass


class UndecodableImage(SmartETLError):
    pass


# icons
class EmptyGlossary(SmartETLError):
    pass


class BelowThreshold(SmartETLError):
    """The best glossary match is under the similarity threshold."""

    def __init__(self, label, similarity, threshold):
        super().__init__(
            f"best match {label!r} has similarity {similarity:.4f} < {threshold}"
        )
        self.label = label
        self.similarity = similarity
        self.threshold = threshold


# dedup
class UnknownType(SmartETLError):
    pass


class UnparseableVerdict(SmartETLError):
    def __init__(self, reply):
        super().__init__("LLM reply carries no verdict field")
        self.reply = reply


# taxonomy / prompts
class SchemaViolation(SmartETLError):
    pass


class BudgetExceeded(SmartETLError):
    pass


class ShotTooLarge(BudgetExceeded):
    pass


class ClassificationError(SmartETLError):
    """A gateway failure while classifying a specific STT."""

    def __init__(self, stt_ref, cause):
        super().__init__(f"classification of {stt_ref!r} failed: {cause}")
        self.stt_ref = stt_ref
        self.cause = cause


# gateway
class GatewayError(SmartETLError):
    pass


class CharBudgetExceeded(GatewayError):
    pass


class PromptCapExceeded(GatewayError):
    pass


class EndpointFailure(GatewayError):
    pass


class ReplayMismatch(GatewayError):
    pass


# needle probe
class BookTooShort(SmartETLError):
    pass


class OutOfRange(SmartETLError):
    pass


# metrics
class MissingGold(SmartETLError):
    pass


# transform
class MissingRequired(SmartETLError):
    pass


class TranslatorFailure(SmartETLError):
    pass


# loader
class AuthError(SmartETLError):
    pass


class HttpError(SmartETLError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class ConflictError(HttpError):
    pass


class InvalidItem(SmartETLError):
    pass


# pipeline
class StageFailure(SmartETLError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
