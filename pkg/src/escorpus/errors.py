"""Exception types shared across the package.

Everything derives from EscorpusError so callers can catch the whole
family at CLI boundaries while tests assert on specific classes.
"""


class EscorpusError(Exception):
    """Base class for all errors raised by this package."""


# --- corpus / record handling -------------------------------------------------

class MalformedRecord(EscorpusError):
    """Record is not parseable or is missing a required field."""


class UnknownStrategy(EscorpusError):
    """An assistant turn carries a strategy label that does not resolve."""


class UnknownScenario(EscorpusError):
    """A scenario name is not registered (strict mode only)."""


class RoleError(EscorpusError):
    """First speaker of a dialogue is not the User."""


class InvariantViolation(EscorpusError):
    """A value violates its declared invariants."""


class CorpusLoadError(EscorpusError):
    """Too many lines of a corpus file failed to parse.

    Carries (line_number, error) pairs for every failed line.
    """

    def __init__(self, message: str, line_errors: list[tuple[int, Exception]]):
        super().__init__(message)
        self.line_errors = line_errors


class EmptyCorpus(EscorpusError):
    """Operation requires a non-empty corpus."""


# --- generation gateway -------------------------------------------------------

class EmptySeeds(EscorpusError):
    """Prompt construction needs at least one seed dialogue."""


class AuthError(EscorpusError):
    """Gateway rejected our credentials; never retried."""


class RateLimited(EscorpusError):
    """Gateway asked us to slow down and retries were exhausted."""


class ProviderError(EscorpusError):
    """Gateway kept failing after all retry attempts."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


# --- curation loop ------------------------------------------------------------

class InsufficientSeeds(EscorpusError):
    """Seed pool has fewer entries than requested for a scenario."""


class NotApproved(EscorpusError):
    """Promotion requested for a dialogue that is not approved."""


class UnknownDialogue(EscorpusError):
    """Dialogue id not known to the store."""


class AlreadyDecided(EscorpusError):
    """A terminal review decision already exists for this dialogue."""


class LoopFailure(EscorpusError):
    """Every scenario in an iteration failed; nothing was generated."""


class ValidationFailed(EscorpusError):
    """An edited dialogue did not pass validation with verdict Accept."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


# --- analysis / metrics -------------------------------------------------------

class UnequalRaterCounts(EscorpusError):
    """Agreement statistic needs the same rater count on every item."""


class LengthMismatch(EscorpusError):
    """Paired candidate/reference lists have different lengths."""


class EmptyInput(EscorpusError):
    """Metric input is empty where a non-empty sequence is required."""


class NoNgrams(EscorpusError):
    """No n-gram of the requested order exists in the input."""


class AllOOV(EscorpusError):
    """Every token on one side is out of the embedding vocabulary."""


class DimensionMismatch(EscorpusError):
    """Embedding file line has a vector of the wrong width."""

    def __init__(self, message: str, line_number: int):
        super().__init__(message)
        self.line_number = line_number


class UnreadableFile(EscorpusError):
    """File could not be opened or decoded."""


# --- safety -------------------------------------------------------------------

class EmptyText(EscorpusError):
    """Toxicity scoring requires non-empty text."""


class ServiceError(EscorpusError):
    """External scoring service kept failing after retries."""


# --- export -------------------------------------------------------------------

class BadRatios(EscorpusError):
    """Split ratios must be positive and sum to 1."""


class ConsecutiveSpeakerWarning(UserWarning):
    """Two adjacent turns share a speaker; tolerated but worth flagging."""
