"""Exception types shared across the package.

Every error raised by judgekit code derives from :class:`JudgekitError`, so
callers can catch the whole family at an API or CLI boundary. File-system
problems surface as the built-in ``OSError``.
"""


class JudgekitError(Exception):
    """Base class for all judgekit errors."""


# --- corpus ---------------------------------------------------------------

class FormatError(JudgekitError):
    """A corpus line could not be parsed or failed field validation."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateIdError(JudgekitError):
    def __init__(self, duplicate_id: str):
        super().__init__(f"duplicate id: {duplicate_id}")
        self.duplicate_id = duplicate_id


class MismatchedIdsError(JudgekitError):
    """Two collections that must be aligned by id do not share the same ids."""


# --- numerals / extraction ------------------------------------------------

class NumeralParseError(JudgekitError, ValueError):
    def __init__(self, text: str):
        super().__init__(f"not a Chinese or Arabic numeral: {text!r}")
        self.text = text


class ExtractionIncompleteError(JudgekitError):
    """A required element could not be extracted from a judgment document."""

    def __init__(self, field: str, case_id: str = ""):
        where = f" (case {case_id})" if case_id else ""
        super().__init__(f"could not extract {field}{where}")
        self.field = field
        self.case_id = case_id


# --- retrieval / backends -------------------------------------------------

class BackendUnavailableError(JudgekitError):
    """A model backend could not be reached or returned an invalid reply."""


class DimensionMismatchError(JudgekitError):
    """Embedding vectors do not share one dimension."""


class ScoreCountMismatchError(JudgekitError):
    """A rerank backend returned a different number of scores than candidates."""


class EmptyCorpusError(JudgekitError):
    pass


class NonFiniteInputError(JudgekitError, ValueError):
    pass


class MissingScoreError(JudgekitError):
    def __init__(self, missing_id: str):
        super().__init__(f"no score for id: {missing_id}")
        self.missing_id = missing_id


class InsufficientNegativesError(JudgekitError):
    pass


class NoPositiveInCandidatesError(JudgekitError):
    pass


# --- prompting / generation -----------------------------------------------

class TemplateError(JudgekitError):
    pass


class ConclusionParseError(JudgekitError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class InvalidEditError(JudgekitError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"invalid edit to {field}: {reason}")
        self.field = field
        self.reason = reason


class MalformedDocumentError(JudgekitError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# --- metrics ----------------------------------------------------------------

class NegativeInputError(JudgekitError, ValueError):
    pass


class EmptyInputError(JudgekitError, ValueError):
    pass


# --- service / jobs ---------------------------------------------------------

class StoreError(JudgekitError):
    pass


class JobNotFoundError(JudgekitError):
    def __init__(self, job_id: str):
        super().__init__(f"no such job: {job_id}")
        self.job_id = job_id


class InvalidTransitionError(JudgekitError):
    pass


class InvalidStateError(JudgekitError):
    pass


class ConflictError(JudgekitError):
    """A concurrent writer won; the caller must refresh and retry."""


# --- cli --------------------------------------------------------------------

class PairingError(JudgekitError):
    pass


class MissingCorpusError(JudgekitError):
    pass
