"""Exception hierarchy and warnings shared across the package.

Exit-code convention for the CLI: ``DataError`` subclasses map to exit
code 1 (bad inputs), every other ``CdmError`` maps to exit code 2
(violated model invariants).
"""

from __future__ import annotations


class CdmError(Exception):
    """Base class for all package errors."""


# --- choice text parsing -------------------------------------------------

class ParseError(CdmError):
    """Base class for choice-text extraction failures."""

    def __init__(self, message: str, text: str = ""):
        super().__init__(message)
        self.text = text


class NoQuantityFoundError(ParseError):
    """No numeric or zero-implying quantity was recognized in the text."""


class UnpairedProbabilityError(ParseError):
    """More probabilities than quantities were recognized."""


# --- categorization / embedding training ---------------------------------

class EmptyDocumentError(CdmError):
    """Tokenization produced no tokens at all."""


class NegativeSampleCollisionError(CdmError):
    """The true category appeared among its own negative samples."""


class DivergedTrainingError(CdmError):
    """Training loss became NaN."""


# --- decision engine ------------------------------------------------------

class AmbiguousRiskinessError(CdmError):
    """All choices tie on riskiness and the risk-sensitivity path must
    distinguish the safest from the riskiest."""


# --- metrics ---------------------------------------------------------------

class DegenerateProportionError(CdmError):
    """A proportion of exactly 0 or 1 reached a log-odds computation."""


# --- datasets / inference ---------------------------------------------------

class DataError(CdmError):
    """Base class for dataset and schema problems (CLI exit code 1)."""


class SchemaError(DataError):
    """Dataset file violates the expected schema; carries record context."""

    def __init__(self, message: str, record: str | int | None = None):
        if record is not None:
            message = f"record {record!r}: {message}"
        super().__init__(message)
        self.record = record


class EmptyDatasetError(DataError):
    """Dataset contains no records."""


class UnknownReferenceError(DataError):
    """A response references an unknown problem or choice id."""


class TooFewResponsesError(DataError):
    """An individual answered fewer problems than the fold count."""


# --- warnings ---------------------------------------------------------------

class OovDocumentWarning(UserWarning):
    """Every token of a document was out of vocabulary; the encoder
    returned the zero vector."""


class SingletonCategoryWarning(UserWarning):
    """A leave-one-out fit ran on a single-experiment category, so the
    held-out experiment was fitted on itself."""
