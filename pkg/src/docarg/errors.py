"""Exception types shared across the package.

Errors carry enough location context (line numbers, record ids, event ids)
to point at the offending input without a debugger.
"""


class DocargError(Exception):
    """Base class for all package errors."""


class ParseError(DocargError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(DocargError):
    """Structurally parseable input that violates a declared invariant."""


class SpanOutOfBounds(ValidationError):
    """A token span does not fit inside its document."""


class UnknownEventType(DocargError):
    """Event type missing from the ontology."""


class UnknownSlot(DocargError):
    """Slot index with no placeholder in the template."""


class EmptyMemory(DocargError):
    """Scoring requested against a memory with no records."""


class EmptyTraining(DocargError):
    """Generator training invoked with no (input, target) pairs."""


class InputTooLong(DocargError):
    """Memory and template segments alone exceed the input length budget."""


class DegenerateDistribution(DocargError):
    """Generator produced probabilities that do not sum to one."""


class ProtocolError(DocargError):
    """Sidecar reply violates the wire protocol. Names the offending field."""


class SidecarTimeout(DocargError):
    """Sidecar did not answer within the per-request deadline."""


class ExtractionError(DocargError):
    """Failure while extracting one event; wraps the cause with the event id."""

    def __init__(self, event_id, cause):
        self.event_id = event_id
        self.cause = cause
        super().__init__(f"event {event_id}: {cause}")


class KeyMismatch(DocargError):
    """Prediction refers to a (doc_id, event_id) absent from the gold set."""


class EmptySpan(DocargError):
    """Head-word requested for an empty token sequence."""
