"""Exception taxonomy.

Every error carries a short machine-readable ``reason`` token that the wire
protocol reuses in ERR replies, so a failure surfaces identically whether it
happens in-process or across the socket.
"""

from __future__ import annotations


class GuidanceError(Exception):
    """Base class; ``reason`` is a stable kebab-case token."""

    reason = "error"

    def __init__(self, message: str, reason: str | None = None):
        super().__init__(message)
        if reason is not None:
            self.reason = reason


class SchemaError(GuidanceError):
    """Panel schema file is malformed or violates an invariant.

    ``field_path`` points at the offending field, e.g. ``categories.B.layer``.
    """

    reason = "schema-invalid"

    def __init__(self, message: str, field_path: str = ""):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class ItemError(GuidanceError):
    """An item token failed to resolve against the schema."""

    reason = "bad-item"


class IngestError(GuidanceError):
    """Instruction acquisition failed (empty text, OCR transport/job/result)."""

    reason = "ingest-failed"


class GatewayError(GuidanceError):
    """Completion backend failure (auth, timeout, envelope, scripted miss)."""

    reason = "gateway-failed"


class ReplyParseError(GuidanceError):
    """Model reply did not yield a valid command sequence."""

    reason = "parse-failed"


class PhaseError(GuidanceError):
    """Session operation attempted in the wrong phase."""

    reason = "wrong-phase"


class SessionError(GuidanceError):
    """Invalid interaction (non-interactable or unknown item)."""

    reason = "bad-interaction"


class WireError(GuidanceError):
    """Line does not parse under the wire grammar."""

    reason = "bad-message"


class LogError(GuidanceError):
    """Session log is unreadable or incomplete."""

    reason = "bad-log"
