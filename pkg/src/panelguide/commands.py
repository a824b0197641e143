"""Model-reply segmentation into an ordered, schema-validated command sequence.

Strict mode is the default: the reply must be nothing but item tokens
separated by commas and whitespace, exactly what the reinforcement directive
demands. Lenient mode extracts embedded tokens from decorated replies and
reports every fragment it discarded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ReplyParseError
from .panel import ItemId, PanelSchema, parse_item_id

STRICT = "strict"
LENIENT = "lenient"

MAX_SEQUENCE_LEN = 64  # sanity bound; real tasks run eight steps

TOKEN_RE = re.compile(r"[A-Z]_[0-9]{2}")
_SEPARATORS_RE = re.compile(r"[,\s]+")


@dataclass(frozen=True)
class CommandSequence:
    steps: tuple[tuple[ItemId, str], ...]  # (item, verb) in execution order
    source_doc: str
    raw_reply: str
    schema_name: str

    def items(self) -> list[ItemId]:
        return [item for item, _ in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ParseReport:
    mode: str
    token_count: int
    rejected_fragments: tuple[tuple[int, str], ...] = field(default=())


def parse_reply(
    reply: str, schema: PanelSchema, mode: str = STRICT, source_doc: str = ""
) -> tuple[CommandSequence, ParseReport]:
    """Segment a reply string into validated commands.

    Strict: everything in the (trimmed) reply must be item tokens separated
    by commas/whitespace. Lenient: tokens are pulled out in left-to-right
    order and every non-token fragment is reported. In both modes a token
    that fails schema validation is an error.
    """
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"unknown parse mode {mode!r}")

    tokens: list[str] = []
    rejected: list[tuple[int, str]] = []
    if mode == STRICT:
        body = reply.strip()
        if body:
            for piece in _SEPARATORS_RE.split(body):
                if not piece:
                    continue
                if not TOKEN_RE.fullmatch(piece):
                    raise ReplyParseError(
                        f"strict mode: foreign content {piece!r} in reply", reason="foreign-content"
                    )
                tokens.append(piece)
    else:
        cursor = 0
        for m in TOKEN_RE.finditer(reply):
            gap = reply[cursor : m.start()].strip(" \t\r\n,")
            if gap:
                rejected.append((cursor, gap))
            tokens.append(m.group(0))
            cursor = m.end()
        tail = reply[cursor:].strip(" \t\r\n,")
        if tail:
            rejected.append((cursor, tail))

    if not tokens:
        raise ReplyParseError("reply contains no item tokens", reason="empty-sequence")
    if len(tokens) > MAX_SEQUENCE_LEN:
        raise ReplyParseError(
            f"reply has {len(tokens)} tokens, cap is {MAX_SEQUENCE_LEN}", reason="sequence-too-long"
        )

    steps = []
    for tok in tokens:
        item = parse_item_id(tok, schema)  # ItemError propagates with its own reason
        steps.append((item, item.verb))

    seq = CommandSequence(
        steps=tuple(steps), source_doc=source_doc, raw_reply=reply, schema_name=schema.name
    )
    report = ParseReport(mode=mode, token_count=len(tokens), rejected_fragments=tuple(rejected))
    return seq, report


def render_sequence(seq: CommandSequence) -> str:
    """Canonical comma-space separated form; strict-parses back to ``seq``."""
    return ", ".join(str(item) for item, _ in seq.steps)


def sequence_equal(a: CommandSequence, b: CommandSequence) -> bool:
    """Position-wise item equality. Sequences must share a schema."""
    if a.schema_name != b.schema_name:
        raise ValueError(f"schema mismatch: {a.schema_name!r} vs {b.schema_name!r}")
    return len(a.steps) == len(b.steps) and all(
        ia == ib for (ia, _), (ib, _) in zip(a.steps, b.steps)
    )


def sequence_from_items(items: list[ItemId], schema: PanelSchema, source_doc: str = "") -> CommandSequence:
    """Build a sequence directly from validated items (fixtures, tests)."""
    if not items:
        raise ReplyParseError("sequence must be non-empty", reason="empty-sequence")
    steps = tuple((item, item.verb) for item in items)
    raw = ", ".join(str(i) for i in items)
    return CommandSequence(steps=steps, source_doc=source_doc, raw_reply=raw, schema_name=schema.name)
