"""Line-delimited wire grammar shared by the TCP and WebSocket transports.

Every message is one UTF-8 line. Space-separated fields; free-text fields
(capture paths, error reasons) escape backslash, newline, and carriage
return so a message can never span lines. The same grammar travels in
WebSocket text frames, one message per frame, without the trailing newline.

Client to server::

    HELLO <role>          role also names the session and its log file
    TEXT <doc-id>         compile an instruction document from the corpus
    CAPTURE <image-path>  compile a photographed instruction via OCR
    NEXT | PREV           move the step cursor
    ACT <item>            record a physical interaction

Server to client::

    STATE <phase>                                    IDLE..FAILED
    SEQ <id>,<id>,...                                compiled commands
    PROMPT <index> <item> <verb>                     current step
    EVT <item> <verb> door=<open|closed> violation=<true|false>
    DONE <elapsed-ms> <accuracy>
    ERR <code> <reason>
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import WireError

CLIENT_KINDS = ("HELLO", "TEXT", "CAPTURE", "NEXT", "PREV", "ACT")
SERVER_KINDS = ("STATE", "SEQ", "PROMPT", "EVT", "DONE", "ERR")
KINDS = CLIENT_KINDS + SERVER_KINDS

PHASES = ("IDLE", "CAPTURING", "AWAITING_GPT", "READY", "RUNNING", "DONE", "FAILED")

MAX_LINE_BYTES = 64 * 1024

_TOKEN_RE = re.compile(r"^[^\s]+$")
_ITEM_RE = re.compile(r"^[A-Z]_[0-9]{2}$")
_VERB_RE = re.compile(r"^[a-z]+$")


def escape_text(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


def unescape_text(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "r":
                out.append("\r")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)


@dataclass(frozen=True)
class WireMessage:
    kind: str
    payload: dict = field(default_factory=dict)

    def encode(self) -> str:
        """The message as a single line, without the newline terminator."""
        k, p = self.kind, self.payload
        if k in ("NEXT", "PREV"):
            return k
        if k == "HELLO":
            return f"HELLO {p['role']}"
        if k == "TEXT":
            return f"TEXT {p['doc_id']}"
        if k == "CAPTURE":
            return f"CAPTURE {escape_text(p['path'])}"
        if k == "ACT":
            return f"ACT {p['item']}"
        if k == "STATE":
            return f"STATE {p['phase']}"
        if k == "SEQ":
            return "SEQ " + ",".join(p["items"])
        if k == "PROMPT":
            return f"PROMPT {p['index']} {p['item']} {p['verb']}"
        if k == "EVT":
            door = "open" if p["door_open"] else "closed"
            violation = "true" if p["violation"] else "false"
            return f"EVT {p['item']} {p['verb']} door={door} violation={violation}"
        if k == "DONE":
            return f"DONE {p['elapsed_ms']} {p['accuracy']:.4f}"
        if k == "ERR":
            return f"ERR {p['code']} {escape_text(p['reason'])}"
        raise WireError(f"unknown message kind {k!r}", reason="unknown-kind")

    def encode_line(self) -> str:
        return self.encode() + "\n"


def _require_token(value: str, what: str) -> str:
    if not _TOKEN_RE.match(value):
        raise WireError(f"{what} must be a single token, got {value!r}", reason="bad-field")
    return value


def _require_item(value: str, what: str) -> str:
    if not _ITEM_RE.match(value):
        raise WireError(f"{what} must look like B_04, got {value!r}", reason="bad-field")
    return value


def parse_wire_line(line: str) -> WireMessage:
    """Parse one line (trailing newline tolerated) into a WireMessage."""
    if len(line.encode("utf-8", errors="replace")) > MAX_LINE_BYTES:
        raise WireError("line exceeds 64 KiB", reason="line-too-long")
    body = line.rstrip("\r\n")
    if not body.strip():
        raise WireError("empty line", reason="empty-line")
    kind, _, rest = body.partition(" ")

    if kind in ("NEXT", "PREV"):
        if rest:
            raise WireError(f"{kind} takes no payload", reason="bad-field")
        return WireMessage(kind)
    if kind == "HELLO":
        return WireMessage(kind, {"role": _require_token(rest, "role")})
    if kind == "TEXT":
        return WireMessage(kind, {"doc_id": _require_token(rest, "doc id")})
    if kind == "CAPTURE":
        if not rest:
            raise WireError("CAPTURE needs an image path", reason="bad-field")
        return WireMessage(kind, {"path": unescape_text(rest)})
    if kind == "ACT":
        return WireMessage(kind, {"item": _require_item(rest, "item")})
    if kind == "STATE":
        if rest not in PHASES:
            raise WireError(f"unknown phase {rest!r}", reason="bad-field")
        return WireMessage(kind, {"phase": rest})
    if kind == "SEQ":
        items = rest.split(",") if rest else []
        if not items:
            raise WireError("SEQ needs at least one item", reason="bad-field")
        for it in items:
            _require_item(it, "sequence item")
        return WireMessage(kind, {"items": items})
    if kind == "PROMPT":
        parts = rest.split(" ")
        if len(parts) != 3:
            raise WireError("PROMPT needs index, item, verb", reason="bad-field")
        idx_s, item, verb = parts
        if not idx_s.isdigit():
            raise WireError(f"prompt index must be a non-negative integer, got {idx_s!r}", reason="bad-field")
        _require_item(item, "item")
        if not _VERB_RE.match(verb):
            raise WireError(f"verb must be lowercase letters, got {verb!r}", reason="bad-field")
        return WireMessage(kind, {"index": int(idx_s), "item": item, "verb": verb})
    if kind == "EVT":
        parts = rest.split(" ")
        if len(parts) != 4:
            raise WireError("EVT needs item, verb, door=, violation=", reason="bad-field")
        item, verb, door_kv, vio_kv = parts
        _require_item(item, "item")
        if not _VERB_RE.match(verb):
            raise WireError(f"verb must be lowercase letters, got {verb!r}", reason="bad-field")
        if door_kv not in ("door=open", "door=closed"):
            raise WireError(f"bad door field {door_kv!r}", reason="bad-field")
        if vio_kv not in ("violation=true", "violation=false"):
            raise WireError(f"bad violation field {vio_kv!r}", reason="bad-field")
        return WireMessage(
            kind,
            {
                "item": item,
                "verb": verb,
                "door_open": door_kv == "door=open",
                "violation": vio_kv == "violation=true",
            },
        )
    if kind == "DONE":
        parts = rest.split(" ")
        if len(parts) != 2:
            raise WireError("DONE needs elapsed-ms and accuracy", reason="bad-field")
        ms_s, acc_s = parts
        if not ms_s.isdigit():
            raise WireError(f"elapsed-ms must be a non-negative integer, got {ms_s!r}", reason="bad-field")
        try:
            acc = float(acc_s)
        except ValueError:
            raise WireError(f"accuracy must be a float, got {acc_s!r}", reason="bad-field") from None
        if not 0.0 <= acc <= 1.0:
            raise WireError(f"accuracy must be within [0,1], got {acc}", reason="bad-field")
        return WireMessage(kind, {"elapsed_ms": int(ms_s), "accuracy": acc})
    if kind == "ERR":
        code_s, _, reason = rest.partition(" ")
        if not code_s.isdigit():
            raise WireError(f"error code must be an integer, got {code_s!r}", reason="bad-field")
        return WireMessage(kind, {"code": int(code_s), "reason": unescape_text(reason)})
    raise WireError(f"unknown message kind {kind!r}", reason="unknown-kind")


# shorthand constructors used by the server

def msg_state(phase_wire: str) -> WireMessage:
    return WireMessage("STATE", {"phase": phase_wire})


def msg_seq(items: list[str]) -> WireMessage:
    return WireMessage("SEQ", {"items": list(items)})


def msg_prompt(index: int, item: str, verb: str) -> WireMessage:
    return WireMessage("PROMPT", {"index": index, "item": item, "verb": verb})


def msg_evt(item: str, verb: str, door_open: bool, violation: bool) -> WireMessage:
    return WireMessage("EVT", {"item": item, "verb": verb, "door_open": door_open, "violation": violation})


def msg_done(elapsed_ms: int, accuracy: float) -> WireMessage:
    return WireMessage("DONE", {"elapsed_ms": elapsed_ms, "accuracy": accuracy})


def msg_err(code: int, reason: str) -> WireMessage:
    return WireMessage("ERR", {"code": code, "reason": reason})
