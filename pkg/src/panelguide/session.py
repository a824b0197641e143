"""Live guidance session: phases, step cursor, door state, event log.

The session records what the operator actually did; it never blocks a
wrong interaction, mirroring an untimed post-hoc scoring protocol. Door
gating is observed, not enforced: acting on an internal item while the door
is closed marks the event as a violation. Completion fires when the number
of executed interactions reaches the sequence length, regardless of
correctness.

All mutations must come from a single writer (the protocol server serializes
them through one command loop per connection); snapshots are safe to read
anywhere. The clock is injectable so replays are deterministic.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, IO

from .commands import CommandSequence
from .errors import PhaseError, SessionError
from .panel import ItemId, PanelSchema, is_internal

IDLE = "idle"
CAPTURING = "capturing"
AWAITING_MODEL = "awaiting_model"
READY = "ready"
RUNNING = "running"
DONE = "done"
FAILED = "failed"

NEXT = "next"
PREV = "prev"

Clock = Callable[[], float]


@dataclass(frozen=True)
class InteractionEvent:
    timestamp: float
    item: ItemId
    verb: str
    door_state_at_event: bool
    gating_violation: bool


@dataclass(frozen=True)
class StepPrompt:
    index: int
    item: ItemId
    verb: str


class CountingClock:
    """Deterministic clock: starts at ``start`` and advances ``step`` per call."""

    def __init__(self, start: float = 0.0, step: float = 0.001):
        self.t = start
        self.step = step

    def __call__(self) -> float:
        t = self.t
        self.t += self.step
        return t


class SessionLog:
    """Append-only JSONL sink for one session."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: IO[str] = self.path.open("w", encoding="utf-8")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class GuidanceSession:
    """State machine for one operator working one task."""

    def __init__(
        self,
        schema: PanelSchema,
        session_id: str = "session",
        clock: Clock | None = None,
        log: SessionLog | None = None,
    ):
        self.schema = schema
        self.session_id = session_id
        self.clock = clock or time.monotonic
        self.log = log
        self.phase = IDLE
        self.sequence: CommandSequence | None = None
        self.cursor = 0
        self.door_open = False
        self.events: list[InteractionEvent] = []
        self.t0: float | None = None
        self.t_end: float | None = None
        self._last_ts = float("-inf")
        self._log_phase(IDLE)

    # timestamps must be strictly increasing even under a frozen clock
    def _now(self) -> float:
        t = self.clock()
        if t <= self._last_ts:
            t = self._last_ts + 1e-6
        self._last_ts = t
        return t

    def _log_phase(self, phase: str, ts: float | None = None) -> None:
        if self.log:
            self.log.write(
                {"rec": "phase", "session": self.session_id, "ts": ts if ts is not None else self._now(), "phase": phase}
            )

    def _require(self, *phases: str) -> None:
        if self.phase not in phases:
            raise PhaseError(
                f"operation requires phase {'/'.join(phases)}, session is {self.phase}", reason="wrong-phase"
            )

    def begin_capture(self) -> None:
        """Start the task clock; all completion-time measurement begins here."""
        self._require(IDLE)
        self.t0 = self._now()
        self.phase = CAPTURING
        self._log_phase(CAPTURING, ts=self.t0)

    def mark_awaiting(self) -> None:
        self._require(CAPTURING)
        self.phase = AWAITING_MODEL
        self._log_phase(AWAITING_MODEL)

    def fail(self, reason: str) -> None:
        self._require(CAPTURING, AWAITING_MODEL)
        self.phase = FAILED
        if self.log:
            self.log.write({"rec": "phase", "session": self.session_id, "ts": self._now(), "phase": FAILED, "reason": reason})

    def log_reply(self, text: str, backend: str) -> None:
        """Record the raw model reply before any parsing touches it.

        Wall-clock latency is deliberately absent: the record's ts comes from
        the session clock, keeping logs reproducible under an injected clock.
        """
        if self.log:
            self.log.write(
                {
                    "rec": "reply",
                    "session": self.session_id,
                    "ts": self._now(),
                    "backend": backend,
                    "text": text,
                }
            )

    def install_sequence(self, seq: CommandSequence) -> None:
        """Accept the compiled commands; door is assumed closed at start."""
        self._require(AWAITING_MODEL)
        if len(seq) == 0:
            raise SessionError("cannot install an empty sequence", reason="empty-sequence")
        self.sequence = seq
        self.cursor = 0
        self.door_open = False
        self.phase = READY
        if self.log:
            self.log.write(
                {
                    "rec": "sequence",
                    "session": self.session_id,
                    "ts": self._now(),
                    "items": [str(i) for i in seq.items()],
                    "source_doc": seq.source_doc,
                }
            )
        self._log_phase(READY)

    def current_prompt(self) -> StepPrompt:
        self._require(READY, RUNNING)
        assert self.sequence is not None
        item, verb = self.sequence.steps[self.cursor]
        return StepPrompt(index=self.cursor, item=item, verb=verb)

    def advance(self, direction: str) -> StepPrompt:
        """Move the cursor one step (clamped) and return the prompt there."""
        self._require(READY, RUNNING)
        assert self.sequence is not None
        if direction not in (NEXT, PREV):
            raise ValueError(f"direction must be next/prev, got {direction!r}")
        delta = 1 if direction == NEXT else -1
        self.cursor = max(0, min(len(self.sequence) - 1, self.cursor + delta))
        if self.phase == READY and direction == NEXT:
            self.phase = RUNNING
            self._log_phase(RUNNING)
        return self.current_prompt()

    def act(self, item: ItemId) -> InteractionEvent:
        """Record one physical interaction; completion is count-based."""
        self._require(READY, RUNNING)
        assert self.sequence is not None
        if not self.schema.is_valid_item(item):
            raise SessionError(f"unknown item {item}", reason="unknown-item")
        if not self.schema.is_interactable(item):
            raise SessionError(f"{item} is display-only and cannot be operated", reason="non-interactable")
        if self.phase == READY:
            self.phase = RUNNING
            self._log_phase(RUNNING)
        violation = is_internal(item, self.schema) and not self.door_open
        event = InteractionEvent(
            timestamp=self._now(),
            item=item,
            verb=item.verb,
            door_state_at_event=self.door_open,
            gating_violation=violation,
        )
        self.events.append(event)
        if self.log:
            self.log.write(
                {
                    "rec": "event",
                    "session": self.session_id,
                    "ts": event.timestamp,
                    "item": str(item),
                    "verb": event.verb,
                    "door_open": event.door_state_at_event,
                    "violation": event.gating_violation,
                }
            )
        # door toggles after the event so the record shows the state acted under
        if item == self.schema.door_item:
            self.door_open = not self.door_open
        if len(self.events) == len(self.sequence):
            self.phase = DONE
            self.t_end = event.timestamp
            self._log_phase(DONE, ts=self.t_end)
        return event

    def elapsed_ms(self) -> float:
        """Capture-to-last-interaction duration, milliseconds."""
        self._require(DONE)
        assert self.t0 is not None and self.t_end is not None
        return (self.t_end - self.t0) * 1000.0

    def executed_items(self) -> list[ItemId]:
        return [e.item for e in self.events]
