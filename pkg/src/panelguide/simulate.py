"""Scripted operator: drives full sessions through the wire protocol.

The simulator stands in for a human subject at desk scale. It submits an
instruction fixture, waits out the model round trip, then works the prompts
one by one, acting on the prompted item or, with the profile's error rate,
on a deliberately wrong one. Identical seed, profile, and task produce an
identical event stream; think times only stretch wall-clock timing.
"""

from __future__ import annotations

import json
import random
import socket
import time
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import GuidanceError
from .panel import ItemId, PanelSchema
from .wire import WireMessage, parse_wire_line

RANDOM_VALID = "random-valid"
NEIGHBOR_INDEX = "neighbor-index"


@dataclass(frozen=True)
class OperatorProfile:
    error_rate: float = 0.0
    wrong_item_policy: str = RANDOM_VALID
    think_time_ms: tuple[int, int] = (0, 0)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error_rate must lie in [0,1]")
        if self.wrong_item_policy not in (RANDOM_VALID, NEIGHBOR_INDEX):
            raise ValueError(f"unknown wrong-item policy {self.wrong_item_policy!r}")
        lo, hi = self.think_time_ms
        if lo < 0 or hi < lo:
            raise ValueError("think_time_ms must be a (lo, hi) range with 0 <= lo <= hi")

    @classmethod
    def from_dict(cls, d: dict) -> "OperatorProfile":
        return cls(
            error_rate=float(d.get("error_rate", 0.0)),
            wrong_item_policy=d.get("wrong_item_policy", RANDOM_VALID),
            think_time_ms=tuple(d.get("think_time_ms", (0, 0))),  # type: ignore[arg-type]
            seed=int(d.get("seed", 0)),
        )


class LineClient:
    """Blocking newline-framed client for the wire protocol."""

    def __init__(self, host: str, port: int, timeout_s: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout_s)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._rfile = self.sock.makefile("rb")

    def send(self, line: str) -> None:
        self.sock.sendall((line + "\n").encode("utf-8"))

    def recv(self) -> WireMessage:
        raw = self._rfile.readline()
        if not raw:
            raise GuidanceError("server closed the connection", reason="disconnected")
        return parse_wire_line(raw.decode("utf-8"))

    def recv_until(self, *kinds: str) -> list[WireMessage]:
        """Read messages until one of ``kinds`` arrives; ERR raises."""
        seen = []
        while True:
            msg = self.recv()
            seen.append(msg)
            if msg.kind == "ERR":
                raise GuidanceError(f"server error {msg.payload['code']}: {msg.payload['reason']}", reason="protocol")
            if msg.kind in kinds:
                return seen

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


@dataclass(frozen=True)
class SessionRunResult:
    log_path: Path
    elapsed_ms: int
    accuracy: float
    items_acted: tuple[str, ...]


def _wrong_item(rng: random.Random, prompted: ItemId, schema: PanelSchema, policy: str) -> ItemId:
    candidates = [i for i in schema.items(interactable_only=True) if i != prompted]
    if not candidates:
        return prompted
    if policy == NEIGHBOR_INDEX:
        count = schema.category_count(prompted.category)
        step = rng.choice((-1, 1))
        for delta in (step, -step):
            neighbor = ItemId(prompted.category, prompted.index + delta)
            if 0 <= neighbor.index < count and schema.is_interactable(neighbor):
                return neighbor
        # category has no usable neighbor; fall through to random-valid
    return rng.choice(candidates)


def run_session(
    profile: OperatorProfile,
    host: str,
    port: int,
    fixture_id: str,
    schema: PanelSchema,
    log_dir: str | Path,
    client_id: str | None = None,
    timeout_s: float = 30.0,
) -> SessionRunResult:
    """Drive one full session; returns the server-side log path and outcome.

    The server must be running with a scripted backend that knows the
    fixture, and ``log_dir`` must be the directory the server writes to.
    """
    rng = random.Random(profile.seed)
    cid = client_id or f"sim-{fixture_id}-{profile.seed}"
    client = LineClient(host, port, timeout_s=timeout_s)
    acted: list[str] = []
    try:
        client.send(f"HELLO {cid}")
        client.recv_until("STATE")  # IDLE
        client.send(f"TEXT {fixture_id}")
        msgs = client.recv_until("PROMPT")  # AWAITING_GPT ... SEQ, READY, PROMPT 0
        seq_msg = next(m for m in msgs if m.kind == "SEQ")
        n_steps = len(seq_msg.payload["items"])
        prompt = msgs[-1]

        done: WireMessage | None = None
        for step in range(n_steps):
            lo, hi = profile.think_time_ms
            if hi > 0:
                time.sleep(rng.uniform(lo, hi) / 1000.0)
            prompted = ItemId(prompt.payload["item"][0], int(prompt.payload["item"][2:]))
            target = prompted
            if profile.error_rate > 0 and rng.random() < profile.error_rate:
                target = _wrong_item(rng, prompted, schema, profile.wrong_item_policy)
            client.send(f"ACT {target}")
            acted.append(str(target))
            client.recv_until("EVT")
            if step == n_steps - 1:
                done = client.recv_until("DONE")[-1]
            else:
                client.send("NEXT")
                prompt = client.recv_until("PROMPT")[-1]
        assert done is not None
    finally:
        client.close()
    return SessionRunResult(
        log_path=Path(log_dir) / f"{cid}.jsonl",
        elapsed_ms=done.payload["elapsed_ms"],
        accuracy=done.payload["accuracy"],
        items_acted=tuple(acted),
    )


@dataclass(frozen=True)
class ExperimentSamples:
    """Per-subject paired outcomes for the two conditions."""

    times: "PairedSamples"
    accuracies: "PairedSamples"
    log_paths: tuple[Path, ...]


def derive_seed(base_seed: int, subject: int, condition: int) -> int:
    return base_seed * 1_000_003 + subject * 2 + condition


def run_paired_experiment(
    profile_a: OperatorProfile,
    profile_b: OperatorProfile,
    n_subjects: int,
    fixture_a: str,
    fixture_b: str,
    host: str,
    port: int,
    schema: PanelSchema,
    log_dir: str | Path,
    base_seed: int = 0,
    label_a: str = "condition_a",
    label_b: str = "condition_b",
) -> ExperimentSamples:
    """Run one session per condition for each simulated subject.

    Per-session seeds derive from (base seed, subject, condition) so the two
    conditions draw independent randomness even with identical profiles.
    Any session failure aborts with the failing subject in the message.
    """
    from .analytics import PairedSamples

    time_pairs = []
    acc_pairs = []
    paths = []
    for subject in range(n_subjects):
        outcomes = []
        for cond, (profile, fixture) in enumerate(((profile_a, fixture_a), (profile_b, fixture_b))):
            seeded = replace(profile, seed=derive_seed(base_seed, subject, cond))
            cid = f"subj{subject:02d}-{'ab'[cond]}-{fixture}"
            try:
                outcome = run_session(seeded, host, port, fixture, schema, log_dir, client_id=cid)
            except GuidanceError as exc:
                raise GuidanceError(
                    f"subject {subject} condition {'ab'[cond]} failed: {exc}", reason="experiment-aborted"
                ) from exc
            outcomes.append(outcome)
            paths.append(outcome.log_path)
        time_pairs.append((outcomes[0].elapsed_ms / 1000.0, outcomes[1].elapsed_ms / 1000.0))
        acc_pairs.append((outcomes[0].accuracy, outcomes[1].accuracy))
    return ExperimentSamples(
        times=PairedSamples(label_a=label_a, label_b=label_b, pairs=tuple(time_pairs)),
        accuracies=PairedSamples(label_a=label_a, label_b=label_b, pairs=tuple(acc_pairs)),
        log_paths=tuple(paths),
    )


def load_profile_file(path: str | Path) -> dict:
    """Profile file: either a flat profile or {"a": {...}, "b": {...}} blocks."""
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
