"""Session scoring and paired-condition significance testing.

Accuracy is 1 minus normalized Levenshtein distance between item sequences,
which handles substitutions, omissions, and extra actions alike and reduces
to per-position match rate for equal lengths. Condition comparisons use the
Wilcoxon signed-rank test with average ranks on ties, zeros dropped, an
exact two-sided p for small samples (value-identical to enumerating every
sign assignment) and a tie-corrected, continuity-corrected normal
approximation above that.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .commands import CommandSequence
from .errors import LogError
from .panel import ItemId

EXACT = "exact"
NORMAL_APPROXIMATION = "normal-approximation"

EXACT_LIMIT = 20  # largest n_effective evaluated against the exact null distribution


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance with unit-cost insert/delete/substitute (two-row DP)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, x in enumerate(a, 1):
        cur[0] = i
        for j, y in enumerate(b, 1):
            cur[j] = prev[j - 1] if x == y else min(prev[j], prev[j - 1], cur[j - 1]) + 1
        prev, cur = cur, prev
    return prev[len(b)]


def sequence_accuracy(executed: Sequence[ItemId], correct: CommandSequence) -> float:
    """1 - normalized edit distance between executed items and the target."""
    target = correct.items()
    if not target:
        raise ValueError("correct sequence must be non-empty")
    if not executed:
        return 0.0
    dist = levenshtein(list(executed), target)
    return 1.0 - dist / max(len(executed), len(target))


def parse_accuracy(parsed: CommandSequence, ground_truth: CommandSequence) -> float:
    """Same metric applied to the model-derived sequence vs ground truth."""
    return sequence_accuracy(parsed.items(), ground_truth)


@dataclass(frozen=True)
class MetricsReport:
    completion_time_s: float
    accuracy: float
    gating_violations: int
    parse_accuracy: float | None = None

    def to_dict(self) -> dict:
        out = {
            "completion_time_s": self.completion_time_s,
            "accuracy": self.accuracy,
            "gating_violations": self.gating_violations,
        }
        if self.parse_accuracy is not None:
            out["parse_accuracy"] = self.parse_accuracy
        return out


@dataclass(frozen=True)
class PairedSamples:
    label_a: str
    label_b: str
    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.pairs) < 1:
            raise ValueError("paired samples need at least one pair")

    @classmethod
    def from_csv(cls, path: str | Path, label_a: str = "condition_a", label_b: str = "condition_b") -> "PairedSamples":
        """Read rows of ``subject,condition_a,condition_b``."""
        pairs = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"subject", "condition_a", "condition_b"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"CSV must have header subject,condition_a,condition_b, got {reader.fieldnames}")
            for row in reader:
                pairs.append((float(row["condition_a"]), float(row["condition_b"])))
        return cls(label_a=label_a, label_b=label_b, pairs=tuple(pairs))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["subject", "condition_a", "condition_b"])
            for i, (a, b) in enumerate(self.pairs):
                writer.writerow([i, a, b])


@dataclass(frozen=True)
class WilcoxonResult:
    n_effective: int
    w_statistic: float  # sum of positive signed ranks
    p_two_sided: float
    method: str


def _exact_two_sided_p(doubled_ranks: list[int], w_doubled: int) -> float:
    """P(|W' - mu| >= |W - mu|) over all sign assignments of the given ranks.

    Ranks are pre-doubled so average ranks on ties become integers; the
    count distribution is built by dynamic programming, which gives the same
    value as enumerating all 2^n assignments.
    """
    total = sum(doubled_ranks)
    counts = np.zeros(total + 1, dtype=np.uint64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    # work in quarter-rank units so the distance to the mean is integral
    dev = np.abs(2 * np.arange(total + 1, dtype=np.int64) - total)
    w_dev = abs(2 * w_doubled - total)
    extreme = counts[dev >= w_dev].sum()
    return float(extreme) / float(2 ** len(doubled_ranks))


def wilcoxon_signed_rank(samples: PairedSamples, method: str | None = None) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Differences a-b; zero differences are dropped; |differences| are ranked
    with average ranks on ties. W is the sum of ranks carrying positive
    sign. For n_effective <= 20 the p-value is exact; above that a normal
    approximation with tie-corrected variance and continuity correction is
    used. ``method`` forces one computation regardless of sample size.
    """
    diffs = [a - b for a, b in samples.pairs]
    nonzero = [d for d in diffs if d != 0]
    n = len(nonzero)
    if n == 0:
        return WilcoxonResult(n_effective=0, w_statistic=0.0, p_two_sided=1.0, method=EXACT)

    abs_d = np.abs(np.array(nonzero, dtype=float))
    ranks = stats.rankdata(abs_d)
    w = float(ranks[np.array(nonzero) > 0].sum())
    mu = n * (n + 1) / 4.0

    use_exact = (n <= EXACT_LIMIT) if method is None else (method == EXACT)
    if use_exact:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_two_sided_p(doubled, int(round(2 * w)))
        return WilcoxonResult(n_effective=n, w_statistic=w, p_two_sided=p, method=EXACT)

    # tie correction: subtract sum(t^3 - t)/48 over groups of tied |d|
    _, tie_counts = np.unique(abs_d, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(((tie_counts**3 - tie_counts).sum())) / 48.0
    if var <= 0:
        return WilcoxonResult(n_effective=n, w_statistic=w, p_two_sided=1.0, method=NORMAL_APPROXIMATION)
    cc = 0.5 * math.copysign(1.0, w - mu) if w != mu else 0.0
    z = (w - mu - cc) / math.sqrt(var)
    p = min(1.0, 2.0 * stats.norm.sf(abs(z)))
    return WilcoxonResult(n_effective=n, w_statistic=w, p_two_sided=p, method=NORMAL_APPROXIMATION)


def read_session_log(path: str | Path) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise LogError(f"{path}:{lineno}: bad JSONL record: {exc}", reason="bad-log") from exc
    except OSError as exc:
        raise LogError(f"cannot read session log {path}: {exc}", reason="bad-log") from exc
    return records


def score_session(log_path: str | Path, correct: CommandSequence) -> MetricsReport:
    """Score one persisted session log against the correct sequence.

    Requires a capture record (phase=capturing) and a done record; extracts
    executed items in event order, violation count, completion time, and,
    when the log stored the parsed sequence, the model's parse accuracy.
    """
    records = read_session_log(log_path)
    t_capture = None
    t_done = None
    executed: list[ItemId] = []
    violations = 0
    parsed_items: list[str] | None = None
    for rec in records:
        kind = rec.get("rec")
        if kind == "phase":
            if rec.get("phase") == "capturing" and t_capture is None:
                t_capture = float(rec["ts"])
            elif rec.get("phase") == "done":
                t_done = float(rec["ts"])
        elif kind == "event":
            item = rec["item"]
            executed.append(ItemId(item[0], int(item[2:])))
            if rec.get("violation"):
                violations += 1
        elif kind == "sequence":
            parsed_items = list(rec.get("items", []))
    if t_capture is None:
        raise LogError(f"{log_path}: no capture record", reason="incomplete-log")
    if t_done is None:
        raise LogError(f"{log_path}: no done record", reason="incomplete-log")

    pa = None
    if parsed_items:
        parsed_ids = [ItemId(t[0], int(t[2:])) for t in parsed_items]
        pa = 1.0 - levenshtein(parsed_ids, correct.items()) / max(len(parsed_ids), len(correct))
    return MetricsReport(
        completion_time_s=(t_done - t_capture),
        accuracy=sequence_accuracy(executed, correct),
        gating_violations=violations,
        parse_accuracy=pa,
    )
