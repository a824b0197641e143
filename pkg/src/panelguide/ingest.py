"""Instruction acquisition: plain text, files, or an external OCR service.

Whatever the source, the result is a normalized :class:`InstructionDocument`
whose text has single-space separators and a word count. The OCR path is a
thin client for an async read-operation API (submit image, poll an operation
URL, collect recognized lines); a scripted implementation stands in for the
service in tests.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import IngestError

TEXT_FILE = "text-file"
OCR_SERVICE = "ocr-service"
INLINE = "inline"


@dataclass(frozen=True)
class InstructionDocument:
    id: str
    text: str
    source: str
    word_count: int


def ingest_text(raw: str, id: str, source: str = INLINE) -> InstructionDocument:
    """Normalize raw instruction text.

    Runs of whitespace collapse to single spaces and the ends are trimmed;
    word order is preserved. Raises :class:`IngestError` if nothing remains.
    """
    words = raw.split()
    if not words:
        raise IngestError(f"instruction {id!r} is empty after normalization", reason="empty-document")
    text = " ".join(words)
    return InstructionDocument(id=id, text=text, source=source, word_count=len(words))


def ingest_file(path: str | Path, id: str | None = None) -> InstructionDocument:
    p = Path(path)
    try:
        raw = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read instruction file {p}: {exc}", reason="unreadable-file") from exc
    return ingest_text(raw, id=id or p.stem, source=TEXT_FILE)


class ScriptedOcr:
    """Test double: returns a pre-scripted line list for any image."""

    def __init__(self, lines: list[str]):
        self.lines = list(lines)
        self.calls = 0

    def recognize(self, image: bytes) -> list[str]:
        self.calls += 1
        return list(self.lines)


class HttpOcrClient:
    """Client for an async read-operation OCR endpoint.

    Contract: POST the image bytes to ``endpoint`` with the credential
    header; the response carries the operation URL (``Operation-Location``
    header or ``operationLocation`` JSON field); poll that URL until the
    payload reports ``status`` of ``succeeded`` or ``failed``; recognized
    lines arrive in the ``lines`` field, top to bottom.
    """

    def __init__(
        self,
        endpoint: str,
        key: str,
        poll_interval_s: float = 0.5,
        timeout_s: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.key = key
        self.poll_interval_s = poll_interval_s
        self.timeout_s = timeout_s
        self._http = session or requests.Session()

    def recognize(self, image: bytes) -> list[str]:
        headers = {"Ocp-Apim-Subscription-Key": self.key, "Content-Type": "application/octet-stream"}
        deadline = time.monotonic() + self.timeout_s
        try:
            resp = self._http.post(self.endpoint, data=image, headers=headers, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise IngestError(f"OCR submit failed: {exc}", reason="ocr-transport") from exc
        if resp.status_code >= 400:
            raise IngestError(f"OCR submit rejected: HTTP {resp.status_code}", reason="ocr-transport")
        op_url = resp.headers.get("Operation-Location")
        if not op_url:
            try:
                op_url = resp.json().get("operationLocation")
            except ValueError:
                op_url = None
        if not op_url:
            raise IngestError("OCR submit returned no operation URL", reason="ocr-transport")

        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise IngestError(f"OCR polling exceeded {self.timeout_s}s", reason="ocr-timeout")
            try:
                poll = self._http.get(op_url, headers={"Ocp-Apim-Subscription-Key": self.key}, timeout=remaining)
                payload = poll.json()
            except requests.RequestException as exc:
                raise IngestError(f"OCR poll failed: {exc}", reason="ocr-transport") from exc
            except ValueError as exc:
                raise IngestError("OCR poll returned non-JSON payload", reason="ocr-transport") from exc
            status = payload.get("status")
            if status == "succeeded":
                lines = payload.get("lines", [])
                if not isinstance(lines, list) or not all(isinstance(x, str) for x in lines):
                    raise IngestError("OCR result lines malformed", reason="ocr-transport")
                return lines
            if status == "failed":
                raise IngestError("OCR job reported failure", reason="ocr-job-failed")
            time.sleep(min(self.poll_interval_s, max(deadline - time.monotonic(), 0)))


def ingest_image(image: bytes, ocr, id: str | None = None, min_words: int = 1) -> InstructionDocument:
    """Recognize an instruction photo and normalize the result.

    Lines are concatenated top-to-bottom in recognition order. Recognitions
    with fewer than ``min_words`` words are treated as empty.
    """
    lines = ocr.recognize(image)
    if not lines:
        raise IngestError("OCR recognized no text", reason="ocr-empty")
    doc_id = id or hashlib.sha256(image).hexdigest()[:12]
    raw = "\n".join(lines)
    if len(raw.split()) < min_words:
        raise IngestError(
            f"OCR result below minimum word count ({len(raw.split())} < {min_words})",
            reason="ocr-empty",
        )
    return ingest_text(raw, id=doc_id, source=OCR_SERVICE)
