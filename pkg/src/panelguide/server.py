"""Loopback protocol server: one guidance session per connection.

Transports: newline-framed TCP on the configured port, the identical
message grammar over WebSocket text frames on port+1 (for browsers), and a
small static HTTP endpoint on port+2 that exposes the loaded schema, the
fixture corpus listing, and optionally the operator-console assets.

Each connection runs a reader thread and a session command loop; the
instruction pipeline (ingest -> assemble -> complete -> parse) runs in a
worker thread and posts its outcome back onto the loop, so session state
only ever has one writer. A malformed line yields an ERR reply, never a
crash.
"""

from __future__ import annotations

import json
import logging
import queue
import re
import socket
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable

from . import websocket
from .analytics import sequence_accuracy
from .commands import STRICT, parse_reply
from .errors import GuidanceError, ItemError, PhaseError, SessionError, WireError
from .gateway import CompletionRequest, complete
from .ingest import ingest_file, ingest_image
from .panel import PanelSchema, parse_item_id
from .prompts import PromptTemplates, build_bundle, load_templates
from .session import (
    AWAITING_MODEL,
    CAPTURING,
    DONE,
    FAILED,
    GuidanceSession,
    IDLE,
    NEXT,
    PREV,
    READY,
    RUNNING,
    SessionLog,
)
from .wire import (
    MAX_LINE_BYTES,
    WireMessage,
    msg_done,
    msg_err,
    msg_evt,
    msg_prompt,
    msg_seq,
    msg_state,
    parse_wire_line,
)

logger = logging.getLogger(__name__)

PHASE_WIRE = {
    IDLE: "IDLE",
    CAPTURING: "CAPTURING",
    AWAITING_MODEL: "AWAITING_GPT",
    READY: "READY",
    RUNNING: "RUNNING",
    DONE: "DONE",
    FAILED: "FAILED",
}

_DOC_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

_TOO_LONG = object()  # reader sentinel for an over-limit line


@dataclass
class ServerConfig:
    schema: PanelSchema
    backend: object  # gateway backend: .complete(req) + .kind
    fixtures_dir: Path
    log_dir: Path
    host: str = "127.0.0.1"
    port: int = 9000
    templates: PromptTemplates | None = None
    ocr: object | None = None  # OCR client for CAPTURE; None disables it
    clock_factory: Callable[[], Callable[[], float]] | None = None  # per-session clock
    console_dir: Path | None = None
    enable_ws: bool = True
    enable_http: bool = True


class _TcpTransport:
    """Newline-framed lines over a TCP socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._rfile = sock.makefile("rb")

    def recv_line(self):
        try:
            line = self._rfile.readline(MAX_LINE_BYTES + 1)
        except OSError:
            return None
        if not line:
            return None
        if len(line) > MAX_LINE_BYTES and not line.endswith(b"\n"):
            # discard the rest of the oversize line, then report it
            while True:
                try:
                    chunk = self._rfile.readline(MAX_LINE_BYTES)
                except OSError:
                    return None
                if not chunk or chunk.endswith(b"\n"):
                    break
            return _TOO_LONG
        return line.decode("utf-8", errors="replace")

    def send_line(self, line: str) -> None:
        self.sock.sendall((line + "\n").encode("utf-8"))

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class _WsTransport:
    """The same line grammar carried one-message-per-frame."""

    def __init__(self, conn: websocket.WebSocketConnection):
        self.conn = conn

    def recv_line(self):
        text = self.conn.recv_text()
        if text is None:
            return None
        if len(text.encode("utf-8")) > MAX_LINE_BYTES:
            return _TOO_LONG
        return text

    def send_line(self, line: str) -> None:
        self.conn.send_text(line)

    def close(self) -> None:
        self.conn.close()


class _Connection:
    """Reader + serialized command loop for one client."""

    def __init__(self, server: "GuidanceServer", transport, conn_no: int):
        self.server = server
        self.transport = transport
        self.conn_no = conn_no
        self.queue: queue.Queue = queue.Queue()
        cfg = server.config
        clock = cfg.clock_factory() if cfg.clock_factory else None
        self.session = GuidanceSession(cfg.schema, session_id=f"anon-{conn_no:03d}", clock=clock)
        self.closed = False

    # ---- plumbing ----

    def run(self) -> None:
        reader = threading.Thread(target=self._read_loop, daemon=True, name=f"pg-read-{self.conn_no}")
        reader.start()
        try:
            self._command_loop()
        finally:
            self.closed = True
            if self.session.log:
                self.session.log.close()
            self.transport.close()

    def _read_loop(self) -> None:
        while True:
            line = self.transport.recv_line()
            if line is None:
                self.queue.put(("eof",))
                return
            self.queue.put(("line", line))

    def _send(self, msg: WireMessage) -> None:
        try:
            self.transport.send_line(msg.encode())
        except OSError:
            self.closed = True

    def _command_loop(self) -> None:
        while not self.closed:
            cmd = self.queue.get()
            kind = cmd[0]
            if kind == "eof":
                return
            if kind == "line":
                self._handle_line(cmd[1])
            elif kind == "ocr-done":
                self._handle_ocr_done()
            elif kind == "pipeline-ok":
                self._handle_pipeline_ok(*cmd[1:])
            elif kind == "pipeline-err":
                self._handle_pipeline_err(*cmd[1:])

    # ---- command handling ----

    def _handle_line(self, line) -> None:
        if line is _TOO_LONG:
            self._send(msg_err(400, "line-too-long"))
            return
        try:
            msg = parse_wire_line(line)
        except WireError as exc:
            self._send(msg_err(400, exc.reason))
            return
        try:
            handler = getattr(self, f"_on_{msg.kind.lower()}", None)
            if handler is None:
                self._send(msg_err(400, "not-a-client-message"))
                return
            handler(msg)
        except PhaseError:
            self._send(msg_err(409, "wrong-phase"))
        except (ItemError, SessionError) as exc:
            self._send(msg_err(400, exc.reason))
        except GuidanceError as exc:
            self._send(msg_err(502, exc.reason))

    def _on_hello(self, msg: WireMessage) -> None:
        if self.session.phase != IDLE or self.session.log is not None:
            raise PhaseError("HELLO only before capture", reason="wrong-phase")
        role = re.sub(r"[^A-Za-z0-9._-]", "_", msg.payload["role"])[:80] or "client"
        self.session.session_id = role
        self._attach_log()
        self._send(msg_state(PHASE_WIRE[self.session.phase]))

    def _attach_log(self) -> None:
        log = SessionLog(self.server.config.log_dir / f"{self.session.session_id}.jsonl")
        self.session.log = log
        log.write({"rec": "phase", "session": self.session.session_id, "ts": self.session._now(), "phase": IDLE})

    def _on_text(self, msg: WireMessage) -> None:
        doc_id = msg.payload["doc_id"]
        if not _DOC_ID_RE.match(doc_id) or ".." in doc_id:
            self._send(msg_err(400, "bad-doc-id"))
            return
        if self.session.log is None:
            self._attach_log()
        self.session.begin_capture()
        self.session.mark_awaiting()
        self._send(msg_state("AWAITING_GPT"))
        self._spawn_pipeline("text", doc_id)

    def _on_capture(self, msg: WireMessage) -> None:
        if self.server.config.ocr is None:
            self._send(msg_err(502, "ingest:ocr-not-configured"))
            return
        if self.session.log is None:
            self._attach_log()
        self.session.begin_capture()
        self._send(msg_state("CAPTURING"))
        self._spawn_pipeline("image", msg.payload["path"])

    def _on_next(self, msg: WireMessage) -> None:
        prompt = self.session.advance(NEXT)
        self._send(msg_prompt(prompt.index, str(prompt.item), prompt.verb))

    def _on_prev(self, msg: WireMessage) -> None:
        prompt = self.session.advance(PREV)
        self._send(msg_prompt(prompt.index, str(prompt.item), prompt.verb))

    def _on_act(self, msg: WireMessage) -> None:
        item = parse_item_id(msg.payload["item"], self.server.config.schema)
        event = self.session.act(item)
        self._send(msg_evt(str(event.item), event.verb, event.door_state_at_event, event.gating_violation))
        if self.session.phase == DONE:
            assert self.session.sequence is not None
            accuracy = sequence_accuracy(self.session.executed_items(), self.session.sequence)
            self._send(msg_done(int(round(self.session.elapsed_ms())), accuracy))

    # ---- pipeline ----

    def _spawn_pipeline(self, source: str, ref: str) -> None:
        worker = threading.Thread(
            target=self._pipeline_worker, args=(source, ref), daemon=True, name=f"pg-pipe-{self.conn_no}"
        )
        worker.start()

    def _pipeline_worker(self, source: str, ref: str) -> None:
        cfg = self.server.config
        stage = "ingest"
        try:
            if source == "text":
                doc = ingest_file(cfg.fixtures_dir / f"{ref}.txt")
            else:
                image = Path(ref).read_bytes()
                doc = ingest_image(image, cfg.ocr, id=Path(ref).stem)
                self.queue.put(("ocr-done",))
            stage = "assemble"
            bundle = build_bundle(cfg.schema, doc, cfg.templates)
            stage = "gateway"
            result = complete(CompletionRequest(prompt=bundle.render(), fixture_id=doc.id), cfg.backend)
            stage = "parse"
            seq, report = parse_reply(result.text, cfg.schema, STRICT, source_doc=doc.id)
            self.queue.put(("pipeline-ok", result, seq))
        except OSError as exc:
            self.queue.put(("pipeline-err", stage, GuidanceError(str(exc), reason="unreadable-file")))
        except GuidanceError as exc:
            self.queue.put(("pipeline-err", stage, exc))

    def _handle_ocr_done(self) -> None:
        if self.session.phase == CAPTURING:
            self.session.mark_awaiting()
            self._send(msg_state("AWAITING_GPT"))

    def _handle_pipeline_ok(self, result, seq) -> None:
        if self.session.phase != AWAITING_MODEL:
            return  # client vanished or already failed
        self.session.log_reply(result.text, result.backend)
        self.session.install_sequence(seq)
        self._send(msg_seq([str(i) for i in seq.items()]))
        self._send(msg_state("READY"))
        prompt = self.session.current_prompt()
        self._send(msg_prompt(prompt.index, str(prompt.item), prompt.verb))

    def _handle_pipeline_err(self, stage: str, exc: GuidanceError) -> None:
        if self.session.phase in (CAPTURING, AWAITING_MODEL):
            self.session.fail(f"{stage}:{exc.reason}")
        self._send(msg_err(502, f"{stage}:{exc.reason}"))
        self._send(msg_state("FAILED"))


class _StaticHandler(BaseHTTPRequestHandler):
    server_version = "panelguide/0.1"

    def log_message(self, fmt, *args):  # quiet by default
        logger.debug("http: " + fmt, *args)

    def do_GET(self):
        cfg: ServerConfig = self.server.pg_config  # type: ignore[attr-defined]
        path = self.path.split("?", 1)[0]
        if path == "/schema.json":
            body = json.dumps(self.server.pg_schema_doc).encode("utf-8")  # type: ignore[attr-defined]
            self._reply(200, "application/json", body)
            return
        if path == "/fixtures.json":
            ids = sorted(p.stem for p in cfg.fixtures_dir.glob("*.txt") if not p.stem.endswith(".reply"))
            self._reply(200, "application/json", json.dumps(ids).encode("utf-8"))
            return
        if cfg.console_dir is not None:
            rel = path.lstrip("/") or "index.html"
            target = (cfg.console_dir / rel).resolve()
            if str(target).startswith(str(cfg.console_dir.resolve())) and target.is_file():
                ctype = {
                    ".html": "text/html",
                    ".js": "text/javascript",
                    ".css": "text/css",
                    ".json": "application/json",
                }.get(target.suffix, "application/octet-stream")
                self._reply(200, ctype, target.read_bytes())
                return
        self._reply(404, "text/plain", b"not found")

    def _reply(self, code: int, ctype: str, body: bytes) -> None:
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)


class GuidanceServer:
    """Owns the listeners; sessions share nothing but the immutable schema."""

    def __init__(self, config: ServerConfig):
        if config.templates is None:
            config.templates = load_templates()
        self.config = config
        self._tcp_sock: socket.socket | None = None
        self._ws_sock: socket.socket | None = None
        self._http: ThreadingHTTPServer | None = None
        self._threads: list[threading.Thread] = []
        self._conn_count = 0
        self._conn_lock = threading.Lock()
        self._stopping = False
        self.tcp_port = config.port
        self.ws_port = config.port + 1
        self.http_port = config.port + 2

    def start(self) -> None:
        cfg = self.config
        cfg.log_dir.mkdir(parents=True, exist_ok=True)
        self._tcp_sock = self._listen(cfg.host, cfg.port)
        self.tcp_port = self._tcp_sock.getsockname()[1]
        self._spawn(self._accept_tcp, "pg-accept-tcp")
        if cfg.enable_ws:
            self._ws_sock = self._listen(cfg.host, self.tcp_port + 1)
            self.ws_port = self._ws_sock.getsockname()[1]
            self._spawn(self._accept_ws, "pg-accept-ws")
        if cfg.enable_http:
            self._http = ThreadingHTTPServer((cfg.host, self.tcp_port + 2), _StaticHandler)
            self._http.daemon_threads = True
            self._http.pg_config = cfg  # type: ignore[attr-defined]
            self._http.pg_schema_doc = self._schema_doc()  # type: ignore[attr-defined]
            self.http_port = self._http.server_address[1]
            self._spawn(self._http.serve_forever, "pg-http")
        logger.info(
            "listening: tcp=%s:%s ws=%s http=%s", cfg.host, self.tcp_port, self.ws_port, self.http_port
        )

    def _schema_doc(self) -> dict:
        schema = self.config.schema
        from .panel import CATEGORIES

        return {
            "name": schema.name,
            "door_item": str(schema.door_item),
            "categories": {
                c.code: {
                    "count": schema.counts.get(c.code, 0),
                    "layer": c.layer,
                    "verb": c.verb,
                    "interactable": schema.interactable.get(c.code, False),
                }
                for c in CATEGORIES
            },
        }

    def _listen(self, host: str, port: int) -> socket.socket:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))
        sock.listen(64)
        return sock

    def _spawn(self, target, name: str) -> None:
        t = threading.Thread(target=target, daemon=True, name=name)
        t.start()
        self._threads.append(t)

    def _next_conn_no(self) -> int:
        with self._conn_lock:
            self._conn_count += 1
            return self._conn_count

    def _accept_tcp(self) -> None:
        assert self._tcp_sock is not None
        while not self._stopping:
            try:
                client, _ = self._tcp_sock.accept()
            except OSError:
                return
            client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _Connection(self, _TcpTransport(client), self._next_conn_no())
            threading.Thread(target=conn.run, daemon=True, name=f"pg-conn-{conn.conn_no}").start()

    def _accept_ws(self) -> None:
        assert self._ws_sock is not None
        while not self._stopping:
            try:
                client, _ = self._ws_sock.accept()
            except OSError:
                return
            client.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(target=self._ws_session, args=(client,), daemon=True).start()

    def _ws_session(self, client: socket.socket) -> None:
        try:
            websocket.server_handshake(client)
        except websocket.HandshakeError:
            try:
                client.close()
            except OSError:
                pass
            return
        ws = websocket.WebSocketConnection(client, server_side=True)
        conn = _Connection(self, _WsTransport(ws), self._next_conn_no())
        conn.run()

    def stop(self) -> None:
        self._stopping = True
        for sock in (self._tcp_sock, self._ws_sock):
            if sock is not None:
                try:
                    sock.close()
                except OSError:
                    pass
        if self._http is not None:
            self._http.shutdown()

    def serve_forever(self) -> None:
        self.start()
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            self.stop()
