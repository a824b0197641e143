import json
import socket
import time

import pytest

from panelguide import websocket
from panelguide.errors import GuidanceError
from panelguide.ingest import ScriptedOcr
from panelguide.server import GuidanceServer, ServerConfig
from panelguide.simulate import LineClient
from panelguide.wire import parse_wire_line
from tests.conftest import start_server

PUMP_SEQ = "H_00,S_02,T_01,H_00,B_01,K_02,B_02,T_02"


class WsLineClient:
    """WebSocket twin of LineClient: same grammar, framed transport."""

    def __init__(self, host: str, port: int, timeout_s: float = 30.0):
        sock = socket.create_connection((host, port), timeout=timeout_s)
        websocket.client_handshake(sock, host, port)
        self.conn = websocket.WebSocketConnection(sock, server_side=False)

    def send(self, line: str) -> None:
        self.conn.send_text(line)

    def recv(self):
        text = self.conn.recv_text()
        if text is None:
            raise GuidanceError("server closed the connection", reason="disconnected")
        return parse_wire_line(text)

    def recv_until(self, *kinds):
        seen = []
        while True:
            msg = self.recv()
            seen.append(msg)
            if msg.kind == "ERR":
                raise GuidanceError(f"server error {msg.payload['code']}: {msg.payload['reason']}", reason="protocol")
            if msg.kind in kinds:
                return seen

    def close(self):
        self.conn.close()


def tcp_client(server) -> LineClient:
    return LineClient("127.0.0.1", server.tcp_port, timeout_s=10)


def test_text_flow_emits_awaiting_seq_ready_prompt(scripted_server):
    client = tcp_client(scripted_server)
    client.send("HELLO flow-test")
    assert client.recv().encode() == "STATE IDLE"
    client.send("TEXT pump")
    msgs = client.recv_until("PROMPT")
    lines = [m.encode() for m in msgs]
    assert lines[0] == "STATE AWAITING_GPT"
    assert f"SEQ {PUMP_SEQ}" in lines
    seq_pos = lines.index(f"SEQ {PUMP_SEQ}")
    assert lines[seq_pos + 1] == "STATE READY"
    assert lines[seq_pos + 2] == "PROMPT 0 H_00 turn"
    client.close()


def test_act_internal_item_with_door_closed(scripted_server):
    client = tcp_client(scripted_server)
    client.send("TEXT pump")
    client.recv_until("PROMPT")
    client.send("ACT S_02")
    evt = client.recv_until("EVT")[-1]
    assert evt.encode() == "EVT S_02 unplug door=closed violation=true"
    client.close()


def test_next_before_sequence_is_409(scripted_server):
    client = tcp_client(scripted_server)
    client.send("NEXT")
    msg = client.recv()
    assert msg.kind == "ERR"
    assert msg.payload["code"] == 409
    assert msg.payload["reason"] == "wrong-phase"
    client.close()


def test_act_gauge_rejected(scripted_server):
    client = tcp_client(scripted_server)
    client.send("TEXT pump")
    client.recv_until("PROMPT")
    client.send("ACT G_00")
    msg = client.recv()
    assert msg.kind == "ERR" and msg.payload["code"] == 400
    client.close()


def test_unknown_kind_is_400(scripted_server):
    client = tcp_client(scripted_server)
    client.send("FLY B_00")
    msg = client.recv()
    assert msg.kind == "ERR" and msg.payload["code"] == 400
    client.close()


def test_unknown_fixture_fails_pipeline_with_stage_tag(scripted_server):
    client = tcp_client(scripted_server)
    client.send("TEXT nonexistent")
    msg = client.recv()
    assert msg.encode() == "STATE AWAITING_GPT"
    msg = client.recv()
    assert msg.kind == "ERR"
    assert msg.payload["code"] == 502
    assert msg.payload["reason"].startswith("ingest:")
    assert client.recv().encode() == "STATE FAILED"
    client.close()


def test_recapture_after_ready_is_409(scripted_server):
    client = tcp_client(scripted_server)
    client.send("TEXT pump")
    client.recv_until("PROMPT")
    client.send("TEXT pump")
    msg = client.recv()
    assert msg.kind == "ERR" and msg.payload["code"] == 409
    client.close()


def test_two_clients_have_independent_sessions(scripted_server):
    a = tcp_client(scripted_server)
    b = tcp_client(scripted_server)
    a.send("HELLO client-a")
    b.send("HELLO client-b")
    a.recv()
    b.recv()
    a.send("TEXT pump")
    a.recv_until("PROMPT")
    # b is still idle: NEXT must fail there even though a is ready
    b.send("NEXT")
    msg = b.recv()
    assert msg.kind == "ERR" and msg.payload["code"] == 409
    a.close()
    b.close()


def test_default_binding_is_loopback_9000(schema, fixtures_dir, tmp_path):
    from panelguide.cli import build_parser
    from panelguide.gateway import ScriptedBackend

    config = ServerConfig(
        schema=schema, backend=ScriptedBackend(fixtures_dir), fixtures_dir=fixtures_dir, log_dir=tmp_path
    )
    assert (config.host, config.port) == ("127.0.0.1", 9000)
    args = build_parser().parse_args(["serve"])
    assert (args.host, args.port) == ("127.0.0.1", 9000)


def test_occupied_port_is_bind_error(tmp_path, schema, fixtures_dir):
    from panelguide.gateway import ScriptedBackend

    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    config = ServerConfig(
        schema=schema,
        backend=ScriptedBackend(fixtures_dir),
        fixtures_dir=fixtures_dir,
        log_dir=tmp_path,
        port=port,
        enable_ws=False,
        enable_http=False,
    )
    server = GuidanceServer(config)
    with pytest.raises(OSError):
        server.start()
    blocker.close()
    server.stop()


def drive_full_session(client, fixture="pump", client_id="driver"):
    """Shared message script: submit, then act every prompted item."""
    client.send(f"HELLO {client_id}")
    client.recv_until("STATE")
    client.send(f"TEXT {fixture}")
    msgs = client.recv_until("PROMPT")
    n = len(next(m for m in msgs if m.kind == "SEQ").payload["items"])
    prompt = msgs[-1]
    transcript = []
    for step in range(n):
        client.send(f"ACT {prompt.payload['item']}")
        evt = client.recv_until("EVT")[-1]
        transcript.append(evt.encode())
        if step == n - 1:
            done = client.recv_until("DONE")[-1]
            transcript.append(done.encode())
        else:
            client.send("NEXT")
            prompt = client.recv_until("PROMPT")[-1]
    return transcript


def test_full_session_reaches_done_with_perfect_accuracy(scripted_server):
    client = tcp_client(scripted_server)
    transcript = drive_full_session(client, client_id="full-run")
    done = parse_wire_line(transcript[-1])
    assert done.payload["accuracy"] == 1.0
    log_path = scripted_server.config.log_dir / "full-run.jsonl"
    records = [json.loads(line) for line in log_path.read_text().splitlines()]
    events = [r for r in records if r["rec"] == "event"]
    assert [r["item"] for r in events] == PUMP_SEQ.split(",")
    assert not any(r["violation"] for r in events)
    client.close()


def test_tcp_and_websocket_logs_are_byte_identical(tmp_path, schema):
    server = start_server(tmp_path / "logs", schema, clock="counting", enable_ws=True)
    try:
        tcp = LineClient("127.0.0.1", server.tcp_port, timeout_s=10)
        tcp_transcript = drive_full_session(tcp, client_id="parity")
        tcp.close()
        time.sleep(0.05)
        tcp_log = (tmp_path / "logs" / "parity.jsonl").read_bytes()

        ws = WsLineClient("127.0.0.1", server.ws_port, timeout_s=10)
        ws_transcript = drive_full_session(ws, client_id="parity")
        ws.close()
        time.sleep(0.05)
        ws_log = (tmp_path / "logs" / "parity.jsonl").read_bytes()

        assert tcp_transcript == ws_transcript
        assert tcp_log == ws_log
    finally:
        server.stop()


def test_capture_flow_with_scripted_ocr(tmp_path, schema, fixtures_dir):
    pump_lines = (fixtures_dir / "pump.txt").read_text(encoding="utf-8").splitlines()
    server = start_server(tmp_path / "logs", schema, ocr=ScriptedOcr(pump_lines))
    try:
        image = tmp_path / "pump.png"  # stem doubles as the fixture id
        image.write_bytes(b"\x89PNG fake image bytes")
        client = LineClient("127.0.0.1", server.tcp_port, timeout_s=10)
        client.send(f"CAPTURE {image}")
        msgs = client.recv_until("PROMPT")
        lines = [m.encode() for m in msgs]
        assert lines[0] == "STATE CAPTURING"
        assert "STATE AWAITING_GPT" in lines
        assert lines.index("STATE AWAITING_GPT") < lines.index(f"SEQ {PUMP_SEQ}")
        client.close()
    finally:
        server.stop()


def test_capture_without_ocr_configured(scripted_server, tmp_path):
    image = tmp_path / "x.png"
    image.write_bytes(b"img")
    client = tcp_client(scripted_server)
    client.send(f"CAPTURE {image}")
    msg = client.recv()
    assert msg.kind == "ERR" and msg.payload["code"] == 502
    client.close()


def test_malformed_lines_never_crash_session(scripted_server):
    import random

    rng = random.Random(404)
    client = tcp_client(scripted_server)
    alphabet = bytes(b for b in range(256) if b != 0x0A)
    raw = b""
    for _ in range(1000):
        raw += bytes(rng.choices(alphabet, k=rng.randint(1, 40))) + b"\n"
    client.sock.sendall(raw)
    for _ in range(1000):
        msg = client.recv()
        assert msg.kind == "ERR"
    # session still usable afterward
    client.send("TEXT pump")
    assert client.recv_until("PROMPT")
    client.close()


def test_oversize_line_reported_and_survivable(scripted_server):
    client = tcp_client(scripted_server)
    client.sock.sendall(b"ACT " + b"x" * (70 * 1024) + b"\n")
    msg = client.recv()
    assert msg.kind == "ERR" and msg.payload["reason"] == "line-too-long"
    client.send("TEXT pump")
    assert client.recv_until("PROMPT")
    client.close()


def test_http_endpoint_serves_schema_and_fixtures(tmp_path, schema):
    import urllib.request

    server = start_server(tmp_path / "logs", schema, enable_http=True)
    try:
        with urllib.request.urlopen(f"http://127.0.0.1:{server.http_port}/schema.json", timeout=5) as resp:
            doc = json.loads(resp.read())
        assert doc["door_item"] == "H_00"
        assert doc["categories"]["S"]["count"] == 11
        with urllib.request.urlopen(f"http://127.0.0.1:{server.http_port}/fixtures.json", timeout=5) as resp:
            ids = json.loads(resp.read())
        assert "hvac" in ids and "pump" in ids
    finally:
        server.stop()
