import socket
import threading

import pytest

from panelguide.websocket import (
    HandshakeError,
    WebSocketConnection,
    accept_key,
    client_handshake,
    server_handshake,
)


def test_accept_key_rfc_example():
    # the handshake example key from the protocol's RFC
    assert accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="


@pytest.fixture
def ws_pair():
    """Client/server WebSocketConnection pair over a loopback socket."""
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]

    server_conn: dict = {}

    def accept():
        sock, _ = listener.accept()
        server_handshake(sock)
        server_conn["ws"] = WebSocketConnection(sock, server_side=True)

    thread = threading.Thread(target=accept, daemon=True)
    thread.start()
    client_sock = socket.create_connection(("127.0.0.1", port), timeout=5)
    client_handshake(client_sock, "127.0.0.1", port)
    thread.join(timeout=5)
    client = WebSocketConnection(client_sock, server_side=False)
    yield client, server_conn["ws"]
    client.close()
    server_conn["ws"].close()
    listener.close()


def test_text_round_trip_both_directions(ws_pair):
    client, server = ws_pair
    client.send_text("HELLO console")
    assert server.recv_text() == "HELLO console"
    server.send_text("STATE IDLE")
    assert client.recv_text() == "STATE IDLE"


def test_payload_length_boundaries(ws_pair):
    client, server = ws_pair
    for size in (0, 1, 125, 126, 127, 65535, 65536, 70000):
        text = "x" * size
        client.send_text(text)
        assert server.recv_text() == text


def test_unicode_payload(ws_pair):
    client, server = ws_pair
    client.send_text("panneau électrique ✓")
    assert server.recv_text() == "panneau électrique ✓"


def test_fragmented_message_reassembly(ws_pair):
    client, server = ws_pair
    # text frame without FIN, then a final continuation frame
    client._send_frame_raw = client._send_frame
    payload = "AB".encode()

    def send_fragmented():
        import os

        # first fragment: opcode text, FIN clear
        mask = os.urandom(4)
        masked = bytes(b ^ mask[i & 3] for i, b in enumerate(b"AB"))
        client.sock.sendall(bytes([0x01, 0x80 | 2]) + mask + masked)
        mask = os.urandom(4)
        masked = bytes(b ^ mask[i & 3] for i, b in enumerate(b"CD"))
        client.sock.sendall(bytes([0x80, 0x80 | 2]) + mask + masked)

    send_fragmented()
    assert server.recv_text() == "ABCD"


def test_ping_gets_ponged_transparently(ws_pair):
    client, server = ws_pair
    import os

    mask = os.urandom(4)
    client.sock.sendall(bytes([0x89, 0x80 | 0]) + mask)  # masked ping, no payload
    client.send_text("after ping")
    assert server.recv_text() == "after ping"


def test_close_handshake(ws_pair):
    client, server = ws_pair
    client.close()
    assert server.recv_text() is None


def test_server_rejects_unmasked_client_frames(ws_pair):
    client, server = ws_pair
    client.sock.sendall(bytes([0x81, 0x02]) + b"hi")  # unmasked text frame
    assert server.recv_text() is None


def test_handshake_refuses_plain_http():
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]
    result: dict = {}

    def accept():
        sock, _ = listener.accept()
        try:
            server_handshake(sock)
            result["ok"] = True
        except HandshakeError:
            result["ok"] = False
        finally:
            sock.close()

    thread = threading.Thread(target=accept, daemon=True)
    thread.start()
    with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
        sock.sendall(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
        thread.join(timeout=5)
    assert result["ok"] is False
    listener.close()
