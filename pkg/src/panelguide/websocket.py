"""Minimal WebSocket (RFC 6455) framing over blocking sockets.

Implements just what the operator-console bridge needs: the HTTP upgrade
handshake, text frames with client-side masking, fragmentation reassembly,
ping/pong, and clean close. The server side refuses unmasked client frames;
the client side is provided for tests and scripted drivers.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_PAYLOAD = 1 << 20  # hard cap, larger frames abort the connection


class HandshakeError(Exception):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def _read_until(sock: socket.socket, marker: bytes, limit: int = 16384) -> bytes:
    buf = b""
    while marker not in buf:
        chunk = sock.recv(1024)
        if not chunk:
            raise HandshakeError("connection closed during handshake")
        buf += chunk
        if len(buf) > limit:
            raise HandshakeError("handshake request too large")
    return buf


def server_handshake(sock: socket.socket) -> None:
    """Read the HTTP upgrade request and reply 101, or raise HandshakeError."""
    raw = _read_until(sock, b"\r\n\r\n")
    head = raw.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    if not lines or not lines[0].startswith("GET "):
        _refuse(sock, "400 Bad Request")
        raise HandshakeError("not a GET request")
    headers = {}
    for line in lines[1:]:
        name, _, value = line.partition(":")
        headers[name.strip().lower()] = value.strip()
    if headers.get("upgrade", "").lower() != "websocket" or "sec-websocket-key" not in headers:
        _refuse(sock, "426 Upgrade Required")
        raise HandshakeError("missing websocket upgrade headers")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(headers['sec-websocket-key'])}\r\n"
        "\r\n"
    )
    sock.sendall(response.encode("ascii"))


def _refuse(sock: socket.socket, status: str) -> None:
    try:
        sock.sendall(f"HTTP/1.1 {status}\r\nConnection: close\r\n\r\n".encode("ascii"))
    except OSError:
        pass


def client_handshake(sock: socket.socket, host: str, port: int, path: str = "/") -> None:
    key = base64.b64encode(os.urandom(16)).decode("ascii")
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n"
    )
    sock.sendall(request.encode("ascii"))
    raw = _read_until(sock, b"\r\n\r\n")
    head = raw.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    if " 101 " not in head.split("\r\n")[0]:
        raise HandshakeError(f"server refused upgrade: {head.splitlines()[0]}")
    for line in head.split("\r\n")[1:]:
        name, _, value = line.partition(":")
        if name.strip().lower() == "sec-websocket-accept" and value.strip() != accept_key(key):
            raise HandshakeError("bad Sec-WebSocket-Accept")


class WebSocketConnection:
    """Framed text messaging once a handshake has completed."""

    def __init__(self, sock: socket.socket, server_side: bool):
        self.sock = sock
        self.server_side = server_side
        self._closed = False

    # ---- receiving ----

    def _read_exact(self, n: int) -> bytes | None:
        buf = b""
        while len(buf) < n:
            try:
                chunk = self.sock.recv(n - len(buf))
            except OSError:
                return None
            if not chunk:
                return None
            buf += chunk
        return buf

    def _read_frame(self) -> tuple[int, bool, bytes] | None:
        head = self._read_exact(2)
        if head is None:
            return None
        b0, b1 = head
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        if length == 126:
            ext = self._read_exact(2)
            if ext is None:
                return None
            length = struct.unpack(">H", ext)[0]
        elif length == 127:
            ext = self._read_exact(8)
            if ext is None:
                return None
            length = struct.unpack(">Q", ext)[0]
        if length > MAX_PAYLOAD:
            self.close()
            return None
        if self.server_side and not masked:
            # clients must mask; treat as protocol failure
            self.close()
            return None
        mask = b""
        if masked:
            m = self._read_exact(4)
            if m is None:
                return None
            mask = m
        payload = self._read_exact(length) if length else b""
        if payload is None:
            return None
        if masked:
            payload = bytes(b ^ mask[i & 3] for i, b in enumerate(payload))
        return opcode, fin, payload

    def recv_text(self) -> str | None:
        """Next complete text message, or None once the peer is gone."""
        assembled = b""
        in_message = False
        while True:
            frame = self._read_frame()
            if frame is None:
                return None
            opcode, fin, payload = frame
            if opcode == OP_PING:
                self._send_frame(OP_PONG, payload)
                continue
            if opcode == OP_PONG:
                continue
            if opcode == OP_CLOSE:
                if not self._closed:
                    self._send_frame(OP_CLOSE, b"")
                    self._closed = True
                return None
            if opcode in (OP_TEXT, OP_BINARY):
                if in_message:
                    self.close()
                    return None
                assembled = payload
                in_message = True
            elif opcode == OP_CONT:
                if not in_message:
                    self.close()
                    return None
                assembled += payload
            else:
                self.close()
                return None
            if len(assembled) > MAX_PAYLOAD:
                self.close()
                return None
            if fin:
                return assembled.decode("utf-8", errors="replace")

    # ---- sending ----

    def _send_frame(self, opcode: int, payload: bytes) -> None:
        fin_op = 0x80 | opcode
        header = bytes([fin_op])
        mask_bit = 0x00 if self.server_side else 0x80
        n = len(payload)
        if n < 126:
            header += bytes([mask_bit | n])
        elif n < (1 << 16):
            header += bytes([mask_bit | 126]) + struct.pack(">H", n)
        else:
            header += bytes([mask_bit | 127]) + struct.pack(">Q", n)
        if not self.server_side:
            mask = os.urandom(4)
            payload = bytes(b ^ mask[i & 3] for i, b in enumerate(payload))
            header += mask
        try:
            self.sock.sendall(header + payload)
        except OSError:
            self._closed = True

    def send_text(self, text: str) -> None:
        self._send_frame(OP_TEXT, text.encode("utf-8"))

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._send_frame(OP_CLOSE, b"")
        try:
            self.sock.close()
        except OSError:
            pass
