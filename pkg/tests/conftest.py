"""Shared fixtures: default schema, scripted servers, deterministic clocks."""

from __future__ import annotations

import socket
from pathlib import Path

import pytest

from panelguide.cli import bundled_fixtures_dir
from panelguide.gateway import ScriptedBackend
from panelguide.panel import default_schema
from panelguide.server import GuidanceServer, ServerConfig
from panelguide.session import CountingClock


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return bundled_fixtures_dir()


class ManualClock:
    """Clock the test advances explicitly; repeated reads hold the value."""

    def __init__(self, t: float = 0.0):
        self.t = t

    def set(self, t: float) -> None:
        self.t = t

    def __call__(self) -> float:
        return self.t


@pytest.fixture
def manual_clock():
    return ManualClock()


def start_server(
    log_dir: Path,
    schema,
    fixtures: Path | None = None,
    clock: str = "counting",
    latency_s: float = 0.0,
    ocr=None,
    enable_ws: bool = False,
    enable_http: bool = False,
) -> GuidanceServer:
    """Bring up a scripted-backend server on an ephemeral port.

    Ephemeral base ports make ws/http (+1/+2) collisions possible, so bind
    failures retry with a fresh base.
    """
    fixtures = fixtures or bundled_fixtures_dir()
    last_exc: Exception | None = None
    for _ in range(10):
        config = ServerConfig(
            schema=schema,
            backend=ScriptedBackend(fixtures, latency_s=latency_s),
            fixtures_dir=fixtures,
            log_dir=log_dir,
            port=0,
            ocr=ocr,
            clock_factory=(lambda: CountingClock()) if clock == "counting" else None,
            enable_ws=enable_ws,
            enable_http=enable_http,
        )
        server = GuidanceServer(config)
        try:
            server.start()
            return server
        except OSError as exc:
            last_exc = exc
            server.stop()
    raise RuntimeError(f"could not bind a server after 10 attempts: {last_exc}")


@pytest.fixture
def scripted_server(tmp_path, schema):
    server = start_server(tmp_path / "logs", schema)
    yield server
    server.stop()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


# ---- acceptance reporting: one pass/fail line per criterion ----

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _acceptance_results[report.nodeid.split("::")[-1]] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if _acceptance_results:
        terminalreporter.section("acceptance criteria")
        for name, outcome in _acceptance_results.items():
            terminalreporter.write_line(f"{name}: {outcome}")
