"""Command-line entry point: compile, serve, simulate, analyze, schema-check.

Exit codes: 0 success, 1 usage error, 2 pipeline/domain error (stage named
on stderr). Stdout carries only machine-readable results; diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
from importlib import resources
from pathlib import Path

from . import analytics, gateway, ingest, prompts, simulate
from .commands import LENIENT, STRICT, parse_reply, render_sequence
from .errors import GuidanceError
from .panel import PanelSchema, default_schema, load_schema_file
from .server import GuidanceServer, ServerConfig
from .session import CountingClock


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def bundled_fixtures_dir() -> Path:
    return Path(str(resources.files("panelguide.data").joinpath("fixtures")))


def _load_schema(path: str | None) -> PanelSchema:
    return load_schema_file(path) if path else default_schema()


def _make_backend(args) -> object:
    if args.backend == "live":
        return gateway.LiveBackend.from_env()
    fixtures = Path(args.fixtures) if args.fixtures else bundled_fixtures_dir()
    latency = getattr(args, "scripted_latency", 0.0) or 0.0
    return gateway.ScriptedBackend(fixtures, latency_s=latency)


def _ocr_from_env():
    endpoint = os.environ.get("OCR_ENDPOINT")
    key = os.environ.get("OCR_KEY")
    if endpoint and key:
        return ingest.HttpOcrClient(endpoint, key)
    return None


def _stage_fail(stage: str, exc: Exception) -> int:
    print(f"{stage}: {exc}", file=sys.stderr)
    return 2


def cmd_compile(args) -> int:
    schema = _load_schema(args.schema)
    templates = prompts.load_templates(args.templates)
    backend = _make_backend(args)
    log_dir = Path(args.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    input_path = Path(args.input)
    try:
        if input_path.suffix.lower() in (".txt", ".text", ""):
            doc = ingest.ingest_file(input_path)
        else:
            ocr = _ocr_from_env()
            if ocr is None:
                raise ingest.IngestError("OCR_ENDPOINT/OCR_KEY not configured", reason="ocr-not-configured")
            doc = ingest.ingest_image(input_path.read_bytes(), ocr, id=input_path.stem)
    except (OSError, GuidanceError) as exc:
        return _stage_fail("ingest", exc)

    try:
        bundle = prompts.build_bundle(schema, doc, templates)
    except (ValueError, GuidanceError) as exc:
        return _stage_fail("assemble", exc)

    try:
        result = gateway.complete(
            gateway.CompletionRequest(prompt=bundle.render(), model=args.model, fixture_id=doc.id), backend
        )
    except GuidanceError as exc:
        return _stage_fail("gateway", exc)

    report_path = log_dir / f"{doc.id}.parse.json"
    try:
        seq, report = parse_reply(result.text, schema, args.mode, source_doc=doc.id)
    except GuidanceError as exc:
        report_path.write_text(
            json.dumps({"doc": doc.id, "mode": args.mode, "error": str(exc), "raw_reply": result.text}, indent=2),
            encoding="utf-8",
        )
        print(f"parse report: {report_path}", file=sys.stderr)
        return _stage_fail("parse", exc)

    report_path.write_text(
        json.dumps(
            {
                "doc": doc.id,
                "mode": report.mode,
                "token_count": report.token_count,
                "rejected_fragments": [list(f) for f in report.rejected_fragments],
                "raw_reply": result.text,
                "sequence": [str(i) for i in seq.items()],
                "backend": result.backend,
                "latency_ms": round(result.latency_s * 1000.0, 3),
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    print(render_sequence(seq))
    return 0


def cmd_schema_check(args) -> int:
    try:
        schema = _load_schema(args.schema)
    except GuidanceError as exc:
        return _stage_fail("schema", exc)
    total, interactable = schema.census()
    print(f"{total} items ({interactable} interactable)")
    return 0


def cmd_serve(args) -> int:
    try:
        schema = _load_schema(args.schema)
        backend = _make_backend(args)
    except GuidanceError as exc:
        return _stage_fail("startup", exc)
    config = ServerConfig(
        schema=schema,
        backend=backend,
        fixtures_dir=Path(args.fixtures) if args.fixtures else bundled_fixtures_dir(),
        log_dir=Path(args.log_dir),
        host=args.host,
        port=args.port,
        templates=prompts.load_templates(args.templates),
        ocr=_ocr_from_env(),
        clock_factory=(lambda: CountingClock()) if args.clock == "counting" else None,
        console_dir=Path(args.console) if args.console else None,
        enable_ws=not args.no_ws,
        enable_http=not args.no_http,
    )
    server = GuidanceServer(config)
    try:
        server.start()
    except OSError as exc:
        return _stage_fail("bind", exc)
    print(
        f"tcp={args.host}:{server.tcp_port} ws={server.ws_port} http={server.http_port}",
        file=sys.stderr,
    )
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        server.stop()
    return 0


def cmd_simulate(args) -> int:
    schema = _load_schema(args.schema)
    log_dir = Path(args.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    profile_doc = simulate.load_profile_file(args.profile) if args.profile else {}
    own_server: GuidanceServer | None = None
    if args.server:
        host, _, port_s = args.server.partition(":")
        host, port = host or "127.0.0.1", int(port_s)
    else:
        backend = gateway.ScriptedBackend(Path(args.fixtures) if args.fixtures else bundled_fixtures_dir())
        config = ServerConfig(
            schema=schema,
            backend=backend,
            fixtures_dir=Path(args.fixtures) if args.fixtures else bundled_fixtures_dir(),
            log_dir=log_dir,
            port=0,
            enable_ws=False,
            enable_http=False,
        )
        own_server = GuidanceServer(config)
        own_server.start()
        host, port = config.host, own_server.tcp_port

    try:
        if "a" in profile_doc and "b" in profile_doc:
            pa = simulate.OperatorProfile.from_dict(profile_doc["a"])
            pb = simulate.OperatorProfile.from_dict(profile_doc["b"])
            fixture_a = profile_doc["a"].get("fixture", args.fixture or "hvac")
            fixture_b = profile_doc["b"].get("fixture", args.fixture or "pump")
            result = simulate.run_paired_experiment(
                pa, pb, args.n, fixture_a, fixture_b, host, port, schema, log_dir,
                base_seed=args.seed,
                label_a=profile_doc["a"].get("label", "condition_a"),
                label_b=profile_doc["b"].get("label", "condition_b"),
            )
            out = Path(args.out) if args.out else log_dir / "paired_times.csv"
            result.times.to_csv(out)
            print(out)
        else:
            if not args.fixture:
                print("simulate: --fixture is required without a paired profile", file=sys.stderr)
                return 1
            profile = simulate.OperatorProfile.from_dict(profile_doc)
            for i in range(args.n):
                seeded = simulate.OperatorProfile(
                    error_rate=profile.error_rate,
                    wrong_item_policy=profile.wrong_item_policy,
                    think_time_ms=profile.think_time_ms,
                    seed=simulate.derive_seed(args.seed, i, 0),
                )
                outcome = simulate.run_session(seeded, host, port, args.fixture, schema, log_dir)
                print(outcome.log_path)
    except GuidanceError as exc:
        return _stage_fail("simulate", exc)
    finally:
        if own_server is not None:
            own_server.stop()
    return 0


def cmd_analyze(args) -> int:
    if args.analyze_cmd == "score":
        schema = _load_schema(args.schema)
        try:
            correct, _ = parse_reply(args.correct, schema, STRICT, source_doc="correct")
            report = analytics.score_session(args.log, correct)
        except GuidanceError as exc:
            return _stage_fail("score", exc)
        print(json.dumps(report.to_dict(), indent=2))
        return 0
    if args.analyze_cmd == "wilcoxon":
        try:
            samples = analytics.PairedSamples.from_csv(args.csv)
        except (OSError, ValueError) as exc:
            return _stage_fail("wilcoxon", exc)
        result = analytics.wilcoxon_signed_rank(samples)
        print(
            json.dumps(
                {
                    "n_effective": result.n_effective,
                    "w_statistic": result.w_statistic,
                    "p_two_sided": result.p_two_sided,
                    "method": result.method,
                },
                indent=2,
            )
        )
        return 0
    print("analyze: choose score or wilcoxon", file=sys.stderr)
    return 1


def build_parser() -> _Parser:
    parser = _Parser(prog="panelguide", description="Text-to-action guidance engine")
    parser.add_argument("--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--schema", help="panel schema JSON (default: bundled panel)")
        p.add_argument("--log-dir", default="logs", help="directory for session logs and reports")

    p = sub.add_parser("compile", help="instruction text/image -> command sequence")
    common(p)
    p.add_argument("--input", required=True, help="instruction .txt file or image file")
    p.add_argument("--backend", choices=("scripted", "live"), default="scripted")
    p.add_argument("--fixtures", help="scripted reply directory (default: bundled)")
    p.add_argument("--mode", choices=(STRICT, LENIENT), default=STRICT)
    p.add_argument("--templates", help="prompt template directory (default: bundled)")
    p.add_argument("--model", default=gateway.DEFAULT_MODEL)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("serve", help="run the guidance protocol server")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=9000)
    p.add_argument("--backend", choices=("scripted", "live"), default="scripted")
    p.add_argument("--fixtures", help="instruction corpus + scripted replies (default: bundled)")
    p.add_argument("--templates", help="prompt template directory (default: bundled)")
    p.add_argument("--scripted-latency", type=float, default=0.0, help="inject reply latency (seconds)")
    p.add_argument("--console", help="serve this directory as the operator console")
    p.add_argument("--clock", choices=("wall", "counting"), default="wall")
    p.add_argument("--no-ws", action="store_true")
    p.add_argument("--no-http", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="drive sessions with a scripted operator")
    common(p)
    p.add_argument("--profile", help="operator profile JSON (flat, or a/b blocks for paired)")
    p.add_argument("--fixture", help="instruction fixture id")
    p.add_argument("--fixtures", help="corpus directory (default: bundled)")
    p.add_argument("--n", type=int, default=1, help="sessions (or subjects when paired)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--server", help="host:port of a running server (default: self-hosted)")
    p.add_argument("--out", help="paired-samples CSV output path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="score logs / run significance tests")
    asub = p.add_subparsers(dest="analyze_cmd", required=True)
    ps = asub.add_parser("score", help="score one session log")
    ps.add_argument("--schema")
    ps.add_argument("--log", required=True, help="session JSONL log")
    ps.add_argument("--correct", required=True, help="correct sequence, e.g. 'B_04, K_03, ...'")
    ps.set_defaults(func=cmd_analyze)
    pw = asub.add_parser("wilcoxon", help="paired-sample signed-rank test")
    pw.add_argument("--csv", required=True, help="CSV with header subject,condition_a,condition_b")
    pw.set_defaults(func=cmd_analyze)

    p = sub.add_parser("schema-check", help="validate a schema and print its census")
    p.add_argument("--schema", help="panel schema JSON (default: bundled panel)")
    p.set_defaults(func=cmd_schema_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
