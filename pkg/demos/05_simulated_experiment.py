# A desk-scale stand-in for the paired user study.
#
# This script brings up the protocol server in-process with the scripted
# model backend, then drives fifteen simulated subjects through both task
# fixtures: a slow, somewhat error-prone operator for the unguided
# condition versus a fast, accurate one for the guided condition. The
# resulting paired completion times go straight into the signed-rank test.
#
# Simulated operators, real wire protocol: every session below runs over
# an actual loopback TCP connection, exactly like the operator console.

from pathlib import Path

from panelguide.analytics import score_session, wilcoxon_signed_rank
from panelguide.cli import bundled_fixtures_dir
from panelguide.commands import parse_reply
from panelguide.gateway import ScriptedBackend
from panelguide.panel import default_schema
from panelguide.server import GuidanceServer, ServerConfig
from panelguide.simulate import OperatorProfile, run_paired_experiment

schema = default_schema()
log_dir = Path("logs/experiment")
config = ServerConfig(
    schema=schema,
    backend=ScriptedBackend(bundled_fixtures_dir()),
    fixtures_dir=bundled_fixtures_dir(),
    log_dir=log_dir,
    port=0,  # ephemeral; the demo owns this server
    enable_ws=False,
    enable_http=False,
)
server = GuidanceServer(config)
server.start()
print(f"server on 127.0.0.1:{server.tcp_port}, logs under {log_dir}/")

unguided = OperatorProfile(error_rate=0.10, think_time_ms=(25, 45))
guided = OperatorProfile(error_rate=0.02, think_time_ms=(5, 12))

experiment = run_paired_experiment(
    unguided, guided, 15, "hvac", "pump",
    "127.0.0.1", server.tcp_port, schema, log_dir,
    base_seed=2024, label_a="unguided", label_b="guided",
)
server.stop()

print(f"\n{'subject':>7}  {'unguided':>9}  {'guided':>7}")
for i, (a, b) in enumerate(experiment.times.pairs):
    print(f"{i:>7}  {a:>8.3f}s  {b:>6.3f}s")

times = wilcoxon_signed_rank(experiment.times)
acc = wilcoxon_signed_rank(experiment.accuracies)
print(f"\ncompletion time: W={times.w_statistic}, p={times.p_two_sided:.6g} ({times.method})")
print(f"accuracy:        W={acc.w_statistic}, p={acc.p_two_sided:.6g} ({acc.method})")

experiment.times.to_csv(log_dir / "paired_times.csv")
print(f"\npaired times written to {log_dir / 'paired_times.csv'}")

# Any individual log can be re-scored offline against its ground truth.
correct, _ = parse_reply("B_04, K_03, B_07, H_00, S_04, T_04, H_00, T_04", schema)
report = score_session(log_dir / "subj00-a-hvac.jsonl", correct)
print(f"subject 0, unguided: time={report.completion_time_s:.3f}s "
      f"accuracy={report.accuracy:.4f} violations={report.gating_violations}")
