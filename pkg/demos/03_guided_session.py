# The live session state machine: prompts, interactions, door gating, timing.
#
# A session never blocks a wrong interaction; it records what happened and
# the scoring happens afterwards, like an untimed post-hoc protocol. The
# clock is injectable, so this demo replays a task with chosen timestamps
# and lands on an exact completion time.

from panelguide.analytics import score_session
from panelguide.commands import parse_reply
from panelguide.panel import ItemId, default_schema
from panelguide.session import GuidanceSession, SessionLog


class ManualClock:
    def __init__(self, t=0.0):
        self.t = t

    def set(self, t):
        self.t = t

    def __call__(self):
        return self.t


PUMP = "H_00, S_02, T_01, H_00, B_01, K_02, B_02, T_02"
schema = default_schema()
clock = ManualClock(-1.0)
log = SessionLog("logs/demo_session.jsonl")
session = GuidanceSession(schema, session_id="demo", clock=clock, log=log)

clock.set(0.0)
session.begin_capture()          # the task clock starts at the capture event
clock.set(5.0)
session.mark_awaiting()          # the model round trip is in flight
clock.set(25.0)                  # ...and took twenty seconds
seq, _ = parse_reply(PUMP, schema)
session.install_sequence(seq)

print(f"sequence installed, cursor at step {session.cursor}: {session.current_prompt()}")

# Step through and act every prompted item; the door handle toggles the
# internal layer, so the socket unplug at step 1 happens with the door open.
for i, token in enumerate(PUMP.split(", ")):
    clock.set(40.0 + 17.0 * i if i < 7 else 160.6)
    event = session.act(ItemId(token[0], int(token[2:])))
    door = "open" if event.door_state_at_event else "closed"
    flag = "  <-- gating violation" if event.gating_violation else ""
    print(f"  t={event.timestamp:7.1f}s  {event.verb:8s} {event.item}  door={door}{flag}")
    if i < 7:
        session.advance("next")

print(f"phase: {session.phase}, door open: {session.door_open}")
print(f"elapsed: {session.elapsed_ms():.0f} ms")
log.close()

report = score_session("logs/demo_session.jsonl", seq)
print(f"scored from the log: time={report.completion_time_s}s "
      f"accuracy={report.accuracy} violations={report.gating_violations}")

# Acting on an internal item with the door closed is recorded, not blocked.
session2 = GuidanceSession(schema)
session2.begin_capture()
session2.mark_awaiting()
session2.install_sequence(seq)
event = session2.act(ItemId("S", 2))
print(f"acting S_02 with the door closed: violation={event.gating_violation}")
