"""panelguide: compile textual maintenance instructions into validated
control-panel interaction sequences and guide an operator through them.

Submodules: panel (digital twin), ingest (text/OCR acquisition), prompts
(three-part prompt assembly), gateway (completion backends), commands
(reply parsing), session (live task state machine), wire/server (line
protocol and transports), analytics (scoring and signed-rank statistics),
simulate (scripted operator), cli (entry point).
"""

__version__ = "0.1.0"
