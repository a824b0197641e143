# Instruction text to command sequence, end to end, fully offline.
#
# The pipeline has four stages: ingest (normalize the raw text), assemble
# (the three-part prompt: context, instruction, reinforcement), complete
# (one round trip to a chat-completion backend; here the scripted one),
# and parse (strict segmentation of the reply into validated commands).

from panelguide.cli import bundled_fixtures_dir
from panelguide.commands import parse_reply, render_sequence
from panelguide.gateway import CompletionRequest, ScriptedBackend, complete
from panelguide.ingest import ingest_file
from panelguide.panel import default_schema
from panelguide.prompts import build_bundle

schema = default_schema()
fixtures = bundled_fixtures_dir()

doc = ingest_file(fixtures / "pump.txt")
print(f"ingested {doc.id!r}: {doc.word_count} words from {doc.source}")

bundle = build_bundle(schema, doc)
print(f"prompt parts: context={len(bundle.context.split())}w "
      f"instruction={len(bundle.instruction.split())}w "
      f"reinforcement={len(bundle.reinforcement.split())}w "
      f"total={bundle.total_words}w")
print()
print("reinforcement directive:")
print(" ", bundle.reinforcement)
print()

backend = ScriptedBackend(fixtures)
result = complete(CompletionRequest(prompt=bundle.render(), fixture_id=doc.id), backend)
print(f"model reply ({result.backend}): {result.text!r}")

seq, report = parse_reply(result.text, schema, source_doc=doc.id)
print(f"parsed {report.token_count} commands in {report.mode} mode:")
for i, (item, verb) in enumerate(seq.steps):
    print(f"  step {i}: {verb} {item}")
print()
print("canonical rendering:", render_sequence(seq))

# Lenient mode recovers tokens from decorated replies and reports the rest.
noisy = "1. turn H_00\n2. unplug S_02\n(done)"
seq2, report2 = parse_reply(noisy, schema, mode="lenient")
print()
print(f"lenient parse of {noisy!r}:")
print("  items:", [str(i) for i in seq2.items()])
print("  rejected fragments:", list(report2.rejected_fragments))
