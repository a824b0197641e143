"""Three-part prompt assembly: context, instruction, reinforcement.

The context introduces the operation and enumerates every interactable item
name; the instruction is the ingested document verbatim; the reinforcement
pins the output grammar the command parser accepts. Parts are joined by
blank lines and nothing else, so identical inputs always render identical
prompts.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .ingest import InstructionDocument
from .panel import CATEGORIES, CATEGORY_BY_CODE, ItemId, PanelSchema


def _word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class PromptTemplates:
    """Versioned template set: context preamble and reinforcement directive."""

    preamble: str
    reinforcement: str


def load_templates(directory: str | Path | None = None) -> PromptTemplates:
    """Load a template set from a directory, or the bundled defaults."""
    if directory is None:
        root = resources.files("panelguide.data").joinpath("templates")
        preamble = root.joinpath("context_preamble.txt").read_text(encoding="utf-8")
        reinforcement = root.joinpath("reinforcement.txt").read_text(encoding="utf-8")
    else:
        d = Path(directory)
        preamble = (d / "context_preamble.txt").read_text(encoding="utf-8")
        reinforcement = (d / "reinforcement.txt").read_text(encoding="utf-8")
    return PromptTemplates(preamble=preamble.strip(), reinforcement=reinforcement.strip())


def build_context(schema: PanelSchema, task_preamble: str) -> str:
    """Compose the context part: preamble plus a generated inventory.

    The inventory names every interactable item exactly once, grouped by
    category in the fixed category order with the category's verb; ordering
    is deterministic for a given schema.
    """
    groups = []
    for cat in CATEGORIES:
        count = schema.category_count(cat.code)
        if count == 0 or not schema.interactable.get(cat.code, False):
            continue
        names = ", ".join(str(ItemId(cat.code, i)) for i in range(count))
        plural = cat.name if count == 1 else cat.name + "s"
        groups.append(f"{plural} you {cat.verb} ({names})")
    inventory = (
        f"The {schema.name} panel exposes these interactable items: " + "; ".join(groups) + "."
        if groups
        else f"The {schema.name} panel exposes no interactable items."
    )
    preamble = task_preamble.strip()
    return f"{preamble}\n{inventory}" if preamble else inventory


def build_reinforcement(schema: PanelSchema, templates: PromptTemplates | None = None) -> str:
    """The fixed output-format directive (schema-independent template)."""
    tpl = templates or load_templates()
    return tpl.reinforcement


@dataclass(frozen=True)
class PromptBundle:
    """The assembled three-part prompt."""

    context: str
    instruction: str
    reinforcement: str
    total_words: int

    def render(self) -> str:
        """Single prompt string: parts separated by blank lines."""
        return f"{self.context}\n\n{self.instruction}\n\n{self.reinforcement}"


def assemble(context: str, doc: InstructionDocument, reinforcement: str) -> PromptBundle:
    """Bundle the three parts verbatim; total_words is additive."""
    for label, part in (("context", context), ("instruction", doc.text), ("reinforcement", reinforcement)):
        if not part.strip():
            raise ValueError(f"prompt {label} part is empty")
    total = _word_count(context) + _word_count(doc.text) + _word_count(reinforcement)
    return PromptBundle(context=context, instruction=doc.text, reinforcement=reinforcement, total_words=total)


def build_bundle(
    schema: PanelSchema, doc: InstructionDocument, templates: PromptTemplates | None = None
) -> PromptBundle:
    """Convenience: context + instruction + reinforcement from a template set."""
    tpl = templates or load_templates()
    context = build_context(schema, tpl.preamble)
    return assemble(context, doc, build_reinforcement(schema, tpl))
