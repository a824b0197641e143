"""Control-panel digital twin: item identities, layers, verbs, door gating.

The panel has two layers. External items (gauges, buttons, handle, knobs,
toggles) are always reachable; internal items (fuses, sockets) sit behind a
door controlled by a handle. Every other module validates item tokens against
a :class:`PanelSchema` loaded from a JSON document; the bundled default
describes the vacuum-unit panel used throughout the test fixtures.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ItemError, SchemaError

EXTERNAL = "external"
INTERNAL = "internal"


@dataclass(frozen=True)
class ItemCategory:
    """One of the seven fixed item categories."""

    code: str
    name: str
    layer: str
    verb: str


# Canonical category table. Declaration order is the stable ordering used
# everywhere items are enumerated (context building, census output).
CATEGORIES: tuple[ItemCategory, ...] = (
    ItemCategory("G", "gauge", EXTERNAL, "read"),
    ItemCategory("B", "button", EXTERNAL, "press"),
    ItemCategory("H", "handle", EXTERNAL, "turn"),
    ItemCategory("K", "knob", EXTERNAL, "turn"),
    ItemCategory("T", "toggle", EXTERNAL, "flip"),
    ItemCategory("F", "fuse", INTERNAL, "replace"),
    ItemCategory("S", "socket", INTERNAL, "unplug"),
)

CATEGORY_BY_CODE: dict[str, ItemCategory] = {c.code: c for c in CATEGORIES}

# Gauges are instruments: they are never operated, so they default to
# non-interactable and a schema may not override that.
_DEFAULT_INTERACTABLE = {c.code: c.code != "G" for c in CATEGORIES}

ITEM_RE = re.compile(r"^([A-Z])_([0-9]{2})$")


@dataclass(frozen=True, order=True)
class ItemId:
    """A single panel item, e.g. button 4 rendered as ``B_04``."""

    category: str
    index: int

    def __str__(self) -> str:
        return f"{self.category}_{self.index:02d}"

    @property
    def verb(self) -> str:
        return CATEGORY_BY_CODE[self.category].verb


def render_item(item: ItemId) -> str:
    """Canonical text form: category letter, underscore, two-digit index."""
    return str(item)


@dataclass(frozen=True)
class PanelSchema:
    """Immutable panel inventory; safe to share across threads."""

    name: str
    counts: dict[str, int]  # category code -> number of items (indices 0..n-1)
    door_item: ItemId
    interactable: dict[str, bool]  # category code -> operable flag

    def category_count(self, code: str) -> int:
        return self.counts.get(code, 0)

    def is_valid_item(self, item: ItemId) -> bool:
        return item.category in CATEGORY_BY_CODE and 0 <= item.index < self.category_count(item.category)

    def is_interactable(self, item: ItemId) -> bool:
        return self.interactable.get(item.category, False)

    def items(self, interactable_only: bool = False) -> list[ItemId]:
        """All items in stable order (category declaration order, ascending index)."""
        out = []
        for cat in CATEGORIES:
            if interactable_only and not self.interactable.get(cat.code, False):
                continue
            out.extend(ItemId(cat.code, i) for i in range(self.counts.get(cat.code, 0)))
        return out

    def census(self) -> tuple[int, int]:
        """(total item count, interactable item count)."""
        total = sum(self.counts.values())
        inter = sum(n for code, n in self.counts.items() if self.interactable.get(code, False))
        return total, inter


def parse_item_id(text: str, schema: PanelSchema) -> ItemId:
    """Resolve an item token like ``B_04`` against the schema.

    Raises :class:`ItemError` for a malformed token, an unknown category
    letter, or an index outside the schema-declared range.
    """
    token = text.strip()
    m = ITEM_RE.match(token)
    if not m:
        raise ItemError(f"malformed item token {token!r}", reason="malformed-token")
    letter, digits = m.group(1), m.group(2)
    if letter not in CATEGORY_BY_CODE:
        raise ItemError(f"unknown category letter {letter!r} in {token!r}", reason="unknown-category")
    index = int(digits)
    count = schema.category_count(letter)
    if index >= count:
        raise ItemError(
            f"{token}: index {index} outside declared range (category {letter} has {count} items)",
            reason="index-out-of-range",
        )
    return ItemId(letter, index)


def is_internal(item: ItemId, schema: PanelSchema) -> bool:
    """True iff the item lives on the door-gated internal layer."""
    if not schema.is_valid_item(item):
        raise ItemError(f"{item} not declared by schema {schema.name!r}", reason="unknown-item")
    return CATEGORY_BY_CODE[item.category].layer == INTERNAL


def load_schema(document: str | dict) -> PanelSchema:
    """Parse and validate a panel schema document (JSON text or parsed dict).

    The document format::

        {
          "name": "vacuum-unit",
          "door_item": "H_00",
          "categories": {
            "B": {"count": 9, "layer": "external", "verb": "press", "interactable": true},
            ...
          }
        }

    ``layer`` and ``verb``, when present, must match the canonical values for
    the category; ``interactable`` defaults to true except for gauges, which
    are always display-only. Categories omitted from the document get an
    empty range. Raises :class:`SchemaError` with a field path on violation.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}", field_path="") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError("missing or empty", field_path="name")

    cats = doc.get("categories")
    if not isinstance(cats, dict):
        raise SchemaError("missing object", field_path="categories")

    counts: dict[str, int] = {c.code: 0 for c in CATEGORIES}
    interactable = dict(_DEFAULT_INTERACTABLE)
    for letter, entry in cats.items():
        cat = CATEGORY_BY_CODE.get(letter)
        if cat is None:
            raise SchemaError(f"unknown category letter {letter!r}", field_path=f"categories.{letter}")
        if not isinstance(entry, dict):
            raise SchemaError("must be an object", field_path=f"categories.{letter}")
        count = entry.get("count")
        if not isinstance(count, int) or count < 0:
            raise SchemaError("count must be a non-negative integer", field_path=f"categories.{letter}.count")
        if "layer" in entry and entry["layer"] != cat.layer:
            raise SchemaError(
                f"layer must be {cat.layer!r} for category {letter}",
                field_path=f"categories.{letter}.layer",
            )
        if "verb" in entry and entry["verb"] != cat.verb:
            raise SchemaError(
                f"verb must be {cat.verb!r} for category {letter}",
                field_path=f"categories.{letter}.verb",
            )
        flag = entry.get("interactable", _DEFAULT_INTERACTABLE[letter])
        if not isinstance(flag, bool):
            raise SchemaError("interactable must be a boolean", field_path=f"categories.{letter}.interactable")
        if letter == "G" and flag:
            raise SchemaError("gauges are display-only", field_path="categories.G.interactable")
        counts[letter] = count
        interactable[letter] = flag

    door_text = doc.get("door_item")
    if not isinstance(door_text, str):
        raise SchemaError("missing", field_path="door_item")
    m = ITEM_RE.match(door_text.strip())
    if not m:
        raise SchemaError(f"malformed item token {door_text!r}", field_path="door_item")
    door = ItemId(m.group(1), int(m.group(2)))
    if door.category != "H":
        raise SchemaError(f"door item must be a handle (H), got {door}", field_path="door_item")
    if door.index >= counts.get("H", 0):
        raise SchemaError(f"{door} outside declared handle range", field_path="door_item")
    if not interactable.get("H", False):
        raise SchemaError("handle category must be interactable", field_path="categories.H.interactable")

    return PanelSchema(name=name, counts=counts, door_item=door, interactable=interactable)


def load_schema_file(path: str | Path) -> PanelSchema:
    return load_schema(Path(path).read_text(encoding="utf-8"))


def default_schema_text() -> str:
    """The bundled default panel document (JSON text)."""
    return resources.files("panelguide.data").joinpath("default_panel.json").read_text(encoding="utf-8")


def default_schema() -> PanelSchema:
    return load_schema(default_schema_text())
