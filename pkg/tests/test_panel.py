import json

import pytest

from panelguide.errors import ItemError, SchemaError
from panelguide.panel import (
    CATEGORIES,
    ItemId,
    default_schema,
    default_schema_text,
    is_internal,
    load_schema,
    parse_item_id,
    render_item,
)


def test_exactly_seven_categories_with_fixed_layers():
    assert len(CATEGORIES) == 7
    layers = {c.code: c.layer for c in CATEGORIES}
    assert layers == {
        "G": "external",
        "B": "external",
        "H": "external",
        "K": "external",
        "T": "external",
        "F": "internal",
        "S": "internal",
    }


def test_category_verbs():
    verbs = {c.code: c.verb for c in CATEGORIES}
    assert verbs == {
        "G": "read",
        "B": "press",
        "H": "turn",
        "K": "turn",
        "T": "flip",
        "F": "replace",
        "S": "unplug",
    }


def test_parse_button(schema):
    assert parse_item_id("B_04", schema) == ItemId("B", 4)


def test_parse_the_only_handle(schema):
    assert parse_item_id("H_00", schema) == ItemId("H", 0)


def test_parse_gauge_out_of_range(schema):
    with pytest.raises(ItemError) as exc:
        parse_item_id("G_03", schema)
    assert exc.value.reason == "index-out-of-range"


def test_parse_trims_whitespace(schema):
    assert parse_item_id("  S_10 ", schema) == ItemId("S", 10)


def test_parse_malformed_tokens(schema):
    for bad in ("B04", "B_4", "b_04", "B_004", "B 04", "", "_04"):
        with pytest.raises(ItemError) as exc:
            parse_item_id(bad, schema)
        assert exc.value.reason == "malformed-token"


def test_parse_unknown_category(schema):
    with pytest.raises(ItemError) as exc:
        parse_item_id("X_00", schema)
    assert exc.value.reason == "unknown-category"


def test_is_internal_examples(schema):
    assert is_internal(ItemId("S", 4), schema) is True
    assert is_internal(ItemId("B", 0), schema) is False
    assert is_internal(ItemId("F", 2), schema) is True


def test_is_internal_rejects_undeclared_item(schema):
    with pytest.raises(ItemError):
        is_internal(ItemId("S", 11), schema)


def test_default_schema_matches_declared_ranges(schema):
    assert schema.counts == {"G": 3, "B": 9, "H": 1, "K": 5, "T": 5, "F": 3, "S": 11}
    assert schema.door_item == ItemId("H", 0)
    assert schema.census() == (37, 34)


def test_round_trip_every_enumerable_item(schema):
    items = schema.items()
    assert len(items) == 37
    for item in items:
        assert parse_item_id(render_item(item), schema) == item


def test_layer_partition_internal_xor_external(schema):
    internal = [i for i in schema.items() if is_internal(i, schema)]
    external = [i for i in schema.items() if not is_internal(i, schema)]
    assert len(internal) + len(external) == 37
    assert {i.category for i in internal} == {"F", "S"}


def test_load_schema_rejects_non_handle_door():
    doc = json.loads(default_schema_text())
    doc["door_item"] = "B_00"
    with pytest.raises(SchemaError) as exc:
        load_schema(doc)
    assert exc.value.field_path == "door_item"


def test_load_schema_omitting_sockets_gives_empty_range(schema):
    doc = json.loads(default_schema_text())
    del doc["categories"]["S"]
    trimmed = load_schema(doc)
    assert trimmed.category_count("S") == 0
    with pytest.raises(ItemError) as exc:
        parse_item_id("S_00", trimmed)
    assert exc.value.reason == "index-out-of-range"


def test_load_schema_rejects_wrong_layer():
    doc = json.loads(default_schema_text())
    doc["categories"]["B"]["layer"] = "internal"
    with pytest.raises(SchemaError) as exc:
        load_schema(doc)
    assert exc.value.field_path == "categories.B.layer"


def test_load_schema_rejects_interactable_gauges():
    doc = json.loads(default_schema_text())
    doc["categories"]["G"]["interactable"] = True
    with pytest.raises(SchemaError) as exc:
        load_schema(doc)
    assert exc.value.field_path == "categories.G.interactable"


def test_load_schema_rejects_bad_json():
    with pytest.raises(SchemaError):
        load_schema("{not json")


def test_load_schema_rejects_unknown_category_letter():
    doc = json.loads(default_schema_text())
    doc["categories"]["Z"] = {"count": 1}
    with pytest.raises(SchemaError) as exc:
        load_schema(doc)
    assert "Z" in exc.value.field_path


def test_load_schema_door_outside_range():
    doc = json.loads(default_schema_text())
    doc["door_item"] = "H_01"
    with pytest.raises(SchemaError):
        load_schema(doc)


def test_schema_is_immutable(schema):
    with pytest.raises(AttributeError):
        schema.name = "other"
