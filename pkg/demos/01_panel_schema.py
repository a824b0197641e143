# The control-panel digital twin: items, layers, and the door gate.
#
# Every other capability validates against this schema, so this is the
# natural place to start. The bundled default describes a vacuum-unit
# panel: 37 items across seven categories, 34 of them operable (the three
# gauges are display-only instruments).

from panelguide.panel import CATEGORIES, default_schema, is_internal, parse_item_id

schema = default_schema()

total, interactable = schema.census()
print(f"panel {schema.name!r}: {total} items, {interactable} interactable")
print(f"door item: {schema.door_item} (turning it opens/closes the internal layer)")
print()

# Category inventory, in the stable ordering used throughout.
for cat in CATEGORIES:
    count = schema.category_count(cat.code)
    flag = "interactable" if schema.interactable[cat.code] else "display-only"
    print(f"  {cat.code} {cat.name:7s} x{count:2d}  layer={cat.layer:8s} verb={cat.verb:8s} {flag}")
print()

# Item tokens parse strictly: letter, underscore, two digits.
for token in ("B_04", "H_00", "S_10"):
    item = parse_item_id(token, schema)
    layer = "internal" if is_internal(item, schema) else "external"
    print(f"  {token} -> category {item.category}, index {item.index}, {layer}, verb {item.verb!r}")

# Out-of-range and malformed tokens are rejected with precise reasons.
for bad in ("G_03", "X_00", "b_04"):
    try:
        parse_item_id(bad, schema)
    except Exception as exc:
        print(f"  {bad!r} rejected: {exc}")
