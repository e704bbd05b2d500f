"""MiniLang runtime values.

Values are plain Python data: int, bool, str, list (array), None (unit).
Python would happily treat True == 1, so every comparison goes through the
type-strict helpers here instead of bare ``==``.
"""

from __future__ import annotations

Value = object  # int | bool | str | list | None

def variant(value: Value) -> str:
    # bool first: bool is an int subclass
    if isinstance(value, bool):
        return "Bool"
    if isinstance(value, int):
        return "Int"
    if isinstance(value, str):
        return "Str"
    if isinstance(value, list):
        return "Array"
    if value is None:
        return "Unit"
    raise TypeError(f"not a MiniLang value: {value!r}")


def values_equal(a: Value, b: Value) -> bool:
    """Deep structural equality; values of different variants are unequal."""
    va, vb = variant(a), variant(b)
    if va != vb:
        return False
    if va == "Array":
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    return a == b


def copy_value(value: Value) -> Value:
    if isinstance(value, list):
        return [copy_value(v) for v in value]
    return value


def format_value(value: Value) -> str:
    """Human-facing rendering: what print() emits."""
    v = variant(value)
    if v == "Bool":
        return "true" if value else "false"
    if v == "Int":
        return str(value)
    if v == "Str":
        return value
    if v == "Unit":
        return "unit"
    return "[" + ", ".join(repr_value(x) for x in value) + "]"


def repr_value(value: Value) -> str:
    """Source-literal-style rendering (strings quoted), used inside arrays,
    in trace serialization, and in prompts."""
    v = variant(value)
    if v == "Str":
        escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    if v == "Array":
        return "[" + ", ".join(repr_value(x) for x in value) + "]"
    return format_value(value)


def to_json(value: Value) -> object:
    """JSON encoding that keeps variants distinct (unit needs a wrapper)."""
    v = variant(value)
    if v == "Unit":
        return {"unit": True}
    if v == "Array":
        return [to_json(x) for x in value]
    return value


def from_json(obj: object) -> Value:
    if isinstance(obj, dict):
        if obj.get("unit") is True:
            return None
        raise ValueError(f"not a value encoding: {obj!r}")
    if isinstance(obj, list):
        return [from_json(x) for x in obj]
    if isinstance(obj, (bool, int, str)):
        return obj
    if obj is None:
        return None
    raise ValueError(f"not a value encoding: {obj!r}")
