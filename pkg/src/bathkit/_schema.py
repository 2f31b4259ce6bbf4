"""Tiny helpers for validating bathkit JSON documents.

Errors carry a JSON-pointer so callers can report the exact location of a
schema violation.
"""

from .errors import SchemaError


def require(obj: dict, key: str, pointer: str):
    """Fetch obj[key], raising a SchemaError pointing at the missing key."""
    if not isinstance(obj, dict):
        raise SchemaError(pointer or "/", f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(f"{pointer}/{key}", "missing required key")
    return obj[key]


def require_number(obj: dict, key: str, pointer: str) -> float:
    value = require(obj, key, pointer)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{pointer}/{key}", f"expected a number, got {value!r}")
    return float(value)


def require_list(obj: dict, key: str, pointer: str) -> list:
    value = require(obj, key, pointer)
    if not isinstance(value, list):
        raise SchemaError(f"{pointer}/{key}", f"expected an array, got {type(value).__name__}")
    return value
