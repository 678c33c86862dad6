# Adapted from https://github.com/langchain-ai/langchain/blob/master/libs/core/langchain_core/utils/_merge.py

from __future__ import annotations

from typing import Any


def merge_dicts(left: dict[str, Any], *others: dict[str, Any]) -> dict[str, Any]:
    """Deep-merge override dicts into a (config) dict.

    Nested dicts are merged key by key; any other value in a later dict
    replaces the earlier one, except that a `None` never overwrites an
    existing value.

    Args:
        left: The base dictionary (left unmodified).
        others: Override dictionaries, applied in order.

    Returns:
        The merged dictionary.

    Raises:
        TypeError: If a key holds a dict on one side and a non-dict on the other.

    Example:
        If left = {"bias": {"epsilon": 0.0, "convention": "inversion"}} and
        right = {"bias": {"epsilon": 0.3}}, the merge is
        {"bias": {"epsilon": 0.3, "convention": "inversion"}}.
    """
    merged = left.copy()
    for right in others:
        for right_k, right_v in right.items():
            left_v = merged.get(right_k, None)

            if right_v is None:
                if right_k not in merged:
                    merged[right_k] = None
            elif left_v is None:
                merged[right_k] = right_v
            elif isinstance(left_v, dict) and isinstance(right_v, dict):
                merged[right_k] = merge_dicts(left_v, right_v)
            elif isinstance(left_v, dict) or isinstance(right_v, dict):
                raise TypeError(
                    f'"{right_k}" is a {type(left_v).__name__} in the base but the '
                    f"override gives a {type(right_v).__name__}."
                )
            else:
                merged[right_k] = right_v
    return merged


def nested(path: str, value: Any) -> dict[str, Any]:
    """Expand a dotted path into a nested dict: `nested("a.b", 1) == {"a": {"b": 1}}`."""
    out: Any = value
    for key in reversed(path.split(".")):
        out = {key: out}
    return out
