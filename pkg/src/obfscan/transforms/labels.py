"""Canonical transformation labels and their construction variants."""
from __future__ import annotations

# Order is load-bearing: multi-label vectors and reports use it as-is.
LABELS = ("EncA", "EncD", "EncL", "AddO", "Flat", "Virt", "Sub")

CLEAN = "Clean"

CONSTRUCTIONS = {
    "EncA": ("default",),
    "EncD": ("poly", "xor", "add"),
    "EncL": ("default",),
    "AddO": ("arithmetic", "mba", "aliasing", "symbolic_memory", "floats"),
    "Flat": ("switch_based", "ifnest_based"),
    "Virt": ("switch_dispatch", "linear_dispatch", "ifnest_dispatch"),
    "Sub": ("default",),
}


def check_label(label: str):
    if label not in LABELS:
        raise ValueError(f"unknown transformation label {label!r}")


def check_construction(label: str, construction: str):
    check_label(label)
    options = CONSTRUCTIONS[label]
    if construction not in options:
        raise ValueError(
            f"{label} has no construction {construction!r}; "
            f"valid: {options or '(none)'}")
