"""Obfuscating program transformations over the mini-IR.

Every pass is a pure function ``(Function, PassContext, **params) -> Function``
that preserves input/output behavior. PassContext tracks which scratch
registers and spill slots earlier passes in a stack already claimed, so
passes compose without trampling each other.
"""
from .context import (SCRATCH_POOL, SLOT_FLOOR, PassContext, TransformError,
                      bp_slot, ins)
from .encodings import encode_arithmetic, encode_data, encode_literals
from .flatten import flatten
from .labels import (CLEAN, CONSTRUCTIONS, LABELS, check_construction,
                     check_label)
from .opaque import add_opaque
from .substitution import substitute
from .virtualize import virtualize

PASSES = {
    "EncA": encode_arithmetic,
    "EncD": encode_data,
    "EncL": encode_literals,
    "AddO": add_opaque,
    "Flat": flatten,
    "Virt": virtualize,
    "Sub": substitute,
}


def apply_pass(f, label, ctx, params=None):
    """Apply the pass named by ``label`` with keyword ``params``."""
    check_label(label)
    return PASSES[label](f, ctx, **(params or {}))


__all__ = [
    "SCRATCH_POOL", "SLOT_FLOOR", "PassContext", "TransformError",
    "bp_slot", "ins",
    "LABELS", "CLEAN", "CONSTRUCTIONS", "check_label", "check_construction",
    "PASSES", "apply_pass",
    "encode_arithmetic", "encode_data", "encode_literals",
    "substitute", "add_opaque", "flatten", "virtualize",
]
