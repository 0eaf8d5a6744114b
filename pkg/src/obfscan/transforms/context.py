"""Shared plumbing for the obfuscating passes.

Passes never analyze liveness. They rely on two conventions instead:
generated functions only use R0..R7 for program state, so R8..R15 are a
scratch pool a pass may claim by simply referencing them (the next pass
sees them as used); and BP-relative slots strictly below the lowest
statically referenced offset (floor -64) are free scratch memory, since
dynamic addressing is confined to the region above by construction.
"""
from __future__ import annotations

import random

from ..mir.core import (FImm, Function, Imm, Instruction, Reg,
                        registers_used, static_bp_offsets)
from ..mir.core import Mem as MirMem

SCRATCH_POOL = tuple(f"R{i}" for i in range(8, 16))
SLOT_FLOOR = -63


class TransformError(Exception):
    """The pass cannot be applied to this function as given."""


def ins(opcode: str, dst=None, *srcs) -> Instruction:
    """Instruction shorthand: str means register, int means immediate."""
    def conv(x):
        if isinstance(x, str):
            return Reg(x)
        if isinstance(x, float):
            return FImm(x)
        if isinstance(x, int):
            return Imm(x)
        return x
    return Instruction(opcode, conv(dst), tuple(conv(s) for s in srcs))


def bp_slot(offset: int) -> MirMem:
    return MirMem("BP", offset)


class PassContext:
    """Carries the recipe RNG plus per-function claim helpers."""

    def __init__(self, rng: random.Random):
        self.rng = rng

    def claim_regs(self, f: Function, count: int, why: str) -> list:
        free = [r for r in SCRATCH_POOL if r not in registers_used(f)]
        if len(free) < count:
            raise TransformError(
                f"{why} needs {count} scratch registers, {len(free)} free")
        return free[:count]

    def alloc_slots(self, f: Function, count: int,
                    taken=()) -> int:
        """Base of a fresh region of ``count`` BP slots below everything.

        Returns the lowest offset; the region is base..base+count-1 and
        sits strictly under both SLOT_FLOOR and every statically
        referenced slot.
        """
        floor = min([*static_bp_offsets(f), *taken, SLOT_FLOOR])
        return floor - count

    def fresh_ids(self, f: Function, hint: str, count: int,
                  taken=()) -> list:
        used = set(f.block_ids) | set(taken)
        out = []
        n = 0
        while len(out) < count:
            cand = f"{hint}{n}"
            if cand not in used:
                used.add(cand)
                out.append(cand)
            n += 1
        return out

