"""Instruction substitution: swap single instructions for equivalents.

Unlike the arithmetic encoder this never builds mixed boolean-arithmetic
chains and never claims scratch registers; every rule is a one- or
two-instruction identity over the instruction's own operands.
"""
from __future__ import annotations

from ..mir.core import BasicBlock, Function, Imm, Instruction, Reg
from .context import PassContext, ins


def _zero_idiom(i, rng):
    if i.opcode == "const" and i.srcs[0].value == 0:
        d = i.dst.name
        return [ins("xor", d, d, d)]
    return None


def _mov_xor_pair(i, rng):
    if i.opcode == "mov":
        d, s = i.dst.name, i.srcs[0].name
        if d != s and s not in ("SP", "BP"):
            return [ins("xor", d, d, d), ins("xor", d, d, s)]
    return None


def _add_neg_imm(i, rng):
    if i.opcode == "add" and isinstance(i.srcs[1], Imm):
        return [Instruction("sub", i.dst,
                            (i.srcs[0], Imm(-i.srcs[1].value)))]
    return None


def _sub_neg_imm(i, rng):
    if i.opcode == "sub" and isinstance(i.srcs[1], Imm):
        return [Instruction("add", i.dst,
                            (i.srcs[0], Imm(-i.srcs[1].value)))]
    return None


def _shl_pow2_mul(i, rng):
    if i.opcode == "shl" and isinstance(i.srcs[1], Imm):
        count = i.srcs[1].value
        if count < 64:
            return [Instruction("mul", i.dst,
                                (i.srcs[0], Imm(1 << count)))]
    return None


_RULES = (_zero_idiom, _mov_xor_pair, _add_neg_imm, _sub_neg_imm,
          _shl_pow2_mul)


def substitute(f: Function, ctx: PassContext, density: float = 1.0) -> Function:
    rng = ctx.rng
    blocks = []
    for b in f.blocks:
        instrs = []
        for i in b.instrs:
            replacement = None
            if rng.random() < density:
                for rule in _RULES:
                    replacement = rule(i, rng)
                    if replacement is not None:
                        break
            instrs.extend(replacement if replacement is not None else [i])
        blocks.append(BasicBlock(b.id, tuple(instrs), b.terminator))
    return Function(f.name, f.params, tuple(blocks), f.entry_block,
                    f.functionality_tag)
