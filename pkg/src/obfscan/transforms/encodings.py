"""Encoding passes: arithmetic rewriting, literal pooling, data encoding."""
from __future__ import annotations

from ..mir.core import (MASK64, BasicBlock, Function, Imm, Instruction, Jump,
                        static_bp_stores_loads)
from ..mir.core import Mem as MirMem
from .context import PassContext, TransformError, bp_slot, ins

# Each identity maps one instruction to a short mixed boolean-arithmetic
# sequence computing the same 64-bit value; the destination is written
# last so sources stay readable throughout.


def _add_xor_carry(d, a, b, t1, t2):
    return [ins("xor", t1, a, b), ins("and", t2, a, b),
            ins("add", t2, t2, t2), ins("add", d, t1, t2)]


def _add_or_and(d, a, b, t1, t2):
    return [ins("or", t1, a, b), ins("and", t2, a, b),
            ins("add", d, t1, t2)]


def _sub_complement(d, a, b, t1, t2):
    return [ins("not", t1, b), ins("add", t1, a, t1),
            ins("add", d, t1, 1)]


def _xor_or_minus_and(d, a, b, t1, t2):
    return [ins("or", t1, a, b), ins("and", t2, a, b),
            ins("sub", d, t1, t2)]


MBA_POOL = {
    "add": (_add_xor_carry, _add_or_and),
    "sub": (_sub_complement,),
    "xor": (_xor_or_minus_and,),
}


def encode_arithmetic(f: Function, ctx: PassContext, density: float = 1.0) -> Function:
    """Rewrite add/sub/xor instructions into equivalent mixed sequences."""
    t1, t2 = ctx.claim_regs(f, 2, "arithmetic encoding")
    rng = ctx.rng
    blocks = []
    for b in f.blocks:
        instrs = []
        for i in b.instrs:
            rules = MBA_POOL.get(i.opcode)
            if rules and rng.random() < density:
                rule = rules[rng.randrange(len(rules))]
                instrs.extend(rule(i.dst, i.srcs[0], i.srcs[1], t1, t2))
            else:
                instrs.append(i)
        blocks.append(BasicBlock(b.id, tuple(instrs), b.terminator))
    return Function(f.name, f.params, tuple(blocks), f.entry_block,
                    f.functionality_tag)


def encode_literals(f: Function, ctx: PassContext, density: float = 1.0) -> Function:
    """Replace const instructions with loads from a masked literal pool.

    A new entry block fills one pool slot per encoded literal with a
    masked value; each original const becomes a load plus the unmasking
    operation, so the literal itself never appears in the rewritten code.
    """
    rng = ctx.rng
    picked = []  # (block_id, instr_index, value)
    for b in f.blocks:
        for idx, i in enumerate(b.instrs):
            if i.opcode == "const" and rng.random() < density:
                picked.append((b.id, idx, i.srcs[0].value))
    if not picked:
        return f
    (temp,) = ctx.claim_regs(f, 1, "literal encoding")
    base = ctx.alloc_slots(f, len(picked))
    (pool_id,) = ctx.fresh_ids(f, "lit", 1)

    plans = {}
    pool = []
    for n, (bid, idx, value) in enumerate(picked):
        key = rng.getrandbits(64)
        if rng.random() < 0.5:
            masked, unmask_op = value ^ key, ("xor", key)
        else:
            masked, unmask_op = (value - key) & MASK64, ("add", key)
        pool.append(ins("const", temp, masked))
        pool.append(ins("store", bp_slot(base + n), temp))
        plans[(bid, idx)] = (base + n, unmask_op)

    blocks = [BasicBlock(pool_id, tuple(pool), Jump(f.entry_block))]
    for b in f.blocks:
        instrs = []
        for idx, i in enumerate(b.instrs):
            plan = plans.get((b.id, idx))
            if plan is None:
                instrs.append(i)
            else:
                slot, (op, key) = plan
                d = i.dst
                instrs.append(Instruction("load", d, (bp_slot(slot),)))
                instrs.append(ins(op, d, d, key))
        blocks.append(BasicBlock(b.id, tuple(instrs), b.terminator))
    return Function(f.name, f.params, tuple(blocks), pool_id,
                    f.functionality_tag)


def _poly_codec(rng):
    a = rng.getrandbits(64) | 1
    b = rng.getrandbits(64)
    a_inv = pow(a, -1, 1 << 64)

    def enc(v):
        return (a * v + b) & MASK64

    store_seq = lambda t, src: [ins("mul", t, src, a), ins("add", t, t, b)]
    load_seq = lambda d: [ins("sub", d, d, b), ins("mul", d, d, a_inv)]
    return enc, store_seq, load_seq


def _xor_codec(rng):
    k = rng.getrandbits(64)
    enc = lambda v: v ^ k
    store_seq = lambda t, src: [ins("xor", t, src, k)]
    load_seq = lambda d: [ins("xor", d, d, k)]
    return enc, store_seq, load_seq


def _add_codec(rng):
    k = rng.getrandbits(64)
    enc = lambda v: (v + k) & MASK64
    store_seq = lambda t, src: [ins("add", t, src, k)]
    load_seq = lambda d: [ins("sub", d, d, k)]
    return enc, store_seq, load_seq


CODECS = {"poly": _poly_codec, "xor": _xor_codec, "add": _add_codec}


def encode_data(f: Function, ctx: PassContext, codec: str | None = None) -> Function:
    """Keep one local variable encoded in memory.

    Targets a BP slot that is both statically stored and statically
    loaded; every store is wrapped with the encoder and every load with
    the decoder, so the plaintext value never rests in memory. Slots
    reached through computed addresses are never touched.
    """
    stores, loads = static_bp_stores_loads(f)
    eligible = sorted(stores & loads)
    if not eligible:
        raise TransformError("no statically stored+loaded local to encode")
    slot = ctx.rng.choice(eligible)
    name = codec if codec is not None else ctx.rng.choice(sorted(CODECS))
    if name not in CODECS:
        raise TransformError(f"unknown data codec {name!r}")
    enc, store_seq, load_seq = CODECS[name](ctx.rng)
    (temp,) = ctx.claim_regs(f, 1, "data encoding")

    blocks = []
    for b in f.blocks:
        instrs = []
        for i in b.instrs:
            if (i.opcode == "store" and isinstance(i.dst, MirMem)
                    and i.dst.base == "BP" and i.dst.offset == slot):
                src = i.srcs[0]
                if isinstance(src, Imm):
                    instrs.append(Instruction(
                        "store", i.dst, (Imm(enc(src.value)),)))
                else:
                    instrs.extend(store_seq(temp, src.name))
                    instrs.append(ins("store", i.dst, temp))
            elif (i.opcode == "load" and i.srcs[0].base == "BP"
                  and i.srcs[0].offset == slot):
                instrs.append(i)
                instrs.extend(load_seq(i.dst))
            else:
                instrs.append(i)
        blocks.append(BasicBlock(b.id, tuple(instrs), b.terminator))
    return Function(f.name, f.params, tuple(blocks), f.entry_block,
                    f.functionality_tag)
