"""Opaque predicates: bogus conditional flow with an invariant outcome.

Each insertion splits a block, evaluates a predicate whose outcome is
fixed but not locally obvious, and branches on the zero flag between the
real continuation and a decoy block that jumps back to it. The decoy is
a lightly mutated fragment lifted from an unrelated routine, so dead
arms read like real code. A small share of insertions instead branch on
a genuinely data-dependent condition between two equivalent arms. The
comparison writing zf is always the last instruction before its branch;
passes and splits preserve that adjacency.
"""
from __future__ import annotations

import random

from ..mir.core import (FLAG_REGS, BasicBlock, Branch, Function, Imm,
                        Instruction, Jump, Reg)
from ..mir.core import Mem as MirMem
from .context import PassContext, TransformError, bp_slot, ins
from .labels import CONSTRUCTIONS

_GUEST_REGS = tuple(f"R{i}" for i in range(8))
_TWO_WAY_SHARE = 0.15


def _pred_arithmetic(ctx, t1, t2, alloc):
    rng = ctx.rng
    x = rng.choice(_GUEST_REGS)
    if rng.random() < 0.5:
        # x*(x+1) is always even
        body = [ins("add", t1, x, 1), ins("mul", t1, t1, x),
                ins("and", t1, t1, 1), ins("cmp_eq", t2, t1, 0)]
        return None, body, True
    # 7y^2 - 1 is never a square (both sides taken mod 8 stay disjoint)
    y = rng.choice(_GUEST_REGS)
    body = [ins("mul", t1, y, y), ins("mul", t1, t1, 7),
            ins("sub", t1, t1, 1), ins("mul", t2, x, x),
            ins("cmp_eq", t1, t1, t2)]
    return None, body, False


def _pred_mba(ctx, t1, t2, alloc):
    rng = ctx.rng
    x = rng.choice(_GUEST_REGS)
    y = rng.choice(_GUEST_REGS)
    if rng.random() < 0.5:
        # 2*(x|y) - (x^y) == x + y
        body = [ins("or", t1, x, y), ins("add", t1, t1, t1),
                ins("xor", t2, x, y), ins("sub", t1, t1, t2),
                ins("add", t2, x, y), ins("cmp_eq", t1, t1, t2)]
    else:
        # (x & ~y) + (~x & y) == x ^ y
        body = [ins("not", t1, y), ins("and", t1, x, t1),
                ins("not", t2, x), ins("and", t2, t2, y),
                ins("add", t1, t1, t2), ins("xor", t2, x, y),
                ins("cmp_eq", t1, t1, t2)]
    return None, body, True


def _pred_aliasing(ctx, t1, t2, alloc):
    x = ctx.rng.choice(_GUEST_REGS)
    s = alloc(2)
    body = [ins("store", bp_slot(s), x), ins("store", bp_slot(s + 1), x),
            ins("load", t1, bp_slot(s)), ins("load", t2, bp_slot(s + 1)),
            ins("cmp_eq", t1, t1, t2)]
    return None, body, True


def _pred_symbolic_memory(ctx, t1, t2, alloc):
    # table fills stay in the preceding block; a summary of the probe
    # block then sees a genuine read of unknown memory
    rng = ctx.rng
    x = rng.choice(_GUEST_REGS)
    base = alloc(8)
    fill_value = rng.getrandbits(8) | 1
    setup = [ins("store", bp_slot(base + i), fill_value) for i in range(8)]
    body = [ins("and", t1, x, 7), ins("mov", t2, "BP"),
            ins("add", t2, t2, base), ins("add", t2, t2, t1),
            ins("load", t1, MirMem(t2, 0)),
            ins("cmp_eq", t2, t1, fill_value)]
    return setup, body, True


def _pred_floats(ctx, t1, t2, alloc):
    rng = ctx.rng
    fa = rng.randrange(1, 65) / 8.0
    fb = rng.randrange(1, 65) / 8.0
    setup = [ins("fconst", "F0", fa), ins("fconst", "F1", fb)]
    body = [ins("fmul", "F2", "F0", "F1"),
            ins("fconst", "F3", fa * fb + 1.0),
            ins("fcmp_lt", t1, "F2", "F3"),
            ins("cmp_eq", t2, t1, 1)]
    return setup, body, True


_BUILDERS = {
    "arithmetic": _pred_arithmetic,
    "mba": _pred_mba,
    "aliasing": _pred_aliasing,
    "symbolic_memory": _pred_symbolic_memory,
    "floats": _pred_floats,
}

_MASK = (1 << 64) - 1
_PEERS = {"add": ("add", "sub", "xor"), "sub": ("sub", "add", "xor"),
          "xor": ("xor", "or", "and"), "or": ("or", "xor", "and"),
          "and": ("and", "or", "xor")}


def _decoy_instrs(ctx: PassContext, temps) -> list:
    """Fragment of another routine, lightly mutated.

    Register writes are retargeted into the claimed temps, with reads
    following the same map so the fragment's dataflow stays coherent.
    The block never executes, but it has to look like it could.
    """
    from ..families import FAMILY_NAMES, build_family
    rng = ctx.rng
    donor, _ = build_family(rng.choice(FAMILY_NAMES),
                            random.Random(rng.getrandbits(32)))
    pool = [b for b in donor.blocks if len(b.instrs) >= 2]
    frag = list(rng.choice(pool).instrs)
    if len(frag) > 5:
        start = rng.randrange(0, len(frag) - 4)
        frag = frag[start:start + rng.randrange(3, 6)]

    remap = {}

    def read(op):
        if isinstance(op, Reg):
            return Reg(remap[op.name]) if op.name in remap else op
        if isinstance(op, MirMem) and op.base in remap:
            return MirMem(remap[op.base], op.offset)
        return op

    out = []
    for i in frag:
        srcs = tuple(read(s) for s in i.srcs)
        opcode = i.opcode
        if srcs and isinstance(srcs[-1], Imm) and rng.random() < 0.4:
            v = (srcs[-1].value + rng.choice((-2, -1, 1, 2, 3))) & _MASK
            if opcode in ("udiv", "umod") and v == 0:
                v = 3
            srcs = srcs[:-1] + (Imm(v),)
        elif opcode in _PEERS and rng.random() < 0.3:
            opcode = rng.choice(_PEERS[opcode])
        dst = i.dst
        if isinstance(dst, Reg) and dst.name not in ("SP", "BP"):
            remap.setdefault(dst.name, rng.choice(temps))
            dst = Reg(remap[dst.name])
        elif isinstance(dst, MirMem):
            dst = read(dst)
        out.append(Instruction(opcode, dst, srcs))
    return out


def add_opaque(f: Function, ctx: PassContext, count: int = 8,
               constructions=None) -> Function:
    if constructions is None:
        constructions = list(CONSTRUCTIONS["AddO"])
        ctx.rng.shuffle(constructions)
    for c in constructions:
        if c not in _BUILDERS:
            raise TransformError(f"unknown opaque construction {c!r}")
    if count < 1:
        raise TransformError("opaque predicate count must be positive")
    t1, t2 = ctx.claim_regs(f, 2, "opaque predicates")
    rng = ctx.rng

    order = list(f.block_ids)
    ws = {b.id: (list(b.instrs), b.terminator) for b in f.blocks}
    # Splitting a block that holds predicate machinery could land a nested
    # insertion mid-computation and clobber t1/t2 or the float registers,
    # turning a decoy arm live. Such blocks never become split targets;
    # float-bearing blocks from earlier applications are shielded the
    # same way.
    protected = {b.id for b in f.blocks
                 if any(i.opcode.startswith("f") for i in b.instrs)}
    taken_ids = set(order)
    taken_slots = []

    def alloc(n):
        base = ctx.alloc_slots(f, n, taken=taken_slots)
        taken_slots.extend(range(base, base + n))
        return base

    def fresh(hint):
        out = ctx.fresh_ids(f, hint, 1, taken=taken_ids)[0]
        taken_ids.add(out)
        return out

    for i in range(count):
        kind = constructions[i % len(constructions)]
        candidates = [b for b in order if b not in protected]
        if not candidates:
            raise TransformError("no safe insertion points left")
        bid = rng.choice(candidates)
        instrs, term = ws[bid]
        hi = len(instrs)
        if (isinstance(term, Branch) and term.cond in FLAG_REGS
                and instrs and instrs[-1].opcode in ("cmp_eq", "cmp_lt")):
            hi -= 1
        idx = rng.randrange(0, hi + 1)
        first, second = instrs[:idx], instrs[idx:]

        rest_id = fresh("op_rest")
        if rng.random() < _TWO_WAY_SHARE:
            # Data-dependent split with equivalent arms: either side can
            # run, so nothing downstream may rely on which one does.
            twin_id = fresh("op_twin")
            pred = ins("cmp_lt", t1, rng.choice(_GUEST_REGS),
                       1 + rng.getrandbits(12))
            ws[bid] = (first + [pred], Branch(t1, rest_id, twin_id))
            ws[rest_id] = (second, term)
            ws[twin_id] = (list(second), term)
            pos = order.index(bid) + 1
            order[pos:pos] = [rest_id, twin_id]
            continue

        dead_id = fresh("op_dead")
        setup, body, truthy = _BUILDERS[kind](ctx, t1, t2, alloc)
        branch = (Branch("zf", rest_id, dead_id) if truthy
                  else Branch("zf", dead_id, rest_id))
        if setup is None:
            ws[bid] = (first + body, branch)
            after = [rest_id, dead_id]
        else:
            probe_id = fresh("op_probe")
            ws[bid] = (first + setup, Jump(probe_id))
            ws[probe_id] = (body, branch)
            after = [probe_id, rest_id, dead_id]
            protected.add(probe_id)
        ws[rest_id] = (second, term)
        ws[dead_id] = (_decoy_instrs(ctx, (t1, t2)), Jump(rest_id))
        protected.add(bid)
        protected.add(dead_id)
        pos = order.index(bid) + 1
        order[pos:pos] = after

    blocks = tuple(BasicBlock(bid, tuple(ws[bid][0]), ws[bid][1])
                   for bid in order)
    return Function(f.name, f.params, blocks, f.entry_block,
                    f.functionality_tag)
