"""Control-flow flattening through a central dispatcher.

Every block gets a shuffled index. Blocks no longer jump to each other:
they set the state register and return to the dispatcher, which routes
on the state either through one switch or through a balanced tree of
unsigned comparisons. Conditional branches keep their own condition and
merely retarget to per-destination setter blocks, so a comparison glued
to its branch stays glued.
"""
from __future__ import annotations

from ..mir.core import (BasicBlock, Branch, Function, Jump, Ret, Switch)
from .context import PassContext, TransformError, ins


def flatten(f: Function, ctx: PassContext,
            construction: str = "switch_based") -> Function:
    if construction not in ("switch_based", "ifnest_based"):
        raise TransformError(f"unknown flatten construction {construction!r}")
    if len(f.blocks) < 3:
        raise TransformError("too few blocks to flatten")
    rng = ctx.rng
    if construction == "ifnest_based":
        state, tcmp = ctx.claim_regs(f, 2, "flattening")
    else:
        (state,) = ctx.claim_regs(f, 1, "flattening")

    indices = list(range(len(f.blocks)))
    rng.shuffle(indices)
    index_of = {b.id: indices[i] for i, b in enumerate(f.blocks)}

    names = ctx.fresh_ids(f, "fl_", 3)
    entry_id, dispatch_id, trap_id = names
    taken = set(f.block_ids) | set(names)

    setters = {}
    setter_blocks = []

    def setter(target: str) -> str:
        if target not in setters:
            sid = ctx.fresh_ids(f, "fl_set", 1, taken=taken)[0]
            taken.add(sid)
            setters[target] = sid
            setter_blocks.append(BasicBlock(
                sid, (ins("const", state, index_of[target]),),
                Jump(dispatch_id)))
        return setters[target]

    rewritten = []
    for b in f.blocks:
        term = b.terminator
        instrs = list(b.instrs)
        if isinstance(term, Jump):
            instrs.append(ins("const", state, index_of[term.target]))
            term = Jump(dispatch_id)
        elif isinstance(term, Branch):
            term = Branch(term.cond, setter(term.then_target),
                          setter(term.else_target))
        elif isinstance(term, Switch):
            term = Switch(term.scrutinee,
                          tuple((v, setter(t)) for v, t in term.cases),
                          setter(term.default))
        elif not isinstance(term, Ret):
            raise TransformError(f"unknown terminator {term!r}")
        rewritten.append(BasicBlock(b.id, tuple(instrs), term))

    dispatch_blocks = []
    if construction == "switch_based":
        cases = [(index_of[b.id], b.id) for b in f.blocks]
        rng.shuffle(cases)
        dispatch_blocks.append(BasicBlock(
            dispatch_id, (), Switch(state, tuple(cases), trap_id)))
    else:
        pairs = sorted((index_of[b.id], b.id) for b in f.blocks)

        def build(span, node_id):
            mid = len(span) // 2
            kids = []
            for half in (span[:mid], span[mid:]):
                if len(half) == 1:
                    kids.append(half[0][1])
                else:
                    kid = ctx.fresh_ids(f, "fl_n", 1, taken=taken)[0]
                    taken.add(kid)
                    kids.append(kid)
                    build(half, kid)
            dispatch_blocks.append(BasicBlock(
                node_id,
                (ins("cmp_lt", tcmp, state, span[mid][0]),),
                Branch(tcmp, kids[0], kids[1])))

        build(pairs, dispatch_id)

    entry = BasicBlock(entry_id,
                       (ins("const", state, index_of[f.entry_block]),),
                       Jump(dispatch_id))
    trap = BasicBlock(trap_id, (), Ret(state))
    rest = rewritten + setter_blocks + dispatch_blocks + [trap]
    rng.shuffle(rest)
    return Function(f.name, f.params, tuple([entry] + rest), entry_id,
                    f.functionality_tag)
