"""Virtualization: replace a function with bytecode plus an interpreter.

The guest program is linearized into 4-word cells [opcode, A, B, C]
materialized into scratch memory at entry, together with a virtual
register file holding R0..R7, the virtual SP and BP, and a constant
pool (one slot per distinct immediate, so ALU handlers work purely
register-to-register). The emitted interpreter keeps its own state in
the guest's physical registers, which are free while guest values live
in memory: R6 is the program counter, R7 the current cell address, R5
the fetched opcode, R4 the dispatch scratch, R0..R3 handler scratch.

Taken branches are compiled to branch-free arithmetic selection between
the two destination cell indices. A switch becomes a run of one-case
compare cells falling through to a final unconditional jump.

Functions using float instructions or branching on flags cannot be
virtualized and raise TransformError; stacks that include this pass run
it first, on clean generated code.
"""
from __future__ import annotations

from ..mir.core import (FLAG_REGS, MASK64, BasicBlock, Branch, Function,
                        Imm, Jump, Reg, Ret, Switch, registers_used,
                        static_bp_offsets)
from ..mir.core import Mem as MirMem
from .context import PassContext, TransformError, bp_slot, ins
from .labels import CONSTRUCTIONS

VREG_SP = 8
VREG_BP = 9
POOL_BASE = 10

_REG_INDEX = {f"R{i}": i for i in range(8)}
_REG_INDEX["SP"] = VREG_SP
_REG_INDEX["BP"] = VREG_BP

_ALU_OPS = ("add", "sub", "mul", "udiv", "umod", "and", "or", "xor",
            "shl", "shr", "cmp_eq", "cmp_lt")

VPC, VADDR, VOP, DTMP = "R6", "R7", "R5", "R4"


def _reject_unsupported(f: Function):
    allowed = set(_REG_INDEX) | {"SP", "BP"}
    if not registers_used(f) <= allowed:
        raise TransformError("guest code uses scratch registers")
    for b in f.blocks:
        for i in b.instrs:
            if i.opcode in ("fconst", "fadd", "fmul", "fcmp_lt"):
                raise TransformError("cannot virtualize float instructions")
        t = b.terminator
        if isinstance(t, Branch) and t.cond in FLAG_REGS:
            raise TransformError("cannot virtualize flag-conditioned branches")


def _term_cell_count(t) -> int:
    if isinstance(t, Switch):
        return len(t.cases) + 1
    return 1


def virtualize(f: Function, ctx: PassContext,
               construction: str = "switch_dispatch") -> Function:
    if construction not in CONSTRUCTIONS["Virt"]:
        raise TransformError(f"unknown dispatch construction {construction!r}")
    _reject_unsupported(f)
    rng = ctx.rng

    pool = {}

    def pool_idx(value: int) -> int:
        value &= MASK64
        if value not in pool:
            pool[value] = POOL_BASE + len(pool)
        return pool[value]

    def vsrc(op) -> int:
        if isinstance(op, Imm):
            return pool_idx(op.value)
        return _REG_INDEX[op.name]

    opset = set()
    for b in f.blocks:
        for i in b.instrs:
            opset.add("mov" if i.opcode == "const" else i.opcode)
        t = b.terminator
        if isinstance(t, Jump):
            opset.add("vjmp")
        elif isinstance(t, Branch):
            opset.add("vbr")
        elif isinstance(t, Switch):
            opset.add("vbeq")
            opset.add("vjmp")
        else:
            opset.add("vret")
    opnames = sorted(opset)
    opnum = dict(zip(opnames, rng.sample(range(1, 100), len(opnames))))

    block_pc = {}
    pc = 0
    for b in f.blocks:
        block_pc[b.id] = pc
        pc += len(b.instrs) + _term_cell_count(b.terminator)
    ncells = pc

    def encode_instr(i) -> tuple:
        op = i.opcode
        if op == "const":
            return (opnum["mov"], _REG_INDEX[i.dst.name],
                    pool_idx(i.srcs[0].value), 0)
        if op == "mov":
            return (opnum["mov"], _REG_INDEX[i.dst.name],
                    _REG_INDEX[i.srcs[0].name], 0)
        if op in _ALU_OPS:
            return (opnum[op], _REG_INDEX[i.dst.name],
                    vsrc(i.srcs[0]), vsrc(i.srcs[1]))
        if op == "not":
            return (opnum[op], _REG_INDEX[i.dst.name], vsrc(i.srcs[0]), 0)
        if op == "load":
            m = i.srcs[0]
            return (opnum[op], _REG_INDEX[i.dst.name],
                    _REG_INDEX[m.base], m.offset & MASK64)
        if op == "store":
            return (opnum[op], vsrc(i.srcs[0]),
                    _REG_INDEX[i.dst.base], i.dst.offset & MASK64)
        if op == "push":
            return (opnum[op], vsrc(i.srcs[0]), VREG_SP, 0)
        if op == "pop":
            return (opnum[op], _REG_INDEX[i.dst.name], VREG_SP, 0)
        raise TransformError(f"cannot virtualize opcode {op!r}")

    cells = []
    for b in f.blocks:
        for i in b.instrs:
            cells.append(encode_instr(i))
        t = b.terminator
        if isinstance(t, Jump):
            cells.append((opnum["vjmp"], block_pc[t.target], 0, 0))
        elif isinstance(t, Branch):
            cells.append((opnum["vbr"], _REG_INDEX[t.cond],
                          block_pc[t.then_target], block_pc[t.else_target]))
        elif isinstance(t, Switch):
            for value, target in t.cases:
                cells.append((opnum["vbeq"], _REG_INDEX[t.scrutinee],
                              value & MASK64, block_pc[target]))
            cells.append((opnum["vjmp"], block_pc[t.default], 0, 0))
        else:
            cells.append((opnum["vret"], _REG_INDEX[t.reg], 0, 0))
    assert len(cells) == ncells

    nv = POOL_BASE + len(pool)
    vb = ctx.alloc_slots(f, nv)
    cb = ctx.alloc_slots(f, 4 * ncells, taken=[vb])
    locals_taken = static_bp_offsets(f)
    counter_slots = [o for o in range(-1, -16, -1) if o not in locals_taken]
    if not counter_slots:
        raise TransformError("no free local slot for interpreter bookkeeping")
    ctr = rng.choice(counter_slots)

    def rv(word: int, out: str, tmp: str) -> list:
        """Read the vreg whose index is in cell word ``word`` into out."""
        return [ins("load", out, MirMem(VADDR, word)),
                ins("mov", tmp, "BP"), ins("add", tmp, tmp, vb),
                ins("add", tmp, tmp, out), ins("load", out, MirMem(tmp, 0))]

    def wv(word: int, val: str, ti: str, ta: str) -> list:
        """Store val into the vreg whose index is in cell word ``word``."""
        return [ins("load", ti, MirMem(VADDR, word)),
                ins("mov", ta, "BP"), ins("add", ta, ta, vb),
                ins("add", ta, ta, ti), ins("store", MirMem(ta, 0), val)]

    handlers = {}
    for op in opnames:
        if op in _ALU_OPS:
            body = (rv(2, "R0", "R2") + rv(3, "R1", "R2")
                    + [ins(op, "R0", "R0", "R1")] + wv(1, "R0", "R1", "R2"))
            handlers[op] = (body, Jump("vm_adv"))
        elif op == "not":
            body = (rv(2, "R0", "R2") + [ins("not", "R0", "R0")]
                    + wv(1, "R0", "R1", "R2"))
            handlers[op] = (body, Jump("vm_adv"))
        elif op == "mov":
            handlers[op] = (rv(2, "R0", "R2") + wv(1, "R0", "R1", "R2"),
                            Jump("vm_adv"))
        elif op == "load":
            body = (rv(2, "R0", "R2")
                    + [ins("load", "R1", MirMem(VADDR, 3)),
                       ins("add", "R0", "R0", "R1"),
                       ins("load", "R0", MirMem("R0", 0))]
                    + wv(1, "R0", "R1", "R2"))
            handlers[op] = (body, Jump("vm_adv"))
        elif op == "store":
            body = (rv(1, "R0", "R2") + rv(2, "R1", "R2")
                    + [ins("load", "R2", MirMem(VADDR, 3)),
                       ins("add", "R1", "R1", "R2"),
                       ins("store", MirMem("R1", 0), "R0")])
            handlers[op] = (body, Jump("vm_adv"))
        elif op == "push":
            body = (rv(1, "R0", "R2")
                    + [ins("load", "R1", MirMem(VADDR, 2)),
                       ins("mov", "R2", "BP"), ins("add", "R2", "R2", vb),
                       ins("add", "R2", "R2", "R1"),
                       ins("load", "R3", MirMem("R2", 0)),
                       ins("sub", "R3", "R3", 1),
                       ins("store", MirMem("R2", 0), "R3"),
                       ins("store", MirMem("R3", 0), "R0")])
            handlers[op] = (body, Jump("vm_adv"))
        elif op == "pop":
            body = ([ins("load", "R1", MirMem(VADDR, 2)),
                     ins("mov", "R2", "BP"), ins("add", "R2", "R2", vb),
                     ins("add", "R2", "R2", "R1"),
                     ins("load", "R3", MirMem("R2", 0)),
                     ins("load", "R0", MirMem("R3", 0)),
                     ins("add", "R3", "R3", 1),
                     ins("store", MirMem("R2", 0), "R3")]
                    + wv(1, "R0", "R1", "R2"))
            handlers[op] = (body, Jump("vm_adv"))
        elif op == "vjmp":
            handlers[op] = ([ins("load", "R0", MirMem(VADDR, 1)),
                             ins("mov", VPC, "R0")], Jump("vm_fetch"))
        elif op == "vbr":
            body = (rv(1, "R0", "R2")
                    + [ins("load", "R1", MirMem(VADDR, 2)),
                       ins("load", "R2", MirMem(VADDR, 3)),
                       ins("cmp_eq", "R3", "R0", 0),
                       ins("sub", "R2", "R2", "R1"),
                       ins("mul", "R2", "R2", "R3"),
                       ins("add", VPC, "R1", "R2")])
            handlers[op] = (body, Jump("vm_fetch"))
        elif op == "vbeq":
            body = (rv(1, "R0", "R2")
                    + [ins("load", "R1", MirMem(VADDR, 2)),
                       ins("cmp_eq", "R3", "R0", "R1"),
                       ins("load", "R1", MirMem(VADDR, 3)),
                       ins("add", VPC, VPC, 1),
                       ins("sub", "R1", "R1", VPC),
                       ins("mul", "R1", "R1", "R3"),
                       ins("add", VPC, VPC, "R1")])
            handlers[op] = (body, Jump("vm_fetch"))
        elif op == "vret":
            handlers[op] = (rv(1, "R0", "R2"), Ret("R0"))
        else:
            raise TransformError(f"no handler for {op!r}")
    handler_id = {op: f"vm_h_{op}" for op in opnames}

    stores = [ins("store", bp_slot(vb + i), f"R{i}") for i in range(8)]
    stores.append(ins("store", bp_slot(vb + VREG_SP), "SP"))
    stores.append(ins("store", bp_slot(vb + VREG_BP), "BP"))
    for value, idx in pool.items():
        stores.append(ins("store", bp_slot(vb + idx), value))
    stores.append(ins("store", bp_slot(ctr), 0))
    for k, cell in enumerate(cells):
        for w in range(4):
            stores.append(ins("store", bp_slot(cb + 4 * k + w), cell[w]))

    chunks = [stores[i:i + 24] for i in range(0, len(stores), 24)]
    chunk_blocks = []
    for n, chunk in enumerate(chunks):
        last = n == len(chunks) - 1
        instrs = list(chunk)
        if last:
            instrs.append(ins("const", VPC, block_pc[f.entry_block]))
            term = Jump("vm_fetch")
        else:
            term = Jump(f"vm_init{n + 1}")
        chunk_blocks.append(BasicBlock(f"vm_init{n}", tuple(instrs), term))

    fetch_instrs = [ins("shl", VADDR, VPC, 2),
                    ins("add", VADDR, VADDR, "BP"),
                    ins("add", VADDR, VADDR, cb),
                    ins("load", VOP, MirMem(VADDR, 0))]
    dispatch_blocks = []
    if construction == "switch_dispatch":
        cases = [(opnum[op], handler_id[op]) for op in opnames]
        rng.shuffle(cases)
        fetch_term = Switch(VOP, tuple(cases), "vm_trap")
    elif construction == "linear_dispatch":
        chain_order = list(opnames)
        rng.shuffle(chain_order)
        fetch_term = Jump("vm_d0")
        for n, op in enumerate(chain_order):
            nxt = f"vm_d{n + 1}" if n + 1 < len(chain_order) else "vm_trap"
            dispatch_blocks.append(BasicBlock(
                f"vm_d{n}", (ins("cmp_eq", DTMP, VOP, opnum[op]),),
                Branch(DTMP, handler_id[op], nxt)))
    else:  # ifnest_dispatch
        pairs = sorted((opnum[op], handler_id[op]) for op in opnames)
        counter = [0]

        def build(span, node_id):
            mid = len(span) // 2
            kids = []
            for half in (span[:mid], span[mid:]):
                if len(half) == 1:
                    kids.append(half[0][1])
                else:
                    kid = f"vm_d{counter[0]}"
                    counter[0] += 1
                    kids.append(kid)
                    build(half, kid)
            dispatch_blocks.append(BasicBlock(
                node_id, (ins("cmp_lt", DTMP, VOP, span[mid][0]),),
                Branch(DTMP, kids[0], kids[1])))

        root = f"vm_d{counter[0]}"
        counter[0] += 1
        build(pairs, root)
        fetch_term = Jump(root)

    fetch = BasicBlock("vm_fetch", tuple(fetch_instrs), fetch_term)
    adv = BasicBlock("vm_adv",
                     (ins("add", VPC, VPC, 1),
                      ins("load", VOP, bp_slot(ctr)),
                      ins("add", VOP, VOP, 1),
                      ins("store", bp_slot(ctr), VOP)),
                     Jump("vm_fetch"))
    trap = BasicBlock("vm_trap", (), Ret(VOP))

    rest = ([fetch, adv, trap] + chunk_blocks[1:] + dispatch_blocks
            + [BasicBlock(handler_id[op], tuple(body), term)
               for op, (body, term) in handlers.items()])
    rng.shuffle(rest)
    blocks = tuple([chunk_blocks[0]] + rest)
    return Function(f.name, f.params, blocks, "vm_init0",
                    f.functionality_tag)
