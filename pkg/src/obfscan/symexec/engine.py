"""Per-block symbolic summaries of mini-IR semantics.

Each basic block is executed on a fresh symbolic state: every register or
flag read resolves to ``<name>_init`` and every memory read outside the
block's own writes resolves to a Mem node over the initial memory. The
result is a parallel assignment list (final value per written location)
plus a single irdst expression describing where control goes next.

Jump destinations are rendered as literal addresses ``0x400000 + 0x10*k``
where k numbers the block's own targets in order of first appearance, so
a summary never leaks global block identity. ``concretize`` replays a
summary against a concrete machine state; it must agree exactly with the
interpreter on every block, which the test suite checks by differential
execution.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..mir.core import (FLAG_REGS, MASK64, BasicBlock, Branch, FImm,
                        Function, Imm, Jump, MalformedIR, Reg, Ret, Switch)
from ..mir.core import Mem as MirMem
from ..mir.interp import MachineState
from .expr import (Cond, Expr, Id, Int, Mem, Op, Slice, bits_to_float,
                   eval_op, float_to_bits, make_op)

TARGET_BASE = 0x400000
TARGET_STRIDE = 0x10

_FLAGS = set(FLAG_REGS)
_FLAG_ORDER = ("zf", "nf", "cf", "of", "pf", "af")
_F_REGS = {"F0", "F1", "F2", "F3"}


@dataclass(frozen=True)
class BlockSemantics:
    """What one block does: final-value assignments plus its exit."""

    block_id: str
    assignments: tuple  # ((lhs, rhs), ...) with lhs an Id or Mem node
    irdst: Expr
    targets: tuple  # block ids, indexed by the k in 0x400000 + 0x10*k


@dataclass(frozen=True)
class FunctionSemantics:
    name: str
    entry: str
    functionality_tag: str
    blocks: tuple  # BlockSemantics in document order

    def block(self, block_id: str) -> BlockSemantics:
        for b in self.blocks:
            if b.block_id == block_id:
                return b
        raise KeyError(block_id)


class _State:
    """Mutable working state while walking one block's instructions."""

    def __init__(self):
        self.regs = {}
        self.mem = {}
        self.order = []  # write keys, first-write order

    def read_reg(self, name: str) -> Expr:
        if name in self.regs:
            return self.regs[name]
        size = 1 if name in _FLAGS else 64
        return Id(name + "_init", size)

    def write_reg(self, name: str, e: Expr):
        if name not in self.regs:
            self.order.append(("r", name))
        self.regs[name] = e

    def read_mem(self, addr: Expr) -> Expr:
        if addr in self.mem:
            return self.mem[addr]
        return Mem(addr, 64)

    def write_mem(self, addr: Expr, e: Expr):
        if addr not in self.mem:
            self.order.append(("m", addr))
        self.mem[addr] = e


def _operand(st: _State, op) -> Expr:
    if isinstance(op, Imm):
        return Int(op.value, 64)
    if isinstance(op, Reg):
        return st.read_reg(op.name)
    raise MalformedIR(f"unexpected operand {op!r}")


def _address(st: _State, m: MirMem) -> Expr:
    return make_op("add", st.read_reg(m.base), Int(m.offset & MASK64, 64))


def _set_arith_flags(st: _State, a: Expr, b: Expr, r: Expr, borrow: bool):
    st.write_reg("zf", Cond(r, Int(0, 1), Int(1, 1)))
    st.write_reg("nf", Slice(r, 63, 64))
    if borrow:
        cf = make_op("or", make_op("and", make_op("not", a), b),
                     make_op("and", make_op("or", make_op("not", a), b), r))
        of = make_op("and", make_op("xor", a, b), make_op("xor", a, r))
    else:
        cf = make_op("or", make_op("and", a, b),
                     make_op("and", make_op("or", a, b), make_op("not", r)))
        of = make_op("and", make_op("xor", a, r), make_op("xor", b, r))
    st.write_reg("cf", Slice(cf, 63, 64))
    st.write_reg("of", Slice(of, 63, 64))
    st.write_reg("pf", make_op("parity", make_op("and", r, Int(0xFF, 64))))
    st.write_reg("af", Slice(make_op("xor", a, b, r), 4, 5))


def _set_logic_flags(st: _State, r: Expr):
    st.write_reg("zf", Cond(r, Int(0, 1), Int(1, 1)))
    st.write_reg("nf", Slice(r, 63, 64))
    st.write_reg("cf", Int(0, 1))
    st.write_reg("of", Int(0, 1))
    st.write_reg("pf", make_op("parity", make_op("and", r, Int(0xFF, 64))))
    st.write_reg("af", Int(0, 1))


def _exec_instr(st: _State, ins):
    op = ins.opcode
    if op == "const":
        st.write_reg(ins.dst.name, Int(ins.srcs[0].value, 64))
    elif op == "mov":
        st.write_reg(ins.dst.name, st.read_reg(ins.srcs[0].name))
    elif op in ("add", "sub"):
        a = _operand(st, ins.srcs[0])
        b = _operand(st, ins.srcs[1])
        r = make_op(op, a, b)
        _set_arith_flags(st, a, b, r, borrow=(op == "sub"))
        st.write_reg(ins.dst.name, r)
    elif op in ("mul", "udiv", "umod", "shl", "shr"):
        a = _operand(st, ins.srcs[0])
        b = _operand(st, ins.srcs[1])
        st.write_reg(ins.dst.name, make_op(op, a, b))
    elif op in ("and", "or", "xor"):
        a = _operand(st, ins.srcs[0])
        b = _operand(st, ins.srcs[1])
        r = make_op(op, a, b)
        _set_logic_flags(st, r)
        st.write_reg(ins.dst.name, r)
    elif op == "not":
        a = _operand(st, ins.srcs[0])
        r = make_op("not", a)
        _set_logic_flags(st, r)
        st.write_reg(ins.dst.name, r)
    elif op == "cmp_eq":
        a = _operand(st, ins.srcs[0])
        b = _operand(st, ins.srcs[1])
        diff = make_op("sub", a, b)
        st.write_reg(ins.dst.name, Cond(diff, Int(0, 64), Int(1, 64)))
        _set_arith_flags(st, a, b, diff, borrow=True)
    elif op == "cmp_lt":
        a = _operand(st, ins.srcs[0])
        b = _operand(st, ins.srcs[1])
        diff = make_op("sub", a, b)
        st.write_reg(ins.dst.name, make_op("ltu", a, b))
        _set_arith_flags(st, a, b, diff, borrow=True)
    elif op == "load":
        st.write_reg(ins.dst.name, st.read_mem(_address(st, ins.srcs[0])))
    elif op == "store":
        st.write_mem(_address(st, ins.dst), _operand(st, ins.srcs[0]))
    elif op == "push":
        sp = make_op("sub", st.read_reg("SP"), Int(1, 64))
        st.write_reg("SP", sp)
        st.write_mem(sp, _operand(st, ins.srcs[0]))
    elif op == "pop":
        sp = st.read_reg("SP")
        st.write_reg(ins.dst.name, st.read_mem(sp))
        st.write_reg("SP", make_op("add", sp, Int(1, 64)))
    elif op == "fconst":
        st.write_reg(ins.dst.name, Int(float_to_bits(ins.srcs[0].value), 64))
    elif op in ("fadd", "fmul"):
        a = st.read_reg(ins.srcs[0].name)
        b = st.read_reg(ins.srcs[1].name)
        st.write_reg(ins.dst.name, make_op(op, a, b))
    elif op == "fcmp_lt":
        a = st.read_reg(ins.srcs[0].name)
        b = st.read_reg(ins.srcs[1].name)
        st.write_reg(ins.dst.name, make_op("flt", a, b))
    else:
        raise MalformedIR(f"unknown opcode {op!r}")


def _exit_expr(st: _State, term):
    """(irdst, targets): symbolic destination plus the local target table."""
    targets = []

    def tgt(name: str) -> Int:
        if name not in targets:
            targets.append(name)
        return Int(TARGET_BASE + TARGET_STRIDE * targets.index(name), 64)

    if isinstance(term, Jump):
        return tgt(term.target), tuple(targets)
    if isinstance(term, Branch):
        cond = st.read_reg(term.cond)
        return Cond(cond, tgt(term.then_target), tgt(term.else_target)), tuple(targets)
    if isinstance(term, Switch):
        scrut = st.read_reg(term.scrutinee)
        case_ints = [(tgt(t), Int(v, 64)) for v, t in term.cases]
        dest = tgt(term.default)
        for t_int, v_int in reversed(case_ints):
            dest = Cond(make_op("xor", scrut, v_int), dest, t_int)
        return dest, tuple(targets)
    if isinstance(term, Ret):
        return Op("ret", (st.read_reg(term.reg),)), tuple(targets)
    raise MalformedIR(f"unknown terminator {term!r}")


def exec_block(block: BasicBlock) -> BlockSemantics:
    st = _State()
    for ins in block.instrs:
        _exec_instr(st, ins)
    irdst, targets = _exit_expr(st, block.terminator)
    assignments = []
    for kind, key in st.order:
        if kind == "r":
            size = 1 if key in _FLAGS else 64
            assignments.append((Id(key, size), st.regs[key]))
        else:
            assignments.append((Mem(key, 64), st.mem[key]))
    return BlockSemantics(block.id, tuple(assignments), irdst, targets)


def exec_function(f: Function) -> FunctionSemantics:
    return FunctionSemantics(f.name, f.entry_block, f.functionality_tag,
                             tuple(exec_block(b) for b in f.blocks))


def _eval(e: Expr, state: MachineState):
    if isinstance(e, Int):
        return e.value
    if isinstance(e, Id):
        name = e.name
        if not name.endswith("_init"):
            raise MalformedIR(f"unbound symbol {name!r} in summary")
        base = name[:-5]
        if base in _F_REGS:
            return float_to_bits(state.fregs[base])
        return state.regs[base]
    if isinstance(e, Mem):
        return state.mem.get(_eval(e.addr, state) & MASK64, 0)
    if isinstance(e, Slice):
        return (_eval(e.e, state) >> e.start) & ((1 << (e.stop - e.start)) - 1)
    if isinstance(e, Cond):
        if _eval(e.cond, state) != 0:
            return _eval(e.then, state)
        return _eval(e.orelse, state)
    if isinstance(e, Op):
        try:
            return eval_op(e.op, [_eval(a, state) for a in e.args])
        except ZeroDivisionError as exc:
            raise MalformedIR(str(exc)) from exc
    raise MalformedIR(f"cannot evaluate {e!r}")


def concretize(sem: BlockSemantics, state: MachineState):
    """Replay a block summary against a concrete state.

    Returns ``(new_state, outcome)`` shaped exactly like ``run_block``:
    outcome is ``("jump", block_id)`` or ``("ret", value)``. The input
    state is not modified.
    """
    writes = []
    for lhs, rhs in sem.assignments:
        value = _eval(rhs, state)
        if isinstance(lhs, Mem):
            writes.append(("m", _eval(lhs.addr, state) & MASK64, value))
        elif lhs.name in _F_REGS:
            writes.append(("f", lhs.name, value))
        else:
            writes.append(("r", lhs.name, value))
    if isinstance(sem.irdst, Op) and sem.irdst.op == "ret":
        outcome = ("ret", _eval(sem.irdst.args[0], state))
    else:
        v = _eval(sem.irdst, state)
        k, rem = divmod(v - TARGET_BASE, TARGET_STRIDE)
        if rem != 0 or not 0 <= k < len(sem.targets):
            raise MalformedIR(f"irdst value {v:#x} is not a known target")
        outcome = ("jump", sem.targets[k])
    out = state.copy()
    for kind, key, value in writes:
        if kind == "m":
            out.mem[key] = value
        elif kind == "f":
            out.fregs[key] = bits_to_float(value)
        else:
            out.regs[key] = value
    if outcome[0] == "ret":
        out.output.append(outcome[1])
    return out, outcome


_GLYPHS = {"add": "+", "sub": "-", "mul": "*", "udiv": "/", "umod": "%",
           "and": "&", "or": "|", "xor": "^", "shl": "<<", "shr": ">>",
           "ltu": "<u", "fadd": "+f", "fmul": "*f", "flt": "<f"}


def render_debug(e: Expr) -> str:
    """Compact infix view for humans; not part of the learned pipeline."""
    if isinstance(e, Id):
        return e.name
    if isinstance(e, Int):
        return hex(e.value)
    if isinstance(e, Mem):
        return f"@{e.size}[{render_debug(e.addr)}]"
    if isinstance(e, Slice):
        return f"{render_debug(e.e)}[{e.start}:{e.stop}]"
    if isinstance(e, Cond):
        parts = (render_debug(e.cond), render_debug(e.then),
                 render_debug(e.orelse))
        return "(%s ? %s : %s)" % parts
    if isinstance(e, Op):
        if e.op in _GLYPHS and len(e.args) >= 2:
            glue = " %s " % _GLYPHS[e.op]
            return "(" + glue.join(render_debug(a) for a in e.args) + ")"
        return f"{e.op}({', '.join(render_debug(a) for a in e.args)})"
    return repr(e)


def render_block_debug(sem: BlockSemantics) -> str:
    lines = [f"{render_debug(lhs)} = {render_debug(rhs)}"
             for lhs, rhs in sem.assignments]
    lines.append(f"IRDst = {render_debug(sem.irdst)}")
    return "\n".join(lines)
