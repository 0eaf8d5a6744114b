"""Concrete interpreter for the mini-IR.

Flag rules (asserted exactly by tests): add/sub/cmp_eq/cmp_lt set all six
flags from the 64-bit result (cmp uses the internal subtraction a-b);
and/or/xor/not set zf/nf/pf and clear cf/of/af; every other opcode leaves
flags untouched. Shift counts are taken mod 64. Memory is a flat
word-addressed space shared by BP-relative locals and the SP stack, with
disjoint default bases so pushes never collide with locals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .core import (ALL_REGS, F_REGS, FLAG_REGS, INT_REGS, MASK64, Branch,
                   FImm, Function, Imm, Jump, MalformedIR, Mem, MirError,
                   Reg, Ret, Switch)

STACK_BASE = 0x10000
FRAME_BASE = 0x20000
DEFAULT_FUEL = 10 ** 6

_PARITY = tuple(1 if bin(i).count("1") % 2 == 0 else 0 for i in range(256))


class FuelExhausted(MirError):
    def __init__(self, steps: int):
        super().__init__(f"no return within {steps} steps")
        self.steps = steps


class InterpResult(NamedTuple):
    value: int
    steps: int


@dataclass
class MachineState:
    """Declared initial values: all registers 0 except SP/BP; memory empty."""

    regs: dict = field(default_factory=dict)
    fregs: dict = field(default_factory=dict)
    mem: dict = field(default_factory=dict)
    output: list = field(default_factory=list)

    @classmethod
    def initial(cls, bindings: dict | None = None) -> "MachineState":
        regs = {r: 0 for r in INT_REGS + FLAG_REGS}
        regs["SP"] = STACK_BASE
        regs["BP"] = FRAME_BASE
        if bindings:
            for name, value in bindings.items():
                regs[name] = value & MASK64
        return cls(regs=regs, fregs={r: 0.0 for r in F_REGS})

    def copy(self) -> "MachineState":
        return MachineState(regs=dict(self.regs), fregs=dict(self.fregs),
                            mem=dict(self.mem), output=list(self.output))


# compiled opcode ids
(_CONST, _MOV, _ALU2, _NOT, _CMP_EQ, _CMP_LT, _LOAD, _STORE, _PUSH, _POP,
 _FCONST, _FALU2, _FCMP_LT) = range(13)

_ALU_FNS = {"add": 0, "sub": 1, "mul": 2, "udiv": 3, "umod": 4, "and": 5,
            "or": 6, "xor": 7, "shl": 8, "shr": 9}


def _src(op):
    if isinstance(op, Imm):
        return (True, op.value & MASK64)
    return (False, op.name)


def _compile_instr(ins):
    op = ins.opcode
    if op == "const":
        return (_CONST, ins.dst.name, ins.srcs[0].value & MASK64)
    if op == "mov":
        return (_MOV, ins.dst.name, ins.srcs[0].name)
    if op in _ALU_FNS:
        return (_ALU2, ins.dst.name, _ALU_FNS[op], _src(ins.srcs[0]), _src(ins.srcs[1]))
    if op == "not":
        return (_NOT, ins.dst.name, _src(ins.srcs[0]))
    if op == "cmp_eq":
        return (_CMP_EQ, ins.dst.name, _src(ins.srcs[0]), _src(ins.srcs[1]))
    if op == "cmp_lt":
        return (_CMP_LT, ins.dst.name, _src(ins.srcs[0]), _src(ins.srcs[1]))
    if op == "load":
        return (_LOAD, ins.dst.name, ins.srcs[0].base, ins.srcs[0].offset & MASK64)
    if op == "store":
        return (_STORE, ins.dst.base, ins.dst.offset & MASK64, _src(ins.srcs[0]))
    if op == "push":
        return (_PUSH, None, _src(ins.srcs[0]))
    if op == "pop":
        return (_POP, ins.dst.name)
    if op == "fconst":
        return (_FCONST, ins.dst.name, float(ins.srcs[0].value))
    if op in ("fadd", "fmul"):
        return (_FALU2, ins.dst.name, op == "fadd", ins.srcs[0].name, ins.srcs[1].name)
    if op == "fcmp_lt":
        return (_FCMP_LT, ins.dst.name, ins.srcs[0].name, ins.srcs[1].name)
    raise MalformedIR(f"unknown opcode {op!r}")


def _compile_term(term):
    if isinstance(term, Jump):
        return ("j", term.target)
    if isinstance(term, Branch):
        return ("b", term.cond, term.then_target, term.else_target)
    if isinstance(term, Switch):
        return ("s", term.scrutinee, dict(term.cases), term.default)
    if isinstance(term, Ret):
        return ("r", term.reg)
    raise MalformedIR(f"unknown terminator {term!r}")


def _exec_instrs(code, regs, fregs, mem):
    """Run one compiled block body in place. Returns the step count."""
    for c in code:
        kind = c[0]
        if kind == _ALU2:
            ai, av = c[3]
            a = av if ai else regs[av]
            bi, bv = c[4]
            b = bv if bi else regs[bv]
            fn = c[2]
            if fn == 0:
                t = a + b
                r = t & MASK64
                regs["zf"] = 1 if r == 0 else 0
                regs["nf"] = r >> 63
                regs["cf"] = 1 if t > MASK64 else 0
                regs["of"] = ((a ^ r) & (b ^ r)) >> 63
                regs["pf"] = _PARITY[r & 0xFF]
                regs["af"] = ((a ^ b ^ r) >> 4) & 1
            elif fn == 1:
                r = (a - b) & MASK64
                regs["zf"] = 1 if r == 0 else 0
                regs["nf"] = r >> 63
                regs["cf"] = 1 if a < b else 0
                regs["of"] = ((a ^ b) & (a ^ r)) >> 63
                regs["pf"] = _PARITY[r & 0xFF]
                regs["af"] = ((a ^ b ^ r) >> 4) & 1
            elif fn == 2:
                r = (a * b) & MASK64
            elif fn == 3:
                if b == 0:
                    raise MalformedIR("udiv by zero")
                r = a // b
            elif fn == 4:
                if b == 0:
                    raise MalformedIR("umod by zero")
                r = a % b
            elif fn == 5:
                r = a & b
            elif fn == 6:
                r = a | b
            elif fn == 7:
                r = a ^ b
            elif fn == 8:
                r = (a << (b & 63)) & MASK64
            else:
                r = a >> (b & 63)
            if 5 <= fn <= 7:
                regs["zf"] = 1 if r == 0 else 0
                regs["nf"] = r >> 63
                regs["cf"] = 0
                regs["of"] = 0
                regs["pf"] = _PARITY[r & 0xFF]
                regs["af"] = 0
            regs[c[1]] = r
        elif kind == _CONST:
            regs[c[1]] = c[2]
        elif kind == _MOV:
            regs[c[1]] = regs[c[2]]
        elif kind == _LOAD:
            regs[c[1]] = mem.get((regs[c[2]] + c[3]) & MASK64, 0)
        elif kind == _STORE:
            si, sv = c[3]
            mem[(regs[c[1]] + c[2]) & MASK64] = sv if si else regs[sv]
        elif kind == _CMP_EQ:
            ai, av = c[2]
            a = av if ai else regs[av]
            bi, bv = c[3]
            b = bv if bi else regs[bv]
            r = (a - b) & MASK64
            regs[c[1]] = 1 if r == 0 else 0
            regs["zf"] = 1 if r == 0 else 0
            regs["nf"] = r >> 63
            regs["cf"] = 1 if a < b else 0
            regs["of"] = ((a ^ b) & (a ^ r)) >> 63
            regs["pf"] = _PARITY[r & 0xFF]
            regs["af"] = ((a ^ b ^ r) >> 4) & 1
        elif kind == _CMP_LT:
            ai, av = c[2]
            a = av if ai else regs[av]
            bi, bv = c[3]
            b = bv if bi else regs[bv]
            r = (a - b) & MASK64
            regs[c[1]] = 1 if a < b else 0
            regs["zf"] = 1 if r == 0 else 0
            regs["nf"] = r >> 63
            regs["cf"] = 1 if a < b else 0
            regs["of"] = ((a ^ b) & (a ^ r)) >> 63
            regs["pf"] = _PARITY[r & 0xFF]
            regs["af"] = ((a ^ b ^ r) >> 4) & 1
        elif kind == _NOT:
            ai, av = c[2]
            a = av if ai else regs[av]
            r = a ^ MASK64
            regs["zf"] = 1 if r == 0 else 0
            regs["nf"] = r >> 63
            regs["cf"] = 0
            regs["of"] = 0
            regs["pf"] = _PARITY[r & 0xFF]
            regs["af"] = 0
            regs[c[1]] = r
        elif kind == _PUSH:
            si, sv = c[2]
            sp = (regs["SP"] - 1) & MASK64
            regs["SP"] = sp
            mem[sp] = sv if si else regs[sv]
        elif kind == _POP:
            sp = regs["SP"]
            regs[c[1]] = mem.get(sp, 0)
            regs["SP"] = (sp + 1) & MASK64
        elif kind == _FCONST:
            fregs[c[1]] = c[2]
        elif kind == _FALU2:
            a = fregs[c[3]]
            b = fregs[c[4]]
            fregs[c[1]] = a + b if c[2] else a * b
        else:  # _FCMP_LT
            regs[c[1]] = 1 if fregs[c[2]] < fregs[c[3]] else 0
    return len(code)


def _next_target(term, regs):
    kind = term[0]
    if kind == "j":
        return ("jump", term[1])
    if kind == "b":
        return ("jump", term[2] if regs[term[1]] != 0 else term[3])
    if kind == "s":
        return ("jump", term[2].get(regs[term[1]], term[3]))
    return ("ret", regs[term[1]])


class FunctionRunner:
    """Precompiled interpreter for one function; reusable across runs."""

    def __init__(self, f: Function):
        self.function = f
        self._blocks = {
            b.id: ([_compile_instr(i) for i in b.instrs], _compile_term(b.terminator))
            for b in f.blocks
        }

    def run(self, args, fuel: int = DEFAULT_FUEL) -> InterpResult:
        f = self.function
        if len(args) != len(f.params):
            raise MalformedIR(f"{f.name} expects {len(f.params)} args, got {len(args)}")
        state = MachineState.initial({p: a for p, a in zip(f.params, args)})
        regs, fregs, mem = state.regs, state.fregs, state.mem
        blocks = self._blocks
        steps = 0
        cur = f.entry_block
        while True:
            code, term = blocks[cur]
            cost = len(code) + 1
            if steps + cost > fuel:
                raise FuelExhausted(fuel)
            _exec_instrs(code, regs, fregs, mem)
            steps += cost
            what, payload = _next_target(term, regs)
            if what == "ret":
                state.output.append(payload)
                return InterpResult(payload, steps)
            cur = payload


def run_function(f: Function, args, fuel: int = DEFAULT_FUEL) -> InterpResult:
    """Deterministic: same function and args always give the same result."""
    return FunctionRunner(f).run(args, fuel)


def run_block(block, state: MachineState):
    """Execute one block on a copy of ``state``.

    Returns ``(new_state, outcome)`` where outcome is ``("jump", target)``
    or ``("ret", value)``. The input state is never modified.
    """
    out = state.copy()
    code = [_compile_instr(i) for i in block.instrs]
    _exec_instrs(code, out.regs, out.fregs, out.mem)
    outcome = _next_target(_compile_term(block.terminator), out.regs)
    if outcome[0] == "ret":
        out.output.append(outcome[1])
    return out, outcome
