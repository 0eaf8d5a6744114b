"""Core types for the mini register-machine IR.

Programs are immutable: passes build new functions instead of mutating.
All integer state is 64-bit two's complement; floats are IEEE-754 doubles
and live in a tiny separate register file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

GP_REGS = tuple(f"R{i}" for i in range(16))
PTR_REGS = ("SP", "BP")
FLAG_REGS = ("zf", "nf", "cf", "of", "pf", "af")
F_REGS = ("F0", "F1", "F2", "F3")

INT_REGS = GP_REGS + PTR_REGS
READABLE_INT_REGS = INT_REGS + FLAG_REGS
ALL_REGS = INT_REGS + FLAG_REGS + F_REGS

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class Imm:
    value: int  # canonical unsigned 64-bit


@dataclass(frozen=True)
class FImm:
    value: float


@dataclass(frozen=True)
class Mem:
    """Memory location: word address ``reg(base) + offset`` mod 2**64."""

    base: str
    offset: int  # signed word offset


Operand = Union[Reg, Imm]
Location = Union[Reg, Mem]


@dataclass(frozen=True)
class Instruction:
    opcode: str
    dst: Optional[Location]
    srcs: tuple = ()


@dataclass(frozen=True)
class Jump:
    target: str


@dataclass(frozen=True)
class Branch:
    cond: str  # taken when the register value is nonzero
    then_target: str
    else_target: str


@dataclass(frozen=True)
class Switch:
    scrutinee: str
    cases: tuple  # ((value, target), ...)
    default: str


@dataclass(frozen=True)
class Ret:
    reg: str


Terminator = Union[Jump, Branch, Switch, Ret]


@dataclass(frozen=True)
class BasicBlock:
    id: str
    instrs: tuple
    terminator: Terminator


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple  # register names bound to arguments, in order
    blocks: tuple
    entry_block: str
    functionality_tag: str = ""

    def block(self, block_id: str) -> BasicBlock:
        for b in self.blocks:
            if b.id == block_id:
                return b
        raise KeyError(block_id)

    @property
    def block_ids(self) -> tuple:
        return tuple(b.id for b in self.blocks)


@dataclass(frozen=True)
class Program:
    functions: tuple
    entry: str

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    message: str


class MirError(Exception):
    pass


class MalformedIR(MirError):
    pass


# opcode -> (dst kind, src kinds); kinds: r = int reg, f = float reg,
# o = int reg or imm, m = memory location, i = imm, x = float imm
_SIGNATURES = {
    "const": ("r", ("i",)),
    "mov": ("r", ("r",)),
    "add": ("r", ("o", "o")),
    "sub": ("r", ("o", "o")),
    "mul": ("r", ("o", "o")),
    "udiv": ("r", ("o", "o")),
    "umod": ("r", ("o", "o")),
    "and": ("r", ("o", "o")),
    "or": ("r", ("o", "o")),
    "xor": ("r", ("o", "o")),
    "not": ("r", ("o",)),
    "shl": ("r", ("o", "o")),
    "shr": ("r", ("o", "o")),
    "cmp_eq": ("r", ("o", "o")),
    "cmp_lt": ("r", ("o", "o")),
    "load": ("r", ("m",)),
    "store": ("m", ("o",)),
    "push": (None, ("o",)),
    "pop": ("r", ()),
    "fconst": ("f", ("x",)),
    "fadd": ("f", ("f", "f")),
    "fmul": ("f", ("f", "f")),
    "fcmp_lt": ("r", ("f", "f")),
}

OPCODES = tuple(_SIGNATURES)


def _check_operand(kind: str, op, where: str, out: list) -> None:
    if kind == "r":
        if not (isinstance(op, Reg) and op.name in READABLE_INT_REGS):
            out.append(Violation("BadOperand", where, f"expected int register, got {op!r}"))
    elif kind == "f":
        if not (isinstance(op, Reg) and op.name in F_REGS):
            out.append(Violation("BadOperand", where, f"expected float register, got {op!r}"))
    elif kind == "o":
        if isinstance(op, Reg):
            if op.name not in READABLE_INT_REGS:
                out.append(Violation("BadOperand", where, f"unknown register {op.name}"))
        elif not isinstance(op, Imm):
            out.append(Violation("BadOperand", where, f"expected register or immediate, got {op!r}"))
    elif kind == "i":
        if not isinstance(op, Imm):
            out.append(Violation("BadOperand", where, f"expected immediate, got {op!r}"))
    elif kind == "x":
        if not isinstance(op, FImm):
            out.append(Violation("BadOperand", where, f"expected float immediate, got {op!r}"))
    elif kind == "m":
        if not (isinstance(op, Mem) and op.base in INT_REGS):
            out.append(Violation("BadOperand", where, f"expected memory location, got {op!r}"))


def _check_dst(kind, dst, where: str, out: list) -> None:
    if kind is None:
        if dst is not None:
            out.append(Violation("BadOperand", where, f"opcode takes no destination, got {dst!r}"))
        return
    if kind == "r":
        if not (isinstance(dst, Reg) and dst.name in INT_REGS):
            out.append(Violation("BadOperand", where, f"destination must be int register, got {dst!r}"))
    elif kind == "f":
        if not (isinstance(dst, Reg) and dst.name in F_REGS):
            out.append(Violation("BadOperand", where, f"destination must be float register, got {dst!r}"))
    elif kind == "m":
        if not (isinstance(dst, Mem) and dst.base in INT_REGS):
            out.append(Violation("BadOperand", where, f"destination must be memory, got {dst!r}"))


def _validate_terminator(term, ids: set, where: str, out: list) -> None:
    def check_target(t: str) -> None:
        if t not in ids:
            out.append(Violation("DanglingTarget", where, f"no block named {t!r}"))

    def check_cond(r: str) -> None:
        if r not in READABLE_INT_REGS:
            out.append(Violation("BadOperand", where, f"bad condition register {r!r}"))

    if isinstance(term, Jump):
        check_target(term.target)
    elif isinstance(term, Branch):
        check_cond(term.cond)
        check_target(term.then_target)
        check_target(term.else_target)
    elif isinstance(term, Switch):
        check_cond(term.scrutinee)
        seen = set()
        for value, target in term.cases:
            if value in seen:
                out.append(Violation("DuplicateSwitchCase", where, f"case {value} repeated"))
            seen.add(value)
            check_target(target)
        check_target(term.default)
    elif isinstance(term, Ret):
        check_cond(term.reg)
    else:
        out.append(Violation("BadTerminator", where, f"unknown terminator {term!r}"))


def validate_function(f: Function) -> list:
    out: list = []
    ids = set()
    for b in f.blocks:
        if b.id in ids:
            out.append(Violation("DuplicateBlockId", f.name, f"block {b.id!r} repeated"))
        ids.add(b.id)
    if f.entry_block not in ids:
        out.append(Violation("MissingEntryBlock", f.name, f"entry {f.entry_block!r} not present"))
    for p in f.params:
        if p not in INT_REGS:
            out.append(Violation("BadOperand", f.name, f"parameter register {p!r} invalid"))
    for b in f.blocks:
        for i, ins in enumerate(b.instrs):
            where = f"{f.name}:{b.id}:{i}"
            sig = _SIGNATURES.get(ins.opcode)
            if sig is None:
                out.append(Violation("UnknownOpcode", where, ins.opcode))
                continue
            dst_kind, src_kinds = sig
            _check_dst(dst_kind, ins.dst, where, out)
            if len(ins.srcs) != len(src_kinds):
                out.append(Violation("BadArity", where,
                                     f"{ins.opcode} expects {len(src_kinds)} sources, got {len(ins.srcs)}"))
                continue
            for kind, op in zip(src_kinds, ins.srcs):
                _check_operand(kind, op, where, out)
        _validate_terminator(b.terminator, ids, f"{f.name}:{b.id}", out)
    return out


def validate(program: Program) -> list:
    """Return all structural violations; an empty list means well-formed."""
    out: list = []
    names = set()
    for f in program.functions:
        if f.name in names:
            out.append(Violation("DuplicateFunction", f.name, "function name repeated"))
        names.add(f.name)
        out.extend(validate_function(f))
    if program.entry not in names:
        out.append(Violation("MissingEntryFunction", program.entry, "program entry not defined"))
    return out


def registers_used(f: Function) -> set:
    """Every register name that appears anywhere in the function text."""
    used = set(f.params)
    for b in f.blocks:
        for ins in b.instrs:
            for op in (ins.dst, *ins.srcs):
                if isinstance(op, Reg):
                    used.add(op.name)
                elif isinstance(op, Mem):
                    used.add(op.base)
        t = b.terminator
        if isinstance(t, Branch):
            used.add(t.cond)
        elif isinstance(t, Switch):
            used.add(t.scrutinee)
        elif isinstance(t, Ret):
            used.add(t.reg)
    return used


def static_bp_offsets(f: Function) -> set:
    """Word offsets of every statically-addressed BP-relative access."""
    offs = set()
    for b in f.blocks:
        for ins in b.instrs:
            for op in (ins.dst, *ins.srcs):
                if isinstance(op, Mem) and op.base == "BP":
                    offs.add(op.offset)
    return offs


def static_bp_stores_loads(f: Function) -> tuple:
    """BP-relative static offsets split into (stored, loaded) sets.

    Mem operands occur only as store destinations or load sources, so
    position fully determines direction.
    """
    stores, loads = set(), set()
    for b in f.blocks:
        for ins in b.instrs:
            if isinstance(ins.dst, Mem) and ins.dst.base == "BP":
                stores.add(ins.dst.offset)
            for op in ins.srcs:
                if isinstance(op, Mem) and op.base == "BP":
                    loads.add(op.offset)
    return stores, loads
