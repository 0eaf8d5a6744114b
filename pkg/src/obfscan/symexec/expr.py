"""Expression forms for block-level data-flow summaries.

Expressions are immutable trees with structural equality, so they can key
dictionaries (the in-block memory store) and deduplicate during rendering.
``make_op`` folds an operation only when every argument is already a
literal; anything symbolic is kept verbatim, including literal-looking
subtrees under Slice or Cond nodes.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

MASK64 = (1 << 64) - 1


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Id(Expr):
    """A named symbol: register or flag, usually with an _init suffix."""

    name: str
    size: int = 64


@dataclass(frozen=True)
class Int(Expr):
    value: int
    size: int = 64

    def __post_init__(self):
        object.__setattr__(self, "value", self.value & _mask(self.size))


@dataclass(frozen=True)
class Op(Expr):
    op: str
    args: tuple

    @property
    def size(self) -> int:
        if self.op in _RESULT_SIZE:
            return _RESULT_SIZE[self.op]
        return self.args[0].size


@dataclass(frozen=True)
class Mem(Expr):
    """A read of initial memory at a symbolic address."""

    addr: Expr
    size: int = 64


@dataclass(frozen=True)
class Slice(Expr):
    e: Expr
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class Cond(Expr):
    """then if cond evaluates nonzero, else orelse."""

    cond: Expr
    then: Expr
    orelse: Expr

    @property
    def size(self) -> int:
        return self.then.size


_RESULT_SIZE = {"parity": 1, "ltu": 64, "flt": 64}

OP_NAMES = ("add", "sub", "mul", "udiv", "umod", "and", "or", "xor", "not",
            "shl", "shr", "ltu", "parity", "ret", "fadd", "fmul", "flt")


def _mask(size: int) -> int:
    return (1 << size) - 1


def float_to_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", x))[0]


def bits_to_float(v: int) -> float:
    return struct.unpack("<d", struct.pack("<Q", v & MASK64))[0]


def eval_op(op: str, vals: list) -> int:
    """Concrete value of one operation over 64-bit operand values."""
    if op == "add":
        r = 0
        for v in vals:
            r += v
        return r & MASK64
    if op == "sub":
        return (vals[0] - vals[1]) & MASK64
    if op == "mul":
        r = 1
        for v in vals:
            r *= v
        return r & MASK64
    if op == "and":
        r = MASK64
        for v in vals:
            r &= v
        return r
    if op == "or":
        r = 0
        for v in vals:
            r |= v
        return r
    if op == "xor":
        r = 0
        for v in vals:
            r ^= v
        return r
    if op == "not":
        return vals[0] ^ MASK64
    if op == "shl":
        return (vals[0] << (vals[1] & 63)) & MASK64
    if op == "shr":
        return vals[0] >> (vals[1] & 63)
    if op == "udiv":
        if vals[1] == 0:
            raise ZeroDivisionError("udiv by zero")
        return vals[0] // vals[1]
    if op == "umod":
        if vals[1] == 0:
            raise ZeroDivisionError("umod by zero")
        return vals[0] % vals[1]
    if op == "ltu":
        return 1 if vals[0] < vals[1] else 0
    if op == "parity":
        return 1 if bin(vals[0] & 0xFF).count("1") % 2 == 0 else 0
    if op == "fadd":
        return float_to_bits(bits_to_float(vals[0]) + bits_to_float(vals[1]))
    if op == "fmul":
        return float_to_bits(bits_to_float(vals[0]) * bits_to_float(vals[1]))
    if op == "flt":
        return 1 if bits_to_float(vals[0]) < bits_to_float(vals[1]) else 0
    raise ValueError(f"unknown operation {op!r}")


def make_op(op: str, *args: Expr) -> Expr:
    """Build an Op node, folding it when every argument is a literal.

    ``ret`` is never folded: its node marks a function exit and must stay
    recognizable in the block summary.
    """
    if op != "ret" and all(isinstance(a, Int) for a in args):
        node = Op(op, tuple(args))
        return Int(eval_op(op, [a.value for a in args]), node.size)
    return Op(op, tuple(args))
