"""Line-oriented text serialization for the mini-IR.

`parse_function(print_function(f))` reproduces `f` exactly; printed text is
canonical, so printing after a parse is also byte-stable. Integer immediates
render as hex, float immediates use `float.hex()` to stay lossless.
"""
from __future__ import annotations

import re

from .core import (MASK64, BasicBlock, Branch, FImm, Function, Imm, Instruction,
                   Jump, MalformedIR, Mem, Program, Reg, Ret, Switch,
                   _SIGNATURES)

_NAME = r"[A-Za-z_][A-Za-z0-9_.]*"
_FUNC_RE = re.compile(rf"^func ({_NAME})\(([^)]*)\)(?: tag=({_NAME}))?$")
_BLOCK_RE = re.compile(rf"^block ({_NAME}):$")
_MEM_RE = re.compile(r"^\[([A-Za-z0-9]+)([+-])(\d+)\]$")


def _fmt_imm(value: int) -> str:
    return f"0x{value & MASK64:x}"


def _fmt_operand(op) -> str:
    if isinstance(op, Reg):
        return op.name
    if isinstance(op, Imm):
        return _fmt_imm(op.value)
    if isinstance(op, FImm):
        return float(op.value).hex()
    if isinstance(op, Mem):
        sign = "-" if op.offset < 0 else "+"
        return f"[{op.base}{sign}{abs(op.offset)}]"
    raise MalformedIR(f"unprintable operand {op!r}")


def _fmt_instr(ins: Instruction) -> str:
    ops = ([] if ins.dst is None else [ins.dst]) + list(ins.srcs)
    if not ops:
        return f"  {ins.opcode}"
    return f"  {ins.opcode} " + ", ".join(_fmt_operand(o) for o in ops)


def _fmt_terminator(term) -> str:
    if isinstance(term, Jump):
        return f"  jump {term.target}"
    if isinstance(term, Branch):
        return f"  branch {term.cond}, {term.then_target}, {term.else_target}"
    if isinstance(term, Switch):
        cases = ", ".join(f"{_fmt_imm(v)}:{t}" for v, t in term.cases)
        sep = ", " if cases else ""
        return f"  switch {term.scrutinee}, {cases}{sep}default:{term.default}"
    if isinstance(term, Ret):
        return f"  ret {term.reg}"
    raise MalformedIR(f"unprintable terminator {term!r}")


def print_function(f: Function) -> str:
    lines = []
    tag = f" tag={f.functionality_tag}" if f.functionality_tag else ""
    lines.append(f"func {f.name}({', '.join(f.params)}){tag}")
    for b in f.blocks:
        lines.append(f"block {b.id}:")
        for ins in b.instrs:
            lines.append(_fmt_instr(ins))
        lines.append(_fmt_terminator(b.terminator))
    return "\n".join(lines) + "\n"


def print_program(p: Program) -> str:
    head = f"program entry={p.entry}\n"
    return head + "\n".join(print_function(f) for f in p.functions)


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def error(self, msg: str) -> MalformedIR:
        return MalformedIR(f"line {self.pos}: {msg}")

    def peek(self):
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def take(self):
        line = self.peek()
        if line is not None:
            self.pos += 1
        return line

    def _parse_int(self, text: str) -> int:
        try:
            return int(text, 0) & MASK64
        except ValueError:
            raise self.error(f"bad integer {text!r}") from None

    def _parse_operand(self, kind: str, text: str):
        text = text.strip()
        if kind in ("r", "f"):
            return Reg(text)
        if kind == "i":
            return Imm(self._parse_int(text))
        if kind == "x":
            try:
                return FImm(float.fromhex(text))
            except ValueError:
                raise self.error(f"bad float {text!r}") from None
        if kind == "o":
            if text.startswith(("0x", "-")) or text.isdigit():
                return Imm(self._parse_int(text))
            return Reg(text)
        if kind == "m":
            m = _MEM_RE.match(text)
            if not m:
                raise self.error(f"bad memory operand {text!r}")
            off = int(m.group(3))
            return Mem(m.group(1), -off if m.group(2) == "-" else off)
        raise self.error(f"bad operand kind {kind!r}")

    def parse_instr_line(self, line: str):
        body = line.strip()
        head, _, rest = body.partition(" ")
        parts = [p.strip() for p in rest.split(",")] if rest.strip() else []
        if head in ("jump", "branch", "switch", "ret"):
            return self._parse_terminator(head, body, parts)
        sig = _SIGNATURES.get(head)
        if sig is None:
            raise self.error(f"unknown opcode {head!r}")
        dst_kind, src_kinds = sig
        kinds = ([] if dst_kind is None else [dst_kind]) + list(src_kinds)
        if len(parts) != len(kinds):
            raise self.error(f"{head} expects {len(kinds)} operands, got {len(parts)}")
        ops = [self._parse_operand(k, p) for k, p in zip(kinds, parts)]
        if dst_kind is None:
            return Instruction(head, None, tuple(ops))
        return Instruction(head, ops[0], tuple(ops[1:]))

    def _parse_terminator(self, head: str, body: str, parts):
        if head == "jump":
            target = body.split(None, 1)[1].strip()
            return Jump(target)
        if head == "ret":
            return Ret(body.split(None, 1)[1].strip())
        if head == "branch":
            if len(parts) != 3:
                raise self.error("branch expects cond, then, else")
            return Branch(parts[0], parts[1], parts[2])
        cases = []
        default = None
        for item in parts[1:]:
            key, _, target = item.partition(":")
            if not target:
                raise self.error(f"bad switch case {item!r}")
            if key.strip() == "default":
                default = target.strip()
            else:
                cases.append((self._parse_int(key.strip()), target.strip()))
        if default is None:
            raise self.error("switch needs a default case")
        return Switch(parts[0], tuple(cases), default)

    def parse_function(self) -> Function:
        line = self.take()
        if line is None:
            raise self.error("expected func header")
        m = _FUNC_RE.match(line.strip())
        if not m:
            raise self.error(f"bad func header {line.strip()!r}")
        name, params_text, tag = m.group(1), m.group(2), m.group(3) or ""
        params = tuple(p.strip() for p in params_text.split(",") if p.strip())
        blocks = []
        while True:
            line = self.peek()
            if line is None or not _BLOCK_RE.match(line.strip()):
                break
            block_id = _BLOCK_RE.match(self.take().strip()).group(1)
            instrs = []
            terminator = None
            while True:
                line = self.peek()
                if line is None:
                    raise self.error(f"block {block_id!r} has no terminator")
                item = self.parse_instr_line(self.take())
                if isinstance(item, Instruction):
                    instrs.append(item)
                else:
                    terminator = item
                    break
            blocks.append(BasicBlock(block_id, tuple(instrs), terminator))
        if not blocks:
            raise self.error(f"function {name!r} has no blocks")
        return Function(name, params, tuple(blocks), blocks[0].id, tag)


def parse_function(text: str) -> Function:
    parser = _Parser(text)
    f = parser.parse_function()
    if parser.peek() is not None:
        raise parser.error("trailing content after function")
    return f


def parse_program(text: str) -> Program:
    parser = _Parser(text)
    entry = None
    line = parser.peek()
    if line is not None and line.startswith("program "):
        parser.take()
        m = re.match(rf"^program entry=({_NAME})$", line.strip())
        if not m:
            raise parser.error(f"bad program header {line.strip()!r}")
        entry = m.group(1)
    functions = []
    while parser.peek() is not None:
        functions.append(parser.parse_function())
    if not functions:
        raise MalformedIR("no functions in program text")
    return Program(tuple(functions), entry or functions[0].name)
