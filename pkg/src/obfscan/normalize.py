"""Normalized raw-data documents from block-level symbolic summaries.

Every identifier becomes REGn and every literal becomes vn, numbered
densely by first appearance across the whole document; operators become
alphanumeric words so downstream tokenization never splits them. The
verbose pre-normalization rendering and a Listing-style glyph form stay
available for debugging only.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .symexec import (BlockSemantics, Cond, FunctionSemantics, Id, Int, Mem,
                      Op, Slice, exec_function)

OP_WORDS = {
    "add": "opadd", "sub": "opsub", "mul": "opmul", "udiv": "opudiv",
    "umod": "opumod", "and": "opand", "or": "opor", "xor": "opxor",
    "not": "opnot", "shl": "opshl", "shr": "opshr", "ltu": "opltu",
    "parity": "opparity", "ret": "opret", "fadd": "opfadd",
    "fmul": "opfmul", "flt": "opflt",
}

# glyph forms for the human printer only; featurized text never uses them
_GLYPH_WORDS = {
    "opadd": "op+", "opsub": "op-", "opxor": "op^", "opand": "op&",
    "opor": "op|", "opudiv": "op/", "opumod": "op%", "opshl": "op<<",
    "opshr": "op>>",
}

_KEYWORDS = frozenset({"blocksep", "IRDst", "ExprMem", "ExprOp",
                       "ExprSlice", "ExprCond"})
BLOCK_SEPARATOR = "blocksep"
MANIFEST_NAME = "rawdata.tsv"


@dataclass(frozen=True)
class RawDocument:
    text: str
    labels: frozenset = frozenset()
    construction_labels: dict = field(default_factory=dict)
    functionality_tag: str = ""
    seed: int = 0
    source_sample: object = None


class _Renamer:
    def __init__(self):
        self.ids = {}
        self.consts = {}

    def reg(self, name: str) -> str:
        if name not in self.ids:
            self.ids[name] = f"REG{len(self.ids)}"
        return self.ids[name]

    def const(self, value: int, size: int) -> str:
        key = (value, size)
        if key not in self.consts:
            self.consts[key] = f"v{len(self.consts)}"
        return self.consts[key]


def _render(e, rn: _Renamer) -> str:
    if isinstance(e, Id):
        return rn.reg(e.name)
    if isinstance(e, Int):
        return rn.const(e.value, e.size)
    if isinstance(e, Op):
        args = ", ".join(_render(a, rn) for a in e.args)
        return f"ExprOp({OP_WORDS[e.op]}, {args})"
    if isinstance(e, Mem):
        return f"ExprMem({_render(e.addr, rn)}, size{e.size})"
    if isinstance(e, Slice):
        return f"ExprSlice({_render(e.e, rn)}, size{e.start}, size{e.stop})"
    if isinstance(e, Cond):
        parts = (_render(e.cond, rn), _render(e.then, rn),
                 _render(e.orelse, rn))
        return "ExprCond(%s, %s, %s)" % parts
    raise TypeError(f"cannot render {e!r}")


def normalize(sem: FunctionSemantics) -> RawDocument:
    rn = _Renamer()
    lines = []
    for i, b in enumerate(sem.blocks):
        if i:
            lines.append(BLOCK_SEPARATOR)
        for lhs, rhs in b.assignments:
            lines.append(f"{_render(lhs, rn)} = {_render(rhs, rn)}")
        lines.append(f"IRDst = {_render(b.irdst, rn)}")
    return RawDocument("\n".join(lines) + "\n",
                       functionality_tag=sem.functionality_tag)


def renumber_text(text: str) -> str:
    """Re-apply first-appearance numbering to an already normalized text.

    A canonical document maps to itself; anything with shuffled or gapped
    indices comes out dense.
    """
    tabs = {"REG": {}, "v": {}}

    def repl(m):
        tab = tabs[m.group(1)]
        tok = m.group(0)
        if tok not in tab:
            tab[tok] = f"{m.group(1)}{len(tab)}"
        return tab[tok]

    return re.sub(r"\b(REG|v)(\d+)\b", repl, text)


def renumber_scope_check(doc: RawDocument) -> list:
    """Violations of the normalized-text contract; empty means clean."""
    violations = []
    regs, consts = set(), set()
    for tok in re.findall(r"[A-Za-z0-9]+", doc.text):
        if tok in _KEYWORDS or tok in OP_WORDS.values():
            continue
        if re.fullmatch(r"REG(\d+)", tok):
            regs.add(int(tok[3:]))
        elif re.fullmatch(r"v(\d+)", tok):
            consts.add(int(tok[1:]))
        elif re.fullmatch(r"size\d+", tok):
            continue
        elif tok.startswith("0x") or tok.isdigit():
            violations.append(f"RawConstantLeak: {tok!r}")
        else:
            violations.append(f"UnknownToken: {tok!r}")
    for kind, seen in (("REG", regs), ("v", consts)):
        if seen and seen != set(range(max(seen) + 1)):
            missing = sorted(set(range(max(seen) + 1)) - seen)
            violations.append(f"NonDenseNumbering: {kind} missing {missing}")
    return violations


def listing_style(text: str) -> str:
    """Glyphed operator rendering for eyeballing; never featurized."""
    out = text
    for word, glyph in _GLYPH_WORDS.items():
        out = re.sub(rf"\b{word}\b", glyph.replace("\\", "\\\\"), out)
    return out


def _render_raw(e) -> str:
    """Pre-normalization rendering: full names, sizes, hex literals."""
    if isinstance(e, Id):
        return f"ExprId({e.name!r}, size={e.size})"
    if isinstance(e, Int):
        return f"ExprInt({e.value:#x}, {e.size})"
    if isinstance(e, Op):
        word = OP_WORDS[e.op]
        glyph = _GLYPH_WORDS.get(word, word)[2:] or word
        args = ", ".join(_render_raw(a) for a in e.args)
        return f"ExprOp({glyph!r}, {args})"
    if isinstance(e, Mem):
        return f"ExprMem({_render_raw(e.addr)}, size={e.size})"
    if isinstance(e, Slice):
        return f"ExprSlice({_render_raw(e.e)}, {e.start}, {e.stop})"
    if isinstance(e, Cond):
        parts = (_render_raw(e.cond), _render_raw(e.then),
                 _render_raw(e.orelse))
        return "ExprCond(%s, %s, %s)" % parts
    raise TypeError(f"cannot render {e!r}")


def render_block_raw(sem: BlockSemantics) -> str:
    lines = [f"{_render_raw(lhs)} = {_render_raw(rhs)}"
             for lhs, rhs in sem.assignments]
    lines.append(f"IRDst = {_render_raw(sem.irdst)}")
    return "\n".join(lines)


def render_function_raw(sem: FunctionSemantics) -> str:
    chunks = [f"# block {b.block_id}\n{render_block_raw(b)}"
              for b in sem.blocks]
    return "\n".join(chunks) + "\n"


def corpus_to_rawdata(samples) -> list:
    """One normalized document per sample, labels carried through."""
    docs = []
    for s in samples:
        doc = normalize(exec_function(s.function))
        docs.append(replace(doc, labels=frozenset(s.labels),
                            construction_labels=dict(s.construction_labels),
                            seed=s.seed, source_sample=s))
    return docs


def _constructions_field(doc: RawDocument) -> str:
    return ";".join(f"{k}:{v}"
                    for k, v in sorted(doc.construction_labels.items()))


def write_rawdata(docs, outdir) -> Path:
    """Documents as text files plus a tab-separated manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = ["file\tlabels\tconstructions\ttag\tseed"]
    for i, doc in enumerate(docs):
        fname = f"doc_{i:05d}.txt"
        (outdir / fname).write_text(doc.text)
        rows.append("\t".join([
            fname, ";".join(sorted(doc.labels)), _constructions_field(doc),
            doc.functionality_tag, str(doc.seed)]))
    manifest = outdir / MANIFEST_NAME
    manifest.write_text("\n".join(rows) + "\n")
    return manifest


def read_rawdata(outdir) -> list:
    outdir = Path(outdir)
    lines = (outdir / MANIFEST_NAME).read_text().splitlines()
    docs = []
    for row in lines[1:]:
        fname, labels, constructions, tag, seed = row.split("\t")
        cons = dict(part.split(":") for part in constructions.split(";")
                    if part)
        docs.append(RawDocument(
            (outdir / fname).read_text(),
            frozenset(labels.split(";")) if labels else frozenset(),
            cons, tag, int(seed)))
    return docs
