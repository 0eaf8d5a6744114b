"""Interpreter, validator, and text-format tests for the mini-IR."""
import math
import random

import pytest

from obfscan.mir import (FRAME_BASE, MASK64, STACK_BASE, BasicBlock, Branch,
                         FImm, FuelExhausted, Function, Imm, Instruction,
                         Jump, MachineState, MalformedIR, Mem, Program, Reg,
                         Ret, Switch, parse_function, print_function,
                         run_block, run_function, validate)

I = Instruction


def block(bid, instrs, term):
    return BasicBlock(bid, tuple(instrs), term)


def func(name, params, blocks, tag=""):
    return Function(name, tuple(params), tuple(blocks), blocks[0].id, tag)


def factorial_fn():
    return func("factorial", ["R0"], [
        block("entry", [
            I("const", Reg("R1"), (Imm(1),)),
            I("const", Reg("R2"), (Imm(1),)),
        ], Jump("check")),
        block("check", [
            I("cmp_lt", Reg("R3"), (Reg("R0"), Reg("R2"))),
        ], Branch("R3", "done", "body")),
        block("body", [
            I("mul", Reg("R1"), (Reg("R1"), Reg("R2"))),
            I("add", Reg("R2"), (Reg("R2"), Imm(1))),
        ], Jump("check")),
        block("done", [], Ret("R1")),
    ], tag="factorial")


def signed(x):
    return x - (1 << 64) if x >= (1 << 63) else x


def test_factorial_of_five_is_120():
    # hand trace: acc multiplies 1*1*2*3*4*5 = 120
    assert run_function(factorial_fn(), [5]).value == 120


@pytest.mark.parametrize("n", [0, 1, 2, 7, 10])
def test_factorial_matches_reference(n):
    assert run_function(factorial_fn(), [n]).value == math.factorial(n) & MASK64


def test_run_is_deterministic():
    f = factorial_fn()
    a = run_function(f, [9])
    b = run_function(f, [9])
    assert a == b
    assert a.steps > 0


def test_identity_function():
    f = func("ident", ["R0"], [block("e", [], Ret("R0"))])
    assert run_function(f, [12345]).value == 12345


def test_infinite_loop_exhausts_fuel():
    f = func("spin", [], [block("e", [], Jump("e"))])
    with pytest.raises(FuelExhausted):
        run_function(f, [], fuel=500)


def test_machine_state_initial_values():
    s = MachineState.initial()
    assert s.regs["SP"] == STACK_BASE
    assert s.regs["BP"] == FRAME_BASE
    assert s.regs["R7"] == 0 and s.regs["zf"] == 0
    assert s.fregs["F0"] == 0.0
    assert s.mem == {}


EDGE = [0, 1, 2, 0xF, 0x10, MASK64, 1 << 63, (1 << 63) - 1, 0xFF, 0x123456789ABCDEF0]


def _flags_after(op, a, b):
    f = func("t", ["R0", "R1"], [block("e", [
        I(op, Reg("R2"), (Reg("R0"), Reg("R1"))),
    ], Ret("R2"))])
    s = MachineState.initial({"R0": a, "R1": b})
    out, _ = run_block(f.blocks[0], s)
    return out.regs


def test_add_flag_rules_exact():
    rng = random.Random(101)
    pairs = [(a, b) for a in EDGE for b in EDGE]
    pairs += [(rng.getrandbits(64), rng.getrandbits(64)) for _ in range(200)]
    for a, b in pairs:
        r = (a + b) & MASK64
        got = _flags_after("add", a, b)
        assert got["R2"] == r
        assert got["zf"] == (1 if r == 0 else 0)
        assert got["nf"] == (r >> 63)
        assert got["cf"] == (1 if a + b > MASK64 else 0)
        sr = signed(a) + signed(b)
        assert got["of"] == (0 if -(1 << 63) <= sr < (1 << 63) else 1)
        assert got["pf"] == (1 if bin(r & 0xFF).count("1") % 2 == 0 else 0)
        assert got["af"] == (1 if (a & 0xF) + (b & 0xF) > 0xF else 0)


def test_sub_flag_rules_exact():
    rng = random.Random(202)
    pairs = [(a, b) for a in EDGE for b in EDGE]
    pairs += [(rng.getrandbits(64), rng.getrandbits(64)) for _ in range(200)]
    for a, b in pairs:
        r = (a - b) & MASK64
        got = _flags_after("sub", a, b)
        assert got["R2"] == r
        assert got["zf"] == (1 if r == 0 else 0)
        assert got["nf"] == (r >> 63)
        assert got["cf"] == (1 if a < b else 0)
        sr = signed(a) - signed(b)
        assert got["of"] == (0 if -(1 << 63) <= sr < (1 << 63) else 1)
        assert got["pf"] == (1 if bin(r & 0xFF).count("1") % 2 == 0 else 0)
        assert got["af"] == (1 if (a & 0xF) < (b & 0xF) else 0)


def test_cmp_sets_flags_like_sub_and_writes_predicate():
    got = _flags_after("cmp_eq", 7, 7)
    assert got["R2"] == 1 and got["zf"] == 1
    got = _flags_after("cmp_eq", 7, 9)
    assert got["R2"] == 0 and got["zf"] == 0 and got["cf"] == 1
    got = _flags_after("cmp_lt", 3, 9)
    assert got["R2"] == 1 and got["cf"] == 1
    got = _flags_after("cmp_lt", 9, 3)
    assert got["R2"] == 0 and got["cf"] == 0


def test_logical_ops_clear_carry_family():
    for op in ("and", "or", "xor"):
        got = _flags_after(op, 0x0F, 0xF0)
        r = got["R2"]
        assert got["cf"] == 0 and got["of"] == 0 and got["af"] == 0
        assert got["zf"] == (1 if r == 0 else 0)
        assert got["nf"] == r >> 63
        assert got["pf"] == (1 if bin(r & 0xFF).count("1") % 2 == 0 else 0)


def test_mul_div_shift_leave_flags_untouched():
    for op in ("mul", "udiv", "umod", "shl", "shr"):
        f = func("t", ["R0", "R1"], [block("e", [
            I("add", Reg("R3"), (Reg("R0"), Reg("R1"))),  # sets flags
            I(op, Reg("R2"), (Reg("R0"), Imm(3))),
        ], Ret("R2"))])
        s = MachineState.initial({"R0": MASK64, "R1": 1})
        out, _ = run_block(f.blocks[0], s)
        assert out.regs["zf"] == 1 and out.regs["cf"] == 1  # still from the add


def test_shift_count_mod_64():
    f = func("t", ["R0", "R1"], [block("e", [
        I("shl", Reg("R2"), (Reg("R0"), Reg("R1"))),
    ], Ret("R2"))])
    assert run_function(f, [3, 64]).value == 3  # 64 & 63 == 0
    assert run_function(f, [3, 65]).value == 6


def test_division_by_zero_is_malformed():
    for op in ("udiv", "umod"):
        f = func("t", ["R0"], [block("e", [
            I(op, Reg("R1"), (Reg("R0"), Imm(0))),
        ], Ret("R1"))])
        with pytest.raises(MalformedIR):
            run_function(f, [5])


def test_memory_roundtrip_and_default_zero():
    f = func("t", ["R0"], [block("e", [
        I("store", Mem("BP", -3), (Reg("R0"),)),
        I("load", Reg("R1"), (Mem("BP", -3),)),
        I("load", Reg("R2"), (Mem("BP", -9),)),
        I("add", Reg("R1"), (Reg("R1"), Reg("R2"))),
    ], Ret("R1"))])
    assert run_function(f, [77]).value == 77  # unwritten slot reads 0


def test_push_pop_lifo_and_sp_balance():
    f = func("t", ["R0", "R1"], [block("e", [
        I("push", None, (Reg("R0"),)),
        I("push", None, (Reg("R1"),)),
        I("pop", Reg("R2"), ()),
        I("pop", Reg("R3"), ()),
        I("sub", Reg("R4"), (Reg("R2"), Reg("R3"))),
    ], Ret("R4"))])
    s = MachineState.initial({"R0": 10, "R1": 25})
    out, outcome = run_block(f.blocks[0], s)
    assert outcome == ("ret", (25 - 10) & MASK64)
    assert out.regs["SP"] == STACK_BASE


def test_run_block_does_not_modify_input_state():
    b = block("e", [I("const", Reg("R5"), (Imm(42),))], Jump("e"))
    s = MachineState.initial()
    before = dict(s.regs)
    out, outcome = run_block(b, s)
    assert s.regs == before and s.mem == {}
    assert out.regs["R5"] == 42
    assert outcome == ("jump", "e")


def test_run_block_branch_and_switch_outcomes():
    br = block("e", [], Branch("R0", "yes", "no"))
    assert run_block(br, MachineState.initial({"R0": 2}))[1] == ("jump", "yes")
    assert run_block(br, MachineState.initial({"R0": 0}))[1] == ("jump", "no")
    sw = block("e", [], Switch("R0", ((0, "a"), (5, "b")), "d"))
    assert run_block(sw, MachineState.initial({"R0": 5}))[1] == ("jump", "b")
    assert run_block(sw, MachineState.initial({"R0": 9}))[1] == ("jump", "d")


def test_block_stepping_matches_run_function():
    f = factorial_fn()
    blocks = {b.id: b for b in f.blocks}
    state = MachineState.initial({"R0": 6})
    cur = f.entry_block
    for _ in range(1000):
        state, outcome = run_block(blocks[cur], state)
        if outcome[0] == "ret":
            break
        cur = outcome[1]
    assert outcome == ("ret", run_function(f, [6]).value)


def test_float_ops():
    f = func("t", [], [block("e", [
        I("fconst", Reg("F0"), (FImm(1.5),)),
        I("fconst", Reg("F1"), (FImm(2.25),)),
        I("fadd", Reg("F2"), (Reg("F0"), Reg("F1"))),
        I("fmul", Reg("F3"), (Reg("F0"), Reg("F1"))),
        I("fcmp_lt", Reg("R0"), (Reg("F0"), Reg("F1"))),
    ], Ret("R0"))])
    s = MachineState.initial()
    out, outcome = run_block(f.blocks[0], s)
    assert out.fregs["F2"] == 3.75 and out.fregs["F3"] == 3.375
    assert outcome == ("ret", 1)
    assert out.regs["zf"] == 0  # float compare leaves flags alone


def test_validate_reports_structural_problems():
    bad = Function("f", ("R0",), (
        BasicBlock("e", (I("add", Reg("R1"), (Reg("R0"),)),), Jump("nowhere")),
        BasicBlock("e", (), Ret("R0")),
    ), "e", "")
    kinds = {v.kind for v in validate(Program((bad,), "f"))}
    assert "BadArity" in kinds
    assert "DanglingTarget" in kinds
    assert "DuplicateBlockId" in kinds


def test_validate_unknown_opcode_and_switch_dupes():
    bad = Function("f", (), (
        BasicBlock("e", (I("frob", Reg("R1"), ()),),
                   Switch("R0", ((1, "e"), (1, "e")), "e")),
    ), "e", "")
    kinds = {v.kind for v in validate(Program((bad,), "f"))}
    assert "UnknownOpcode" in kinds
    assert "DuplicateSwitchCase" in kinds


def test_validate_clean_function_has_no_violations():
    assert validate(Program((factorial_fn(),), "factorial")) == []


def everything_fn():
    return func("kitchen", ["R0", "R1"], [
        block("e", [
            I("const", Reg("R2"), (Imm(0xDEADBEEF),)),
            I("mov", Reg("R3"), (Reg("R2"),)),
            I("add", Reg("R4"), (Reg("R0"), Imm(7))),
            I("sub", Reg("R4"), (Reg("R4"), Reg("R1"))),
            I("mul", Reg("R4"), (Reg("R4"), Imm(3))),
            I("udiv", Reg("R5"), (Reg("R4"), Imm(5))),
            I("umod", Reg("R5"), (Reg("R5"), Imm(7))),
            I("and", Reg("R6"), (Reg("R5"), Imm(0xFF))),
            I("or", Reg("R6"), (Reg("R6"), Imm(0x10))),
            I("xor", Reg("R6"), (Reg("R6"), Reg("R0"))),
            I("not", Reg("R7"), (Reg("R6"),)),
            I("shl", Reg("R7"), (Reg("R7"), Imm(2))),
            I("shr", Reg("R7"), (Reg("R7"), Imm(1))),
            I("cmp_eq", Reg("R8"), (Reg("R7"), Imm(0))),
            I("cmp_lt", Reg("R8"), (Reg("R7"), Reg("R0"))),
            I("store", Mem("BP", -1), (Reg("R7"),)),
            I("store", Mem("BP", -2), (Imm(9),)),
            I("load", Reg("R9"), (Mem("BP", -1),)),
            I("push", None, (Reg("R9"),)),
            I("pop", Reg("R10"), ()),
            I("fconst", Reg("F0"), (FImm(0.5),)),
            I("fconst", Reg("F1"), (FImm(-2.75),)),
            I("fadd", Reg("F2"), (Reg("F0"), Reg("F1"))),
            I("fmul", Reg("F3"), (Reg("F2"), Reg("F0"))),
            I("fcmp_lt", Reg("R11"), (Reg("F3"), Reg("F0"))),
        ], Branch("R11", "sw", "done")),
        block("sw", [], Switch("R10", ((0, "done"), (2, "e")), "done")),
        block("done", [], Ret("R10")),
    ], tag="kitchen")


def test_text_roundtrip_exact():
    for f in (factorial_fn(), everything_fn()):
        text = print_function(f)
        assert parse_function(text) == f
        assert print_function(parse_function(text)) == text


def test_parse_rejects_garbage():
    with pytest.raises(MalformedIR):
        parse_function("func f()\nblock e:\n  zorble R0\n  ret R0\n")
    with pytest.raises(MalformedIR):
        parse_function("not a function at all")
    with pytest.raises(MalformedIR):
        parse_function("func f()\nblock e:\n  const R1, 0x1\n")  # no terminator
