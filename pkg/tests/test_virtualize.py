"""Bytecode virtualization: behavior, ISA coverage, dispatch constructions."""
import random

import pytest

from obfscan.families import FAMILIES, FAMILY_NAMES
from obfscan.mir import (MASK64, Branch, FunctionRunner, Ret, Switch,
                         parse_function, print_function, registers_used,
                         run_function, validate_function)
from obfscan.transforms import (CONSTRUCTIONS, PassContext, TransformError,
                                encode_data, encode_literals, substitute,
                                virtualize)

M = MASK64
GUEST = {f"R{i}" for i in range(8)} | {"SP", "BP"}


def _handler_blocks(g):
    return [b for b in g.blocks if b.id.startswith("vm_h_")]


@pytest.mark.parametrize("construction", CONSTRUCTIONS["Virt"])
@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_virtualize_preserves(name, construction):
    fam = FAMILIES[name]
    fn, _ = fam.build(random.Random(13))
    g = virtualize(fn, PassContext(random.Random(7)),
                   construction=construction)
    assert validate_function(g) == []
    plain, vm = FunctionRunner(fn), FunctionRunner(g)
    rng = random.Random(1)
    argsets = [tuple(0 for _ in range(fam.arity)),
               tuple(M for _ in range(fam.arity))]
    argsets += [tuple(rng.getrandbits(64) for _ in range(fam.arity))
                for _ in range(10)]
    for args in argsets:
        assert plain.run(list(args)).value == vm.run(list(args)).value, \
            (name, construction, args)


def test_no_scratch_registers_consumed():
    fn, _ = FAMILIES["matmul2"].build(random.Random(3))
    ctx = PassContext(random.Random(4))
    g = virtualize(fn, ctx)
    assert registers_used(g) <= GUEST
    # the whole scratch pool stays available to later passes
    assert len(ctx.claim_regs(g, 8, "later pass")) == 8


def test_rejects_floats():
    fn = parse_function(f"""func ff(R0) tag=ff
block entry:
  fconst F0, {(2.5).hex()}
  fconst F1, {(1.0).hex()}
  fadd F2, F0, F1
  fcmp_lt R1, F2, F0
  ret R1
""")
    with pytest.raises(TransformError):
        virtualize(fn, PassContext(random.Random(0)))


def test_rejects_flag_branches():
    fn = parse_function("""func fb(R0) tag=fb
block entry:
  cmp_eq R1, R0, 0x0
  branch zf, a, b
block a:
  ret R1
block b:
  ret R0
""")
    with pytest.raises(TransformError):
        virtualize(fn, PassContext(random.Random(0)))


def test_rejects_scratch_users():
    fn = parse_function("""func sc(R0) tag=sc
block entry:
  add R9, R0, 0x1
  jump out
block out:
  ret R9
""")
    with pytest.raises(TransformError):
        virtualize(fn, PassContext(random.Random(0)))


def test_rejects_unknown_construction():
    fn, _ = FAMILIES["gcd"].build(random.Random(1))
    with pytest.raises(TransformError):
        virtualize(fn, PassContext(random.Random(0)), construction="wat")


def test_switch_dispatch_shape():
    fn, _ = FAMILIES["crc_mix"].build(random.Random(5))
    g = virtualize(fn, PassContext(random.Random(2)),
                   construction="switch_dispatch")
    switches = [b for b in g.blocks if isinstance(b.terminator, Switch)]
    assert len(switches) == 1
    sw = switches[0].terminator
    assert switches[0].id == "vm_fetch"
    assert sw.scrutinee == "R5"
    assert len(sw.cases) == len(_handler_blocks(g))
    assert isinstance(g.block(sw.default).terminator, Ret)
    # every opcode number is distinct and nonzero
    nums = [v for v, _ in sw.cases]
    assert len(set(nums)) == len(nums)
    assert all(1 <= v < 100 for v in nums)


def test_linear_dispatch_shape():
    fn, _ = FAMILIES["crc_mix"].build(random.Random(5))
    g = virtualize(fn, PassContext(random.Random(2)),
                   construction="linear_dispatch")
    assert not any(isinstance(b.terminator, Switch) for b in g.blocks)
    chain = [b for b in g.blocks
             if len(b.instrs) == 1 and b.instrs[0].opcode == "cmp_eq"
             and b.instrs[0].srcs[0].name == "R5"]
    assert len(chain) == len(_handler_blocks(g))
    # the chain terminates in the trap
    tails = {b.terminator.else_target for b in chain}
    assert "vm_trap" in tails


def test_ifnest_dispatch_shape():
    fn, _ = FAMILIES["crc_mix"].build(random.Random(5))
    g = virtualize(fn, PassContext(random.Random(2)),
                   construction="ifnest_dispatch")
    assert not any(isinstance(b.terminator, Switch) for b in g.blocks)
    nodes = [b for b in g.blocks
             if len(b.instrs) == 1 and b.instrs[0].opcode == "cmp_lt"
             and b.instrs[0].srcs[0].name == "R5"]
    assert len(nodes) == len(_handler_blocks(g)) - 1


def test_opcode_numbers_vary_with_seed():
    fn, _ = FAMILIES["fnv_hash"].build(random.Random(8))
    a = virtualize(fn, PassContext(random.Random(1)))
    b = virtualize(fn, PassContext(random.Random(2)))
    c = virtualize(fn, PassContext(random.Random(1)))
    assert print_function(a) != print_function(b)
    assert print_function(a) == print_function(c)
    for x in (0, 3, 12345):
        expect = run_function(fn, [x]).value
        assert run_function(a, [x]).value == expect
        assert run_function(b, [x]).value == expect


def test_guest_switch_lowering():
    fn = parse_function("""func pick(R0) tag=pick
block entry:
  umod R1, R0, 0xa
  switch R1, 0x3:three, 0x7:seven, default:other
block three:
  const R2, 0x111
  ret R2
block seven:
  const R2, 0x777
  ret R2
block other:
  add R2, R1, 0x1000
  ret R2
""")
    g = virtualize(fn, PassContext(random.Random(6)))
    assert validate_function(g) == []
    for x in (3, 7, 13, 17, 0, 9):
        assert run_function(g, [x]).value == run_function(fn, [x]).value, x


def test_guest_stack_and_unary_ops():
    fn = parse_function("""func mix(R0, R1) tag=mix
block entry:
  push R0
  push R1
  pop R2
  not R3, R2
  udiv R4, R3, 0x7
  umod R5, R4, 0x9
  pop R6
  shl R7, R6, 0x5
  jump fin
block fin:
  add R2, R4, R5
  add R2, R2, R7
  sub R2, R2, R3
  ret R2
""")
    g = virtualize(fn, PassContext(random.Random(9)))
    assert validate_function(g) == []
    rng = random.Random(0)
    for _ in range(12):
        args = [rng.getrandbits(64), rng.getrandbits(64)]
        assert run_function(g, args).value == run_function(fn, args).value


def test_downstream_passes_compose():
    fam = FAMILIES["insertion_sort"]
    fn, _ = fam.build(random.Random(10))
    ctx = PassContext(random.Random(20))
    g = virtualize(fn, ctx, construction="ifnest_dispatch")
    g = encode_data(g, ctx)  # the interpreter keeps an eligible local
    g = substitute(g, ctx)
    g = encode_literals(g, ctx)
    assert validate_function(g) == []
    rng = random.Random(2)
    for _ in range(8):
        x = rng.getrandbits(64)
        assert run_function(g, [x]).value == run_function(fn, [x]).value


def test_vm_on_vm():
    fam = FAMILIES["gcd"]
    fn, _ = fam.build(random.Random(3))
    ctx = PassContext(random.Random(9))
    g = virtualize(fn, ctx)
    h = virtualize(g, ctx, construction="linear_dispatch")
    rng = random.Random(1)
    for _ in range(3):
        args = [rng.getrandbits(64), rng.getrandbits(64)]
        res = run_function(h, args)  # default fuel must suffice
        assert res.value == run_function(fn, args).value
