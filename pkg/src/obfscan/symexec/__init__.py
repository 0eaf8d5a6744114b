"""Block-level symbolic summaries of mini-IR code."""
from .engine import (BlockSemantics, FunctionSemantics, concretize,
                     exec_block, exec_function, render_block_debug,
                     render_debug)
from .expr import (Cond, Expr, Id, Int, Mem, Op, Slice, bits_to_float,
                   eval_op, float_to_bits, make_op)

__all__ = [
    "BlockSemantics", "FunctionSemantics", "concretize", "exec_block",
    "exec_function", "render_block_debug", "render_debug",
    "Cond", "Expr", "Id", "Int", "Mem", "Op", "Slice",
    "bits_to_float", "eval_op", "float_to_bits", "make_op",
]
