"""Mini register-machine IR: types, validator, interpreter, text format."""

from .core import (ALL_REGS, F_REGS, FLAG_REGS, GP_REGS, INT_REGS, MASK64,
                   PTR_REGS, BasicBlock, Branch, FImm, Function, Imm,
                   Instruction, Jump, MalformedIR, Mem, MirError, Program,
                   Reg, Ret, Switch, Violation, registers_used,
                   static_bp_offsets, static_bp_stores_loads, validate,
                   validate_function)
from .interp import (DEFAULT_FUEL, FRAME_BASE, STACK_BASE, FuelExhausted,
                     FunctionRunner, InterpResult, MachineState, run_block,
                     run_function)
from .textfmt import (parse_function, parse_program, print_function,
                      print_program)

__all__ = [
    "ALL_REGS", "F_REGS", "FLAG_REGS", "GP_REGS", "INT_REGS", "MASK64",
    "PTR_REGS", "BasicBlock", "Branch", "FImm", "Function", "Imm",
    "Instruction", "Jump", "MalformedIR", "Mem", "MirError", "Program",
    "Reg", "Ret", "Switch", "Violation", "registers_used",
    "static_bp_offsets", "static_bp_stores_loads", "validate",
    "validate_function",
    "DEFAULT_FUEL", "FRAME_BASE", "STACK_BASE", "FuelExhausted",
    "FunctionRunner", "InterpResult", "MachineState", "run_block",
    "run_function", "parse_function", "parse_program", "print_function",
    "print_program",
]
