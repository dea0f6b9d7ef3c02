"""Program specialization and self-reference.

smn(p, y) prepends a three-instruction glue that rebuilds the pair
⟨y, input⟩ before p's own code runs in the same frame, so specialization
is string concatenation and sizes stay linear.

fix(q) is the classic diagonal construction: k receives ⟨t, x⟩, rebuilds
smn(t, t) in-machine (which for t = k is the code of fix(q) itself), and
hands ⟨smn(t,t), x⟩ to q. e = smn(k, k) then satisfies
run(e, x) = run(q, ⟨e, x⟩).
"""

from collections import namedtuple

from . import vm
from .bits import BitString, bits, length, to01

# SWAP then PAIR, as code bits: the tail of the glue emitted by smn
_GLUE_TAIL = "01000001"


def _as_program(p) -> vm.Program:
    return p if isinstance(p, vm.Program) else vm.decode_program(p)


def smn(p, y) -> vm.Program:
    """Specialize p's first argument to y: run(smn(p, y), x) = run(p, ⟨y, x⟩)."""
    p = _as_program(p)
    y = bits(y)
    glue = [vm.instr(vm.QUOTE, y), vm.instr(vm.SWAP), vm.instr(vm.PAIR)]
    return vm.program(glue + list(p.instrs))


def smn_code() -> vm.Program:
    """In-machine smn: maps ⟨p, y⟩ to the code of smn(p, y).

    QUOTE y is rebuilt as "0000" ++ delimit(y) (PAIR with the empty string
    then four CONS0), the SWAP/PAIR nibbles are appended, and p's code is
    concatenated after the glue.
    """
    return vm.program(
        [
            vm.instr(vm.UNPAIR),            # [p, y]
            vm.instr(vm.QUOTE, ""),
            vm.instr(vm.PAIR),              # [p, delimit(y)]
            vm.instr(vm.CONS0),
            vm.instr(vm.CONS0),
            vm.instr(vm.CONS0),
            vm.instr(vm.CONS0),             # [p, code([QUOTE y])]
            vm.instr(vm.QUOTE, _GLUE_TAIL),
            vm.instr(vm.CONCAT),            # [p, code(glue)]
            vm.instr(vm.SWAP),
            vm.instr(vm.CONCAT),            # [code(glue) ++ p]
        ]
    )


def _diagonal(q: vm.Program) -> vm.Program:
    """k: on ⟨t, x⟩, build smn(t, t)'s code, then run q on ⟨smn(t,t), x⟩."""
    return vm.program(
        [
            vm.instr(vm.UNPAIR),            # [t, x]
            vm.instr(vm.SWAP),              # [x, t]
            vm.instr(vm.DUP),               # [x, t, t]
            vm.instr(vm.QUOTE, ""),
            vm.instr(vm.PAIR),              # [x, t, delimit(t)]
            vm.instr(vm.CONS0),
            vm.instr(vm.CONS0),
            vm.instr(vm.CONS0),
            vm.instr(vm.CONS0),             # [x, t, code([QUOTE t])]
            vm.instr(vm.QUOTE, _GLUE_TAIL),
            vm.instr(vm.CONCAT),            # [x, t, code(glue)]
            vm.instr(vm.SWAP),
            vm.instr(vm.CONCAT),            # [x, smn(t, t)]
            vm.instr(vm.SWAP),              # [smn(t,t), x]
            vm.instr(vm.PAIR),              # [⟨smn(t,t), x⟩]
            vm.instr(vm.QUOTE, q.code),
            vm.instr(vm.EVAL),
        ]
    )


def fix(q) -> vm.Program:
    """Fixed point: run(fix(q), x) = run(q, ⟨fix(q), x⟩) wherever q halts."""
    q = _as_program(q)
    k = _diagonal(q)
    return smn(k, k.code)


FixpointReport = namedtuple("FixpointReport", "fixed_point construction_steps size_bits")


def fix_report(q) -> FixpointReport:
    q = _as_program(q)
    k = _diagonal(q)
    e = smn(k, k.code)
    steps = (
        f"q: {len(q)} instrs, {length(q.code)} bits; "
        f"k = diagonal(q): {len(k)} instrs, {length(k.code)} bits; "
        f"e = smn(k, code(k)): {len(e)} instrs, {length(e.code)} bits"
    )
    assert vm.decode_program(bits(to01(e.code))) == e
    return FixpointReport(e, steps, length(e.code))


def quine() -> vm.Program:
    """A program that outputs its own code on every input."""
    # q that returns the self-index: ⟨e, x⟩ -> e
    q = vm.program([vm.instr(vm.UNPAIR), vm.instr(vm.DROP)])
    return fix(q)
