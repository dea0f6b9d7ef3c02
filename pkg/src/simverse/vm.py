"""The universal stack machine: step-counted, deterministic, total.

One tick = one instruction of the innermost frame. An exhausted innermost
frame pops in one tick; popping the last frame halts with the top of the
data stack (empty string if none), clearing the stack. Dynamic faults
(stack underflow, UNPAIR of a non-pair, HEAD/TAIL of the empty string,
EVAL/IF of an undecodable program) halt with the empty string in the same
tick. Halted states are fixed points of step.

Wire format, 4-bit opcodes: QUOTE=0000 (followed by the delimited payload),
PAIR=0001, UNPAIR=0010, CONCAT=0011, SWAP=0100, DUP=0101, DROP=0110,
EVAL=0111, IF=1000, ISNIL=1001, HEAD=1010, TAIL=1011, CONS0=1100,
CONS1=1101; 1110 and 1111 are reserved and do not decode. IF pops the
condition c, then the false branch, then the true branch, and evaluates the
true branch iff c == "1".
"""

from __future__ import annotations

from collections import namedtuple

from ._core import kernel as _k
from .bits import BitString, bits, digest, to01
from .errors import MalformedProgram

QUOTE = _k.QUOTE
PAIR = _k.PAIR
UNPAIR = _k.UNPAIR
CONCAT = _k.CONCAT
SWAP = _k.SWAP
DUP = _k.DUP
DROP = _k.DROP
EVAL = _k.EVAL
IF = _k.IF
ISNIL = _k.ISNIL
HEAD = _k.HEAD
TAIL = _k.TAIL
CONS0 = _k.CONS0
CONS1 = _k.CONS1

OP_NAMES = _k.OP_NAMES
OP_BY_NAME = {name: i for i, name in enumerate(OP_NAMES)}

_NIBBLES = [_k.mk(format(i, "04b")) for i in range(16)]


class Instruction(namedtuple("Instruction", "op payload")):
    __slots__ = ()

    def __repr__(self):
        if self.op == QUOTE:
            return f"QUOTE({to01(self.payload)!r})" if self.payload.n <= 32 else f"QUOTE(<{self.payload.n} bits>)"
        return OP_NAMES[self.op]


def instr(op, payload=None) -> Instruction:
    if isinstance(op, str):
        op = OP_BY_NAME[op.upper()]
    if op == QUOTE:
        return Instruction(op, bits(payload if payload is not None else ""))
    if payload is not None:
        raise ValueError(f"{OP_NAMES[op]} takes no payload")
    return Instruction(op, None)


class Program:
    """A decodable instruction sequence together with its code bits."""

    __slots__ = ("instrs", "code", "_kprog", "_digest")

    def __init__(self, instrs, code, kprog):
        self.instrs = instrs
        self.code = code
        self._kprog = kprog
        self._digest = None

    def __len__(self):
        return len(self.instrs)

    def __eq__(self, other):
        return isinstance(other, Program) and _k.eq(self.code, other.code)

    def __hash__(self):
        return hash((self.code.n, len(self.instrs)))

    def __repr__(self):
        return f"Program({list(self.instrs)!r})" if len(self.instrs) <= 8 else f"Program(<{len(self.instrs)} instrs, {self.code.n} bits>)"


def program(instrs) -> Program:
    """Encode an instruction sequence; the canonical constructor.

    The code rope is built right to left so that the bits after each QUOTE
    nibble form the pair node (payload, rest-of-code) — frame suffixes then
    split with a single structural UNPAIR, which the in-machine stepper
    relies on.
    """
    norm = []
    for it in instrs:
        if not isinstance(it, Instruction):
            it = instr(*it) if isinstance(it, tuple) else instr(it)
        norm.append(it)
    acc = _k.EMPTY
    for it in reversed(norm):
        if it.op == QUOTE:
            acc = _k.concat(_NIBBLES[QUOTE], _k.pair(it.payload, acc))
        else:
            acc = _k.concat(_NIBBLES[it.op], acc)
    kprog = _k.attach(acc, [(it.op, it.payload) for it in norm])
    return Program(tuple(norm), acc, kprog)


def decode_program(code) -> Program:
    code = bits(code)
    kp = _k.decode(code)
    if isinstance(kp, int):
        raise MalformedProgram(kp)
    return Program(tuple(Instruction(op, p) for op, p in kp.instrs), code, kp)


def encode_program(instrs) -> BitString:
    return program(instrs).code


def code_digest(p: Program) -> str:
    """Hex SHA-256 of the code bits, cached; the stable identity used to
    key witness tables (generated programs can be millions of bits, too
    large to key by their flat text)."""
    if p._digest is None:
        p._digest = digest(p.code)
    return p._digest


def _as_kprog(p):
    if isinstance(p, Program):
        return p._kprog
    return decode_program(p)._kprog


class MachineID:
    """Immutable machine configuration: frames, data stack, status."""

    __slots__ = ("_m",)

    def __init__(self, m):
        self._m = m

    @property
    def halted(self) -> bool:
        return self._m.halted

    @property
    def running(self) -> bool:
        return not self._m.halted

    @property
    def data(self) -> tuple:
        return tuple(self._m.data)

    def frame_count(self) -> int:
        n = 0
        for fr in self._m.frames:
            n += fr.cnt if isinstance(fr, _k.EpsRun) else 1
        return n

    def top_frame(self):
        """(Program-code suffix rope, decoded instruction tuple, ip) of the innermost frame."""
        fr = self._m.frames[-1]
        if isinstance(fr, _k.EpsRun):
            return (_k.EMPTY, (), 0)
        return (fr.prog.suffix(fr.ip), fr.prog.instrs, fr.ip)

    def __eq__(self, other):
        return isinstance(other, MachineID) and _k.eq(enc(self), enc(other))

    def __hash__(self):
        return hash(to01(enc(self)))

    def __repr__(self):
        m = self._m
        if m.halted:
            return f"Halted({to01(m.out) if m.out.n <= 32 else f'<{m.out.n} bits>'})"
        return f"Running(frames={self.frame_count()}, data={len(m.data)})"


RunResult = namedtuple("RunResult", "halted output ticks")


def fresh(p) -> MachineID:
    """Initial configuration: one frame holding p, empty data stack."""
    return MachineID(_k.fresh(_as_kprog(p)))


def out(id: MachineID) -> BitString:
    if not id._m.halted:
        raise ValueError("out() is defined on Halted configurations only")
    return id._m.out


def enc(id: MachineID) -> BitString:
    """Injective structural encoding: pair("1", out) when halted,
    pair("0", pair(frame-list, data-list)) when running (lists are
    right-nested pairs, innermost frame and top-of-stack first)."""
    return _k.enc(id._m)


def step(id: MachineID) -> MachineID:
    """One tick; pure (returns a new configuration)."""
    m = _k.clone(id._m)
    _k.step(m)
    return MachineID(m)


def run(p, x, fuel: int) -> RunResult:
    """Run p with x pushed as the initial data stack; exact tick count.

    fuel >= 1; a non-halting result is RunResult(False, None, fuel) — a
    budget statement, never a non-halting claim.
    """
    if fuel < 1:
        raise ValueError("fuel must be >= 1")
    halted, output, ticks = _k.run(_as_kprog(p), bits(x), fuel)
    return RunResult(halted, output, ticks)


def univ_program() -> Program:
    """UNIV: run(UNIV, <p, x>) = run(p, x) for every halting pair."""
    return program([(UNPAIR, None), (SWAP, None), (EVAL, None)])
