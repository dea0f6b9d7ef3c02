"""Coupled environment + machine dynamics.

A universe is a finite environment W = {0,1}^w_width with a total update
table omega, coupled to one machine. The tick 0->1 transition pushes the
initial environment value onto the machine's data stack; after that the
machine is shielded (nothing environmental reaches it again). The
environment updates every tick; the machine steps once per tick, or once
every clock_divisor ticks when the spec slows it down.

evolve() is the ground-truth oracle every other module is checked against.
"""

from collections import namedtuple

from ._core import kernel as _k
from . import vm
from .bits import BitString, bits, length, to01
from .errors import OutOfFuel, TooLargeToEnumerate, WidthMismatch

COUPLING = "copy-at-tick-1"


class UniverseSpec:
    """w_width, omega table (tuple of ints, index = current value), and an
    optional clock divisor (machine steps only when tick % divisor == 0)."""

    __slots__ = ("w_width", "omega", "clock_divisor", "coupling", "_wbits", "name")

    def __init__(self, w_width, omega, clock_divisor=1, name=""):
        if w_width < 1:
            raise ValueError("w_width must be >= 1")
        size = 2 ** w_width
        omega = tuple(int(v) for v in omega)
        if len(omega) != size:
            raise ValueError(f"omega table needs {size} entries, got {len(omega)}")
        if any(v < 0 or v >= size for v in omega):
            raise ValueError("omega entry out of range")
        if clock_divisor < 1:
            raise ValueError("clock_divisor must be >= 1")
        self.w_width = w_width
        self.omega = omega
        self.clock_divisor = int(clock_divisor)
        self.coupling = COUPLING
        self._wbits = tuple(_k.mk(format(v, f"0{w_width}b")) for v in range(size))
        self.name = name

    def wbits(self, v: int) -> BitString:
        return self._wbits[v]

    def windex(self, w) -> int:
        w = bits(w)
        if w.n != self.w_width:
            raise WidthMismatch(f"|w| = {w.n}, spec width {self.w_width}")
        return int(to01(w), 2)

    def __eq__(self, other):
        return (
            isinstance(other, UniverseSpec)
            and self.w_width == other.w_width
            and self.omega == other.omega
            and self.clock_divisor == other.clock_divisor
        )

    def __repr__(self):
        tag = f" name={self.name}" if self.name else ""
        return f"UniverseSpec(w_width={self.w_width}, divisor={self.clock_divisor}{tag})"


def parse_universe(text: str, name="") -> UniverseSpec:
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        fields[key] = val
    if "w_width" not in fields or "omega" not in fields:
        raise ValueError("spec needs w_width= and omega= lines")
    width = int(fields["w_width"])
    entries = [e.strip() for e in fields["omega"].split(",")]
    table = []
    for e in entries:
        if len(e) != width or set(e) - {"0", "1"}:
            raise ValueError(f"omega entry {e!r} is not a {width}-bit string")
        table.append(int(e, 2))
    divisor = int(fields.get("clock_divisor", "1"))
    return UniverseSpec(width, table, divisor, name=name)


def serialize_universe(u: UniverseSpec) -> str:
    rows = ",".join(format(v, f"0{u.w_width}b") for v in u.omega)
    lines = [f"w_width={u.w_width}", f"omega={rows}"]
    if u.clock_divisor != 1:
        lines.append(f"clock_divisor={u.clock_divisor}")
    return "\n".join(lines) + "\n"


def load_universe(path) -> UniverseSpec:
    import os

    with open(path) as fh:
        return parse_universe(fh.read(), name=os.path.splitext(os.path.basename(path))[0])


UniverseState = namedtuple("UniverseState", "t w id")


def init_state(u: UniverseSpec, w0, p) -> UniverseState:
    w0 = bits(w0)
    if w0.n != u.w_width:
        raise WidthMismatch(f"|w0| = {w0.n}, spec width {u.w_width}")
    if not isinstance(p, vm.Program):
        p = vm.decode_program(p)
    return UniverseState(0, w0, vm.fresh(p))


def continue_state(u: UniverseSpec, st: UniverseState, dt: int) -> UniverseState:
    """Advance dt ticks from st. States at t=0 receive the coupling push on
    their first tick; states at t >= 1 evolve purely."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return st
    m = _k.clone(st.id._m)
    w = u.windex(st.w)
    w = _k.evolve_span(m, w, u.omega, u.clock_divisor, st.t, dt, u._wbits, None, None)
    return UniverseState(st.t + dt, u.wbits(w), vm.MachineID(m))


def evolve(u: UniverseSpec, dt: int, w0, p):
    """(w_dt, enc(id_dt)): the one-tick map applied exactly dt times."""
    st = continue_state(u, init_state(u, w0, p), dt)
    return (st.w, vm.enc(st.id))


def evolve_state(u: UniverseSpec, dt: int, w0, p) -> UniverseState:
    return continue_state(u, init_state(u, w0, p), dt)


def evolve_snapshots(u: UniverseSpec, w0, p, ticks, block=None):
    """{t: (w, enc(id)) after tick t} for t in ticks, one pass.

    block, when given, replaces the tick-1 coupling value (used to feed a
    machine an arbitrary packet instead of the environment's w0)."""
    st = init_state(u, w0, p)
    m = _k.clone(st.id._m)
    want = {int(t): None for t in ticks}
    if 0 in want:
        want[0] = (st.w, vm.enc(st.id))
    top = max(want) if want else 0
    w = u.windex(st.w)
    if block is not None:
        block = bits(block)
    _k.evolve_span(m, w, u.omega, u.clock_divisor, 0, top, u._wbits, block, want)
    return {
        t: (u.wbits(snap[0]) if isinstance(snap[0], int) else snap[0], snap[1])
        for t, snap in want.items()
    }


def run_in_universe(u: UniverseSpec, w0, p, max_ticks, block=None):
    """Run until the machine halts inside the universe.

    Returns (w, halt_tick, out); raises OutOfFuel if the machine is still
    running after max_ticks."""
    st = init_state(u, w0, p)
    m = _k.clone(st.id._m)
    if block is not None:
        block = bits(block)
    halted, w, t = _k.run_universe(
        m, u.windex(st.w), u.omega, u.clock_divisor, 0, max_ticks, u._wbits, block
    )
    if not halted:
        raise OutOfFuel(max_ticks)
    return (u.wbits(w), t, m.out)


def w_orbit(u: UniverseSpec, w0):
    """(preperiod, period) of the environment trajectory from w0."""
    seen = {}
    v = u.windex(w0)
    i = 0
    while v not in seen:
        seen[v] = i
        v = u.omega[v]
        i += 1
    return (seen[v], i - seen[v])


# ---------------------------------------------------------------------------
# shielding


def check_shielded(u: UniverseSpec, p, dt: int) -> bool:
    """True iff the machine's state after dt ticks is unchanged under every
    single-tick perturbation of the environment value at ticks > 1,
    exhaustively over all initial w0."""
    return _check_shielded_with(u, p, dt, coupling=COUPLING)


def _check_shielded_with(u: UniverseSpec, p, dt: int, coupling: str) -> bool:
    if u.w_width > 12:
        raise TooLargeToEnumerate(f"w_width {u.w_width} > 12")
    if not isinstance(p, vm.Program):
        p = vm.decode_program(p)
    size = 2 ** u.w_width
    for w0 in range(size):
        base = _machine_enc_after(u, p, dt, w0, None, None, coupling)
        for t_pert in range(2, dt + 1):
            for w_new in range(size):
                got = _machine_enc_after(u, p, dt, w0, t_pert, w_new, coupling)
                if to01(got) != to01(base):
                    return False
    return True


def _machine_enc_after(u, p, dt, w0, t_pert, w_new, coupling):
    m = _k.fresh(p._kprog)
    w = w0
    for t in range(1, dt + 1):
        if t == t_pert:
            w = w_new
        if t == 1:
            _k._couple(m, u._wbits[w])
        else:
            if coupling == "copy-at-every-tick":
                _k._couple(m, u._wbits[w])
            if not m.halted and t % u.clock_divisor == 0:
                _k.step(m)
        w = u.omega[w]
    return _k.enc(m)


def g_program(u: UniverseSpec) -> vm.Program:
    """Machine program computing evolve: ⟨dt, w, enc(id)⟩ -> ⟨w', enc(id')⟩."""
    from . import stepper

    return stepper.g_program(u)
