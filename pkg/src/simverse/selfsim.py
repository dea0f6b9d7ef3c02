"""Machines that compute their own future inside their universe.

self_sim_program(u, dt) builds n*: dropped into u with any environment
value, n* halts with output <w_dt, enc(id_dt)>, the exact universe state
dt ticks after its own start, with itself as the machine being described.
The construction keeps dt out of the fixed point: one recursion-theorem
base per universe, specialized per dt by smn, so the code size law is
|n*| = |base| + 2 |nat_to_bits(dt)| + 14.

nested_self_sim runs the non-halting variant: every round the machine
re-emits the full universe state as of its previous emission, forever.
Rounds are padded to a fixed period phi measured at build time, so the
environment update per round is a single precomputed omega^phi table walk
and the emission times are t_i = i * phi.
"""

from collections import namedtuple
from fractions import Fraction

from . import meta, stepper, universe, vm
from .asm import code_of, dip, op, pad, quote, raw_eval, seq, table_walk
from .bits import beq, bits, decode_pair, encode_tuple, length, nat_to_bits, to01
from .errors import ExactnessViolation, OutOfFuel, TooFewRounds, TooLargeToEnumerate
from .universe import UniverseSpec

SelfSimReport = namedtuple("SelfSimReport", "dt n_star tau exact output oracle delay_ratio")
SweepEntry = namedtuple("SweepEntry", "dt tau ratio note")
NestedTrace = namedtuple("NestedTrace", "times snapshots density_estimates")
DensityEstimate = namedtuple("DensityEstimate", "value diffs note")

DEFAULT_FUEL = 10 ** 7

_CACHE = {}


def _memo(u, tag, extra, build):
    key = (tag, u.omega, u.w_width, u.clock_divisor, extra)
    p = _CACHE.get(key)
    if p is None:
        p = _CACHE[key] = build()
    return p


def _build_generator(u: UniverseSpec) -> vm.Program:
    """q for the fixed point: from <own code, <dt, w0>> rebuild the
    specialized simulator's code, wrap it as a fresh machine description,
    and hand <dt, w0, that description> to the evolution routine.

    The trusting tick map is embedded: the simulated machine is this
    construction itself, which never takes a faulting step, and the
    balanced handlers keep the halting tick independent of w0."""
    g = stepper.g_fragment(u, validating=False)
    f = seq(
        "UNPAIR",                       # [Fc, z]       z = pair(dt, w0)
        "SWAP",                         # [z, Fc]
        quote(meta._GLUE_TAIL),         # [z, Fc, tail]
        "SWAP", "CONCAT",               # [z, rest]     rest = tail ++ Fc
        "SWAP", "UNPAIR",               # [rest, dt, w0]
        "SWAP", "DUP",                  # [rest, w0, dt, dt]
        dip(dip(op("SWAP"))),           # [w0, rest, dt, dt]
        dip(op("SWAP")),                # [w0, dt, rest, dt]
        "SWAP", "PAIR",                 # [w0, dt, pair(dt, rest)]
        "CONS0", "CONS0", "CONS0", "CONS0",   # [w0, dt, code(n*)]
        quote(""), "PAIR",              # one frame holding the whole code
        quote(""), "PAIR",              # empty data list
        quote("0"), "SWAP", "PAIR",     # [w0, dt, enc(fresh(n*))]
        dip(op("SWAP")),                # [dt, w0, iota]
        quote(""), "PAIR", "PAIR", "PAIR",    # [<dt, w0, iota>]
        g,
    )
    return vm.program(list(f.instrs))


def _simulator_base(u: UniverseSpec) -> vm.Program:
    return _memo(u, "selfsim-base", None, lambda: meta.fix(_build_generator(u)))


def self_sim_program(u: UniverseSpec, dt: int) -> vm.Program:
    """n*: halts inside u with output <w_dt, enc(id_dt)> describing its
    own run, for every environment value w0."""
    dt = int(dt)
    if dt < 1:
        raise ValueError("dt must be >= 1")
    if u.clock_divisor != 1:
        raise ValueError("self-simulation needs clock_divisor == 1")
    return _memo(u, "selfsim", dt, lambda: meta.smn(_simulator_base(u), nat_to_bits(dt)))


def verify_self_sim(u: UniverseSpec, dt: int, w0, fuel: int = DEFAULT_FUEL) -> SelfSimReport:
    """Run n* inside u from w0 to its halting tick tau and compare the
    output against the independently evolved state at tick dt.

    A mismatch raises ExactnessViolation with .output and .oracle attached
    for diffing; a halt at or before dt is an assertion failure."""
    n_star = self_sim_program(u, dt)
    w_end, tau, out = universe.run_in_universe(u, w0, n_star, fuel)
    oracle = encode_tuple(universe.evolve(u, dt, w0, n_star))
    exact = beq(out, oracle)
    if not exact:
        err = ExactnessViolation(
            f"<{length(out)} bits>",
            f"<{length(oracle)} bits>",
            f"self-simulation dt={dt} w0={to01(bits(w0))}",
        )
        err.output = out
        err.oracle = oracle
        raise err
    assert tau > dt, f"halting tick {tau} not past the simulated tick {dt}"
    return SelfSimReport(dt, n_star, tau, exact, out, oracle, Fraction(tau, dt))


def min_delay_sweep(u: UniverseSpec, dts, fuel: int = DEFAULT_FUEL):
    """Delay table over every environment value: one entry per dt with the
    worst-case halting tick and its ratio to dt.

    Runs are fuel-capped; a dt that cannot finish is flagged in its entry
    rather than aborting the sweep. tau variation across w0 (none is
    expected: the embedded tick map is tick-balanced) is also flagged."""
    if u.w_width > 8:
        raise TooLargeToEnumerate(f"2^{u.w_width} environment values")
    entries = []
    for dt in dts:
        dt = int(dt)
        if dt < 1:
            raise ValueError("dt must be >= 1")
        taus = []
        note = ""
        for v in range(2 ** u.w_width):
            w0 = format(v, f"0{u.w_width}b") if u.w_width else ""
            try:
                taus.append(verify_self_sim(u, dt, w0, fuel).tau)
            except OutOfFuel:
                note = f"out of fuel at w0={w0}"
                break
        if note:
            entries.append(SweepEntry(dt, None, None, note))
            continue
        tau = max(taus)
        assert tau > dt
        if len(set(taus)) != 1:
            note = f"tau varies across w0: {sorted(set(taus))}"
        entries.append(SweepEntry(dt, tau, Fraction(tau, dt), note))
    return entries


# ---------------------------------------------------------------------------
# nested self-simulation
#
# The non-halting machine runs in fixed-length rounds. Entering round i at
# tick t_i = i * phi, the top frame has just executed QUOTE pack_i, where
# pack_i = <v_i, <eps_i, R>>: v_i is the emitted snapshot (the universe
# state at t_{i-1}), eps_i the encoding of the retired frames accumulated
# below, and R the round code itself. The round rebuilds the encoding of
# its own entry state from those three values (the frame list is exactly
# [code of R, retired frames], the data list exactly [pack_i]), advances
# the environment component with one omega^phi table walk, packs the next
# round's QUOTE, and tail-EVALs it with an empty data stack. Tick counts
# of every instruction here are value-independent, so the period really is
# constant; the build measures it once and pads the startup to match.

def _pack_bits() -> "seq":
    """[pack, R] -> [code of ([QUOTE pack] ++ R)]."""
    return seq("PAIR", "CONS0", "CONS0", "CONS0", "CONS0")


def _build_round(u: UniverseSpec, pow_table, round_pad: int):
    walk = table_walk(pow_table, u.w_width)
    return seq(
        "DUP",                                   # [pack, pack]
        dip(op("UNPAIR")),                       # [v, r1, pack]
        dip(op("UNPAIR")),                       # [v, e, R, pack]
        dip(op("DUP")),                          # [v, e, R, R, pack]
        dip(op("DUP")),                          # [v, e, R, R, R, pack]
        dip(dip(dip(dip(op("DUP"))))),           # [v, e, e, R, R, R, pack]
        quote(""), "PAIR",                       # [v, e, e, R, R, R, dl]
        dip(seq(dip(dip(op("SWAP"))), dip(op("SWAP")), "SWAP", "PAIR")),
                                                 # [v, e, R, R, fl, dl]
        "PAIR",                                  # [v, e, R, R, pair(fl, dl)]
        quote("0"), "SWAP", "PAIR",              # [v, e, R, R, m]
        dip(dip(dip(dip(seq("UNPAIR", "SWAP", walk, "SWAP", "DROP"))))),
                                                 # [w', e, R, R, m]
                                                 # (old pair tail kept under
                                                 # the walk so the data stack
                                                 # never empties mid-round;
                                                 # empty data marks emission)
        quote(""), "PAIR",                       # [w', e, R, R, pair(m, eps)]
        dip(dip(dip(op("SWAP")))),               # [e, w', R, R, pair(m, eps)]
        dip(dip(op("SWAP"))),                    # [e, R, w', R, pair(m, eps)]
        dip(op("SWAP")),                         # [e, R, R, w', pair(m, eps)]
        "PAIR",                                  # [e, R, R, v']
        dip(dip(dip(seq("CONS1", "CONS0")))),    # [e', R, R, v']
        dip(dip(op("SWAP"))),                    # [R, e', R, v']
        dip(op("PAIR")),                         # [R, pair(e', R), v']
        "SWAP", "PAIR",                          # [R, pack']
        "SWAP", _pack_bits(),                    # [code of next round]
        pad(round_pad),
        raw_eval(0, 0),
    )


def _build_entry(u: UniverseSpec, eps1, r_code, entry_pad: int) -> vm.Program:
    """q for the fixed point: from <own code, w0> build the first snapshot
    (the universe state at tick 0), pack it with the round code, and start
    the round loop."""
    return vm.program(list(seq(
        "UNPAIR", "SWAP",               # [w0, n0c]
        quote(""), "PAIR",
        quote(""), "PAIR",
        quote("0"), "SWAP", "PAIR",     # [w0, enc(fresh(n0))]
        quote(""), "PAIR", "PAIR",      # [v1]
        quote(eps1), quote(r_code),     # [v1, eps1, R]
        "PAIR", "PAIR",                 # [pack1]
        quote(r_code), _pack_bits(),    # [code of round 1]
        pad(entry_pad),
        raw_eval(0, 0),
    ).instrs))


def _machine_parts(enc_bits):
    """enc(id) -> (frame list, data list) for a running machine."""
    tag, rest = decode_pair(enc_bits)
    assert to01(tag) == "0", "machine halted"
    return decode_pair(rest)


def _scan_emissions(u: UniverseSpec, w0, n0, limit: int):
    """Ticks in 1..limit whose post-state has an empty data stack; these
    are the tail-EVAL ticks, one per round, directly before each QUOTE."""
    snaps = universe.evolve_snapshots(u, w0, n0, range(1, limit + 1))
    empties = []
    for t in range(1, limit + 1):
        fl, dl = _machine_parts(snaps[t][1])
        if length(dl) == 0:
            empties.append(t)
    return empties, snaps


def _nested_program(u: UniverseSpec):
    """(n0, phi): the non-halting emitter and its measured round period.

    Built in two passes: the first, with placeholder constants, measures
    the natural round length, the startup length, and the number of frames
    retired before the first round; the second bakes in the matching
    omega^phi table, the measured retired-frame encoding, and padding that
    lands the first round exactly one period in. Tick counts do not depend
    on any embedded value, so the measurements carry over; the rebuilt
    machine's schedule is asserted before use."""
    if u.clock_divisor != 1:
        raise ValueError("nested self-simulation needs clock_divisor == 1")

    def build():
        w0 = "0" * u.w_width

        def make(eps1, pow_table, entry_pad, round_pad):
            r = code_of(_build_round(u, pow_table, round_pad))
            return meta.fix(_build_entry(u, eps1, r.code, entry_pad)), r

        # pass 1: placeholders, measure the schedule
        n_a, r_a = make("", u.omega, 0, 0)
        empties, snaps = _scan_emissions(u, w0, n_a, 4000)
        assert len(empties) >= 4, f"too few rounds observed: {empties}"
        t1 = empties[0] + 1
        gaps = {b - a for a, b in zip(empties, empties[1:])}
        assert len(gaps) == 1, f"round length not constant: {sorted(gaps)}"
        phi_nat = gaps.pop()
        fl, dl = _machine_parts(snaps[t1][1])
        entry, eps = decode_pair(fl)
        assert beq(entry, r_a.code), "frame suffix at round entry is not the round code"
        eps1 = to01(eps)
        assert eps1.count("0") * 2 == len(eps1) and set(eps1) <= {"0", "1"}
        assert eps1 == "01" * (len(eps1) // 2), f"unexpected retired-frame shape {eps1!r}"

        # pass 2: align the first emission with the round period
        phi = max(phi_nat, t1)
        while phi - phi_nat == 1 or phi - t1 == 1:
            phi += 1
        pow_table = []
        for v in range(2 ** u.w_width):
            x = v
            for _ in range(phi):
                x = u.omega[x]
            pow_table.append(x)
        n0, r_b = make(eps1, tuple(pow_table), phi - t1, phi - phi_nat)
        check, snaps_b = _scan_emissions(u, w0, n0, 2 * phi + 2)
        assert check == [phi - 1, 2 * phi - 1], f"schedule drifted: {check}"
        fl, dl = _machine_parts(snaps_b[phi][1])
        assert beq(decode_pair(fl)[1], bits(eps1)), "retired-frame count drifted"
        return (n0, phi)

    return _memo(u, "nested", None, build)


def nested_self_sim(u: UniverseSpec, w0, max_ticks: int = 20000) -> NestedTrace:
    """Greedy nested self-simulation: round i emits, at tick t_i = i * phi,
    the complete universe state <w, enc(id)> as of tick t_{i-1}.

    Every emitted snapshot is checked against the externally evolved
    trajectory; a mismatch raises ExactnessViolation. The trace contains
    exactly the rounds that complete within max_ticks."""
    n0, phi = _nested_program(u)
    rounds = int(max_ticks) // phi
    if rounds < 1:
        return NestedTrace((), (), ())
    ticks = [i * phi for i in range(rounds + 1)]
    snaps = universe.evolve_snapshots(u, w0, n0, ticks)
    times, shots, dens = [], [], []
    for i in range(1, rounds + 1):
        t = i * phi
        fl, dl = _machine_parts(snaps[t][1])
        pack, tail = decode_pair(dl)
        assert length(tail) == 0, "data stack not exactly the round pack"
        v = decode_pair(pack)[0]
        w_prev, enc_prev = snaps[t - phi]
        want = encode_tuple([w_prev, enc_prev])
        if not beq(v, want):
            err = ExactnessViolation(
                f"<{length(v)} bits>",
                f"<{length(want)} bits>",
                f"nested round {i}: snapshot vs state at tick {t - phi}",
            )
            err.output = v
            err.oracle = want
            raise err
        times.append(t)
        shots.append(v)
        dens.append(Fraction(i, t))
    return NestedTrace(tuple(times), tuple(shots), tuple(dens))


def density_estimate(trace: NestedTrace) -> DensityEstimate:
    """Final emissions-per-tick ratio plus its successive differences; a
    finite-sample diagnostic, not a limit claim."""
    d = trace.density_estimates
    if len(d) < 3:
        raise TooFewRounds(f"need >= 3 completed rounds, got {len(d)}")
    diffs = tuple(b - a for a, b in zip(d, d[1:]))
    mono = all(y <= x for x, y in zip(diffs, diffs[1:]))
    note = (
        f"finite-sample estimate over {len(d)} rounds; successive differences "
        + ("non-increasing" if mono else "not monotone")
    )
    return DensityEstimate(d[-1], diffs, note)
