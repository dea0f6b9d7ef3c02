"""Finite-domain simulation witnesses, fuel-bounded and oracle-verified.

A witness is a table, not a theorem: it records measured halt times and
host configurations for an explicit finite set of cases, each produced by
actually running the host universe and comparing its halt output against
the target's own evolution. Nothing is ever claimed outside the domain
the witness was checked on, and cases that fail the fuel bound are
dropped and listed rather than guessed at.
"""

from collections import namedtuple

from . import stepper, universe, vm
from .bits import beq, bits, decode_pair, encode_tuple, nat_to_bits, to01
from .errors import InsufficientDomain, OutOfFuel

# measured witness for (program, input) pairs: t_hat maps a pair to the
# universe tick at which the host machine halts with the pair's direct
# output, w_hat to the coupling value carrying the input, n_hat to the
# machine program (the pair's own program, unchanged)
RpctWitness = namedtuple("RpctWitness", "domain t_hat w_hat n_hat dropped")

# witness that one universe reproduces another's states: tau, host_w and
# host_n map each domain entry to the halt tick, coupling value and host
# program of a run whose output is the target state (kind "moment", keys
# (dt, w0, program code)) or state list (kind "trajectory", keys
# (dts tuple, w0, program code)); kind "self" marks a universe hosting its
# own self-simulator, keyed (dt, w0, code digest) since that program is
# too large to key by text
SimulationWitness = namedtuple("SimulationWitness", "kind domain tau host_w host_n dropped")

VerificationReport = namedtuple("VerificationReport", "ok entries errors")

DEFAULT_FUEL = 10 ** 6


def _as_prog(p):
    if isinstance(p, vm.Program):
        return p
    return vm.decode_program(p)


def _host_start(u, y):
    """(w0, block): how input y reaches the machine at tick 1.

    When y happens to be a legal environment value it is used directly;
    otherwise the environment starts at zero and y rides the coupling
    push as a single block, leaving the environment untouched."""
    if len(y) == u.w_width:
        return y, None
    return "0" * u.w_width, y


def rpct_witnesses(u, pairs, fuel=DEFAULT_FUEL):
    """Measured witnesses: running k-in-u on y halts with run(k, y)'s output.

    The construction is pristine: the hosted program is k itself and y
    enters only through the tick-1 coupling value. Pairs that do not halt
    within fuel are dropped and reported, never fatal."""
    domain, t_hat, w_hat, n_hat, dropped = [], {}, {}, {}, []
    for k, y in pairs:
        k = _as_prog(k)
        y = to01(bits(y))
        key = (vm.code_digest(k), y)
        if key in t_hat:
            continue
        direct = vm.run(k, y, fuel)
        if not direct.halted:
            dropped.append((key, f"no halt within fuel {fuel}"))
            continue
        w0, block = _host_start(u, y)
        try:
            _, t, out = universe.run_in_universe(
                u, w0, k, fuel * u.clock_divisor + 2, block=block
            )
        except OutOfFuel:
            dropped.append((key, f"universe run exceeded fuel {fuel}"))
            continue
        assert beq(out, direct.output), "universe output diverged from direct run"
        domain.append(key)
        t_hat[key] = t
        w_hat[key] = y
        n_hat[key] = k
    domain.sort()
    return RpctWitness(tuple(domain), t_hat, w_hat, n_hat, tuple(dropped))


def build_sim_witness(host, target, domain, fuel=DEFAULT_FUEL):
    """Witness that host reproduces target's evolution on (dt, w0, p) triples.

    One fixed program (the target's packed evolution map) is hosted on the
    packed triple; the halt output is checked against target's own
    evolution, so every kept entry is end-to-end verified."""
    k = universe.g_program(target)
    triples = []
    for dt, w0, p in domain:
        dt = int(dt)
        if dt < 0:
            raise ValueError("dt must be >= 0")
        triples.append((dt, to01(bits(w0)), _as_prog(p)))
    triples.sort(key=lambda tr: (tr[0], tr[1], to01(tr[2].code)))
    dom, tau, host_w, host_n, dropped = [], {}, {}, {}, []
    for dt, w0, p in triples:
        key = (dt, w0, to01(p.code))
        if key in tau:
            continue
        y = to01(encode_tuple([nat_to_bits(dt), w0, vm.enc(vm.fresh(p))]))
        rw = rpct_witnesses(host, [(k, y)], fuel)
        if rw.dropped:
            dropped.append((key, rw.dropped[0][1]))
            continue
        expect = encode_tuple(universe.evolve(target, dt, w0, p))
        assert beq(vm.run(k, y, fuel).output, expect), "host output is not the target state"
        pk = rw.domain[0]
        dom.append(key)
        tau[key] = rw.t_hat[pk]
        host_w[key] = rw.w_hat[pk]
        host_n[key] = k
    return SimulationWitness("moment", tuple(dom), tau, host_w, host_n, tuple(dropped))


def build_trajectory_witness(host, target, dts, w0, p, fuel=DEFAULT_FUEL):
    """Witness whose single halt output lists the target states at each
    time in dts (strictly increasing, at most 8)."""
    dts = [int(t) for t in dts]
    if len(dts) > 8:
        raise ValueError("at most 8 moments per trajectory witness")
    k = stepper.trajectory_program(target, dts)
    p = _as_prog(p)
    w0 = to01(bits(w0))
    y = to01(encode_tuple([w0, vm.enc(vm.fresh(p))]))
    key = (tuple(dts), w0, to01(p.code))
    rw = rpct_witnesses(host, [(k, y)], fuel)
    if rw.dropped:
        return SimulationWitness(
            "trajectory", (), {}, {}, {}, ((key, rw.dropped[0][1]),)
        )
    snaps = universe.evolve_snapshots(target, w0, p, dts)
    expect = encode_tuple([encode_tuple(snaps[t]) for t in dts])
    assert beq(vm.run(k, y, fuel).output, expect), "host output is not the state list"
    pk = rw.domain[0]
    return SimulationWitness(
        "trajectory", (key,), {key: rw.t_hat[pk]}, {key: y}, {key: k}, ()
    )


def _expected_output(target, kind, key):
    if kind == "trajectory":
        dts, w0, pc = key
        snaps = universe.evolve_snapshots(target, w0, vm.decode_program(pc), list(dts))
        return encode_tuple([encode_tuple(snaps[t]) for t in dts])
    dt, w0, pc = key
    if kind == "self":
        # diagonal edge: the target program is the self-simulator itself,
        # far too large to key by flat code text; rebuild it from dt (the
        # construction is deterministic) instead of decoding the key
        from . import selfsim

        return encode_tuple(universe.evolve(target, dt, w0, selfsim.self_sim_program(target, dt)))
    return encode_tuple(universe.evolve(target, dt, w0, vm.decode_program(pc)))


def _machine_out(enc_id):
    """Halt output of a structurally encoded machine, or None if running."""
    tag, rest = decode_pair(enc_id)
    return rest if to01(tag) == "1" else None


def check_sim_witness(host, target, witness):
    """Re-run every domain entry and compare against the target oracle.

    Each entry reports pass or the first failing condition: the host
    machine halted by tau, its output is the target state (or state list),
    and both still hold at tau + 10."""
    if not witness.domain:
        return VerificationReport(False, (), ("DomainEmpty",))
    entries = []
    ok = True
    for key in witness.domain:
        expect = _expected_output(target, witness.kind, key)
        w0, block = _host_start(host, witness.host_w[key])
        t = witness.tau[key]
        snaps = universe.evolve_snapshots(
            host, w0, witness.host_n[key], [t, t + 10], block=block
        )
        out = _machine_out(snaps[t][1])
        if out is None:
            verdict = "fail: machine still running at tau"
        elif not beq(out, expect):
            verdict = "fail: output differs from target state"
        else:
            later = _machine_out(snaps[t + 10][1])
            if later is None or not beq(later, out):
                verdict = "fail: halt does not persist past tau"
            else:
                verdict = "pass"
        entries.append((key, verdict))
        ok = ok and verdict == "pass"
    return VerificationReport(ok, tuple(entries), ())


def check_free(witness):
    """True iff the hosted program never varies with the target's w0.

    Slices the domain by target program; requires at least one slice with
    two different w0 values, otherwise the question is vacuous."""
    groups = {}
    for key in witness.domain:
        groups.setdefault(key[2], []).append(key)
    if not any(len({k[1] for k in g}) >= 2 for g in groups.values()):
        raise InsufficientDomain(
            "need two domain entries sharing a program but differing in w0"
        )
    for g in groups.values():
        if len({vm.code_digest(witness.host_n[k]) for k in g}) > 1:
            return False
    return True
