"""Self-simulating machines: exactness, delay, and the nested variant."""

import os

import pytest
from fractions import Fraction

from simverse import selfsim, universe, vm
from simverse.bits import beq, bits, decode_pair, length, nat_to_bits, to01
from simverse.errors import ExactnessViolation, TooFewRounds, TooLargeToEnumerate

FUEL = 10 ** 7
CORPUS = os.path.join(os.path.dirname(__file__), "..", "universes")


def load(name):
    return universe.load_universe(os.path.join(CORPUS, name + ".txt"))


def wstr(u, v):
    return format(v, f"0{u.w_width}b")


def test_program_shape_and_specialization():
    u = load("flip1")
    base = selfsim._simulator_base(u)
    for dt in range(1, 17):
        p = selfsim.self_sim_program(u, dt)
        op0, y = p.instrs[0]
        assert op0 == vm.QUOTE and to01(y) == to01(nat_to_bits(dt))
        assert p.instrs[1][0] == vm.SWAP and p.instrs[2][0] == vm.PAIR
        assert p.instrs[3:] == base.instrs


def test_distinct_dt_distinct_programs():
    u = load("flip1")
    seen = set()
    for dt in range(1, 17):
        p = selfsim.self_sim_program(u, dt)
        seen.add(to01(p.instrs[0][1]))
    assert len(seen) == 16


def test_size_law():
    u = load("flip1")
    base = length(selfsim._simulator_base(u).code)
    for dt in (1, 2, 3, 7, 8, 15, 16, 100, 1000):
        n = selfsim.self_sim_program(u, dt)
        assert length(n.code) == base + 2 * length(nat_to_bits(dt)) + 14


def test_memoized_identity():
    u = load("flip1")
    assert selfsim.self_sim_program(u, 3) is selfsim.self_sim_program(u, 3)


def test_exact_and_w_component():
    u = load("flip1")
    for w0 in ("0", "1"):
        rep = selfsim.verify_self_sim(u, 3, w0, FUEL)
        assert rep.exact and rep.tau > 3
        w_dt, rest = decode_pair(rep.output)
        # three flips of a one-bit environment
        assert to01(w_dt) == ("1" if w0 == "0" else "0")
        enc_dt, nil = decode_pair(rest)
        assert length(nil) == 0
        assert to01(decode_pair(enc_dt)[0]) == "0"  # still running at dt


def test_self_inclusion_at_dt_one():
    # the output's machine component is this very program, one tick in
    u = load("flip1")
    n_star = selfsim.self_sim_program(u, 1)
    rep = selfsim.verify_self_sim(u, 1, "0", FUEL)
    enc1 = decode_pair(decode_pair(rep.output)[1])[0]
    _, want = universe.evolve(u, 1, "0", n_star)
    assert beq(enc1, want)


def test_exactness_across_universes():
    u = load("perm2")
    for dt in (1, 4):
        for v in range(4):
            rep = selfsim.verify_self_sim(u, dt, wstr(u, v), FUEL)
            assert rep.exact and rep.tau > dt
            assert rep.delay_ratio == Fraction(rep.tau, dt)


def test_sweep_tau_constant_across_w0():
    for name, dts in (("flip1", (1, 2, 3)), ("perm2", (1, 2))):
        u = load(name)
        entries = selfsim.min_delay_sweep(u, dts, FUEL)
        for e, dt in zip(entries, dts):
            assert e.dt == dt and e.tau > dt
            assert e.note == "", f"{name} dt={dt}: {e.note}"
            assert e.ratio == Fraction(e.tau, dt)


def test_sweep_rejects_bad_inputs():
    u = load("flip1")
    with pytest.raises(ValueError):
        selfsim.min_delay_sweep(u, [0], FUEL)
    with pytest.raises(TooLargeToEnumerate):
        selfsim.min_delay_sweep(load("wide9"), [1], FUEL)
    with pytest.raises(ValueError):
        selfsim.self_sim_program(load("slow2"), 1)
    with pytest.raises(ValueError):
        selfsim.self_sim_program(u, 0)
    with pytest.raises(ValueError):
        selfsim.nested_self_sim(load("slow2"), "00")


def test_nested_schedule_and_snapshots():
    u = load("flip1")
    trace = selfsim.nested_self_sim(u, "0", max_ticks=4000)
    assert len(trace.times) >= 5
    phi = trace.times[0]
    assert all(b - a == phi for a, b in zip(trace.times, trace.times[1:]))
    n0, _ = selfsim._nested_program(u)
    # independent re-check: snapshot i is the full state one period back
    prev = universe.evolve_snapshots(u, "0", n0, [t - phi for t in trace.times])
    for t, snap in zip(trace.times, trace.snapshots):
        w_prev, enc_prev = prev[t - phi]
        got_w, rest = decode_pair(snap)
        assert to01(got_w) == to01(bits(w_prev))
        assert beq(decode_pair(rest)[0], enc_prev)
    assert all(d < 1 for d in trace.density_estimates)


def test_nested_all_environments():
    u = load("perm2")
    for v in range(4):
        trace = selfsim.nested_self_sim(u, wstr(u, v), max_ticks=2500)
        assert len(trace.times) >= 5


def test_density_estimate_arithmetic():
    trace = selfsim.NestedTrace(
        (5, 10, 15, 20),
        ("x",) * 4,
        tuple(Fraction(i, 5 * i) for i in range(1, 5)),
    )
    est = selfsim.density_estimate(trace)
    assert est.value == Fraction(1, 5)
    assert all(d == 0 for d in est.diffs)
    assert "non-increasing" in est.note


def test_density_estimate_needs_rounds():
    trace = selfsim.NestedTrace((3, 6), ("x", "x"), (Fraction(1, 3), Fraction(1, 3)))
    with pytest.raises(TooFewRounds):
        selfsim.density_estimate(trace)


def test_nested_densities_constant():
    u = load("flip1")
    trace = selfsim.nested_self_sim(u, "1", max_ticks=6000)
    est = selfsim.density_estimate(trace)
    assert est.value == Fraction(1, trace.times[0])
    assert all(d == 0 for d in est.diffs)
