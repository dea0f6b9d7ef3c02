"""Machine tests: decoding, tick-exact stepping, running, UNIV.

Differential against the independent big-step oracle, plus frozen
tick/output vectors written before the first run.
"""

import pytest

from simverse import vm
from simverse.bits import beq, bits, encode_pair, length, to01
from simverse.errors import MalformedProgram

import oracle_bigstep as oracle
from helpers import gen_halting, rand_bits, rng_for

FUEL = 10 ** 6


def run01(instrs, x, fuel=FUEL):
    r = vm.run(vm.program(instrs), x, fuel)
    assert r.halted, "unexpected fuel exhaustion"
    return to01(r.output), r.ticks


# ---------------------------------------------------------------------------
# program codec


def test_decode_empty():
    p = vm.decode_program("")
    assert len(p) == 0 and length(p.code) == 0


def test_encode_decode_nibbles():
    p = vm.program([(vm.DUP, None), (vm.PAIR, None)])
    assert to01(p.code) == "01010001"
    q = vm.decode_program("01010001")
    assert q == p and [i.op for i in q.instrs] == [vm.DUP, vm.PAIR]


def test_quote_encoding():
    # QUOTE s = 0000 ++ delimit(s)
    p = vm.program([vm.instr(vm.QUOTE, "10")])
    assert to01(p.code) == "0000" + "110001"
    q = vm.decode_program(p.code)
    assert to01(q.instrs[0].payload) == "10"


def test_malformed_reserved_nibble():
    for code, pos in [("1110", 0), ("1111", 0), ("01011110", 4)]:
        with pytest.raises(MalformedProgram) as ei:
            vm.decode_program(code)
        assert ei.value.position == pos


def test_malformed_truncation_and_payload():
    for code, pos in [
        ("00", 0),            # truncated nibble
        ("01010", 4),         # dangling bit after DUP
        ("000010", 0),        # QUOTE payload opens with the bad terminator
        ("00001101", 0),      # QUOTE payload never terminated... "1101" is "1" + end: fine
    ]:
        if code == "00001101":
            # actually decodes: QUOTE "1" exactly consumes the string
            p = vm.decode_program(code)
            assert to01(p.instrs[0].payload) == "1"
            continue
        with pytest.raises(MalformedProgram) as ei:
            vm.decode_program(code)
        assert ei.value.position == pos


def test_decode_roundtrip_random():
    rng = rng_for("decode-roundtrip")
    for _ in range(200):
        n = rng.randrange(0, 33)
        instrs = []
        for _ in range(n):
            op = rng.randrange(0, 14)
            instrs.append(
                vm.instr(op, rand_bits(rng, 12)) if op == vm.QUOTE else vm.instr(op)
            )
        p = vm.program(instrs)
        q = vm.decode_program(bits(to01(p.code)))  # force a fresh scan
        assert q == p
        assert len(q) == n
        for a, b in zip(q.instrs, instrs):
            assert a.op == b.op
            if a.op == vm.QUOTE:
                assert beq(a.payload, b.payload)


# ---------------------------------------------------------------------------
# frozen run vectors (ticks are exact, written before first execution)


def test_run_empty_program():
    p = vm.program([])
    r = vm.run(p, "1011", FUEL)
    assert r.halted and to01(r.output) == "1011" and r.ticks == 1


def test_run_quote():
    for s in ("", "1", "0110"):
        out, t = run01([vm.instr(vm.QUOTE, s)], "0110")
        assert out == s and t == 2


def test_run_three_instruction_straight_line():
    out, t = run01([(vm.DUP, None), (vm.PAIR, None), (vm.ISNIL, None)], "1")
    # pair("1","1") = "11011", nonempty, ISNIL gives "0"
    assert out == "0" and t == 4


def test_opcode_vectors():
    cases = [
        ([(vm.DUP, None), (vm.PAIR, None)], "1", "11011", 3),
        ([(vm.DUP, None), (vm.CONCAT, None)], "10", "1010", 3),
        ([(vm.ISNIL, None)], "", "1", 2),
        ([(vm.ISNIL, None)], "01", "0", 2),
        ([(vm.HEAD, None)], "10", "1", 2),
        ([(vm.HEAD, None)], "0", "0", 2),
        ([(vm.TAIL, None)], "10", "0", 2),
        ([(vm.TAIL, None)], "1", "", 2),
        ([(vm.CONS0, None)], "1", "01", 2),
        ([(vm.CONS1, None)], "0", "10", 2),
        ([(vm.UNPAIR, None)], "11010", "0", 2),  # pair("1","0"), top is second part
        ([(vm.UNPAIR, None), (vm.DROP, None)], "11010", "1", 3),
        ([vm.instr(vm.QUOTE, "0"), (vm.SWAP, None), (vm.CONCAT, None)], "1", "01", 4),
    ]
    for instrs, x, want, ticks in cases:
        out, t = run01(instrs, x)
        assert out == want, (instrs, x, out, want)
        assert t == ticks, (instrs, x, t, ticks)


def test_fault_vectors():
    # dynamic faults halt with the empty string on the same tick
    cases = [
        ([(vm.HEAD, None)], "", 1),                       # HEAD of empty
        ([(vm.TAIL, None)], "", 1),
        ([(vm.DROP, None), (vm.DROP, None)], "1", 2),     # underflow
        ([(vm.PAIR, None)], "1", 1),                      # needs two items
        ([(vm.UNPAIR, None)], "10", 1),                   # not a pair
        ([vm.instr(vm.QUOTE, ""), (vm.HEAD, None)], "x" and "1", 2),
        ([vm.instr(vm.QUOTE, "10"), (vm.EVAL, None)], "1", 2),  # undecodable code
        ([(vm.IF, None)], "1", 1),                         # needs three items
    ]
    for instrs, x, ticks in cases:
        out, t = run01(instrs, x)
        assert out == "" and t == ticks, (instrs, out, t)


def test_if_selects_on_exact_one():
    qt = vm.program([(vm.CONS1, None)]).code
    qf = vm.program([(vm.CONS0, None)]).code
    for cond, want in [("1", "1x"), ("0", "0x"), ("", "0x"), ("11", "0x"), ("10", "0x")]:
        out, _ = run01(
            [vm.instr(vm.QUOTE, qt), vm.instr(vm.QUOTE, qf), vm.instr(vm.QUOTE, cond), (vm.IF, None)],
            "",
        )
        assert out == want.replace("x", ""), (cond, out)


def test_eval_tick_accounting():
    # [QUOTE code([DUP]), EVAL] on "1": QUOTE(1) EVAL(1) DUP(1) pop-inner(1)
    # pop-eps(1+halt) = 5 ticks, output "1" duplicated -> top "1"
    sub = vm.program([(vm.DUP, None)])
    out, t = run01([vm.instr(vm.QUOTE, sub.code), (vm.EVAL, None)], "1")
    assert out == "1" and t == 5


def test_nonhalting_returns_budget():
    # self-application loop: [DUP, EVAL] applied to its own code diverges
    p = vm.program([(vm.DUP, None), (vm.EVAL, None)])
    loop = vm.program([vm.instr(vm.QUOTE, p.code), (vm.DUP, None), (vm.EVAL, None)])
    # build [QUOTE c, DUP, EVAL] where c = code([DUP, EVAL]): QUOTE pushes c,
    # DUP copies, EVAL runs [DUP, EVAL] with c on the stack: DUP copies c,
    # EVAL runs [DUP, EVAL] again: ticks forever
    r = vm.run(loop, "", 9999)
    assert not r.halted and r.output is None and r.ticks == 9999


def test_step_purity_and_halted_fixed_point():
    p = vm.program([vm.instr(vm.QUOTE, "1"), (vm.DROP, None)])
    a = vm.fresh(p)
    b = vm.step(a)
    assert vm.enc(a) != vm.enc(b) or to01(vm.enc(a)) != to01(vm.enc(b))
    assert a.frame_count() == 1 and a.running
    # drive to halt
    cur = a
    seen = 0
    while cur.running and seen < 10:
        cur = vm.step(cur)
        seen += 1
    assert cur.halted
    nxt = vm.step(cur)
    assert to01(vm.enc(nxt)) == to01(vm.enc(cur))  # Halted is a fixed point
    assert nxt == cur


def test_enc_vectors():
    p = vm.program([(vm.DUP, None)])
    id0 = vm.fresh(p)
    want = encode_pair("0", encode_pair(encode_pair(p.code, ""), ""))
    assert to01(vm.enc(id0)) == to01(want)
    assert to01(vm.enc(id0)) == "0001" + "0000111100001111001101"
    # halted with output "01"
    r = vm.run(vm.program([]), "01", FUEL)
    hid = vm.fresh(vm.program([]))
    hid = vm.step(hid)  # empty data: halts with ""
    assert hid.halted and to01(vm.enc(hid)) == to01(encode_pair("1", ""))
    assert to01(encode_pair("1", "01")) == "110101"
    assert to01(r.output) == "01"


def test_enc_injective_across_traces():
    rng = rng_for("enc-injective")
    seen = {}
    for _ in range(250):
        base = gen_halting(rng, 8)
        x = rand_bits(rng, 8)
        p = vm.program([vm.instr(vm.QUOTE, x)] + list(base.instrs))
        cur = vm.fresh(p)
        for _ in range(40):
            key = to01(vm.enc(cur))
            desc = _describe(cur)
            if key in seen:
                assert seen[key] == desc, "enc collided on distinct states"
            else:
                seen[key] = desc
            if cur.halted:
                break
            cur = vm.step(cur)
    assert len(seen) > 1000


def _describe(id):
    m = id._m
    if m.halted:
        return ("H", to01(m.out))
    fr = []
    for f in m.frames:
        if type(f).__name__ == "EpsRun":
            fr.extend([""] * f.cnt)
        else:
            fr.append(to01(f.prog.suffix(f.ip)))
    return ("R", tuple(fr), tuple(to01(d) for d in m.data))


# ---------------------------------------------------------------------------
# differential against the big-step oracle


def test_differential_random_programs():
    rng = rng_for("differential")
    checked = 0
    for _ in range(500):
        p = gen_halting(rng, 10)
        x = rand_bits(rng, 12)
        want = oracle.eval_program(to01(p.code), to01(x))
        got = vm.run(p, x, FUEL)
        if want[0] == "diverge":
            continue  # oracle budget is depth-limited; skip, never assert
        assert got.halted, (p, to01(x))
        assert to01(got.output) == want[1], (p, to01(x), to01(got.output), want)
        checked += 1
    assert checked >= 480


# ---------------------------------------------------------------------------
# UNIV


def test_univ_vectors():
    u = vm.univ_program()
    p = vm.program([vm.instr(vm.QUOTE, "1")])
    r_direct = vm.run(p, "0", FUEL)
    r_univ = vm.run(u, encode_pair(p.code, "0"), FUEL)
    assert to01(r_univ.output) == to01(r_direct.output) == "1"
    assert r_direct.ticks == 2 and r_univ.ticks == 6  # constant overhead 4


def test_univ_random():
    rng = rng_for("univ-random")
    u = vm.univ_program()
    for _ in range(200):
        p = gen_halting(rng, 8)
        x = rand_bits(rng, 10)
        direct = vm.run(p, x, FUEL)
        via = vm.run(u, encode_pair(p.code, x), FUEL)
        assert direct.halted and via.halted
        assert to01(via.output) == to01(direct.output)
        want = oracle.eval_program(to01(p.code), to01(x))
        # clean halts pay the two framing pops; faults clear frames instantly
        faulted = want[0] == "halt" and want[2]
        assert via.ticks == direct.ticks + (3 if faulted else 4)


def test_univ_self_composition():
    # UNIV(<UNIV, <p, x>>) = p(x) with overhead 8
    u = vm.univ_program()
    p = vm.program([(vm.CONS1, None)])
    inner = encode_pair(p.code, "0")
    outer = encode_pair(u.code, inner)
    r = vm.run(u, outer, FUEL)
    assert to01(r.output) == "10"
    assert r.ticks == vm.run(p, "0", FUEL).ticks + 8
