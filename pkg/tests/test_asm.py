"""Combinator tests: dip, branch, loops, conversions, padding.

The builders' declared stack effects are trusted by later modules, so the
empirical behavior is pinned here first.
"""

import pytest

from simverse import asm, vm
from simverse.bits import encode_pair, to01

from helpers import rng_for


def run(frag, x, fuel=10 ** 6):
    r = asm.run_frag(frag, x, fuel)
    assert r.halted
    return to01(r.output), r.ticks


def test_seq_effects():
    f = asm.seq("DUP", "PAIR")
    assert f.need == 1 and f.net == 0
    g = asm.seq(asm.quote("1"), "SWAP", "CONCAT")
    assert g.need == 1 and g.net == 0
    with pytest.raises(KeyError):
        asm.op("NOSUCH")


def test_dip_runs_under_top():
    # [x] -> push "1" -> dip(CONCAT? no: dip(DUP)) etc. Use: x="10", quote "9"?
    # stack ["10", "11"]: dip(DUP) duplicates "10" under "11"
    f = asm.seq(asm.quote("11"), asm.dip(asm.op("DUP")), "DROP", "CONCAT")
    out, _ = run(f, "10")
    assert out == "1010"


def test_dip_preserves_top_value():
    f = asm.seq(asm.quote("0011"), asm.dip(asm.seq("CONS1", "CONS1")))
    out, _ = run(f, "")
    # top restored: "0011"; beneath: "11"; output is top of stack
    assert out == "0011"


def test_branch_selects_and_costs_equal():
    f_t = asm.seq(asm.quote("1"), asm.branch(asm.op("CONS1"), asm.op("CONS0")))
    f_f = asm.seq(asm.quote("0"), asm.branch(asm.op("CONS1"), asm.op("CONS0")))
    out_t, ticks_t = run(f_t, "")
    out_f, ticks_f = run(f_f, "")
    assert out_t == "1" and out_f == "0"
    assert ticks_t == ticks_f  # opcode-identical arms cost the same


def test_branch_rejects_unbalanced_arms():
    with pytest.raises(ValueError):
        asm.branch(asm.op("DUP"), asm.op("DROP"))


def test_while_loop_counts_down():
    # state: unary counter; body drops one '1'; test: nonempty
    test = asm.seq("DUP", "ISNIL")
    body = asm.op("TAIL")
    f = asm.while_loop(test, body, negate=True)
    for n in (0, 1, 2, 7):
        out, _ = run(f, "1" * n)
        assert out == ""


def test_while_loop_accumulates():
    # state [acc, b]: move bits of b onto acc reversed... simpler: count via
    # CONS1 on acc per element. start acc="" under b.
    test = asm.seq("DUP", "ISNIL")
    body = asm.seq("TAIL", asm.dip(asm.op("CONS1")))
    f = asm.seq(asm.quote(""), "SWAP", asm.while_loop(test, body, negate=True), "DROP")
    for s in ("", "0", "0110", "11111"):
        out, _ = run(f, s)
        assert out == "1" * len(s)


def test_bin_to_unary():
    f = asm.bin_to_unary()
    from simverse.bits import nat_to_bits

    for n in range(0, 33):
        out, _ = run(f, nat_to_bits(n))
        assert out == "1" * n, n


def test_table_walk_matches_table():
    rng = rng_for("table-walk")
    for width in (0, 1, 2, 3, 4):
        size = 2 ** width
        table = [rng.randrange(size) for _ in range(size)]
        f = asm.table_walk(table, width)
        ticks_seen = set()
        for v in range(size):
            out, t = run(f, format(v, f"0{width}b") if width else "")
            assert out == (format(table[v], f"0{width}b") if width else "")
            ticks_seen.add(t)
        assert len(ticks_seen) == 1  # value-independent cost


def test_table_walk_custom_encode():
    f = asm.table_walk([2, 3], 1, encode=lambda v: "1" * v)
    assert run(f, "0")[0] == "11"
    assert run(f, "1")[0] == "111"


def test_pad_exact_ticks():
    base = asm.seq(asm.quote("1"))
    b_out, b_ticks = run(base, "")
    for k in (0, 2, 3, 4, 5, 6, 7, 11):
        out, t = run(asm.seq(asm.pad(k), asm.quote("1")), "")
        assert out == "1"
        assert t == b_ticks + k, k
    with pytest.raises(ValueError):
        asm.pad(1)
    with pytest.raises(ValueError):
        asm.pad(-2)


def test_loop_iteration_cost_is_constant():
    # ticks(n) - ticks(n-1) must be the same for every n >= 2
    test = asm.seq("DUP", "ISNIL")
    f = asm.while_loop(test, asm.op("TAIL"), negate=True)
    ticks = [run(f, "1" * n)[1] for n in range(0, 8)]
    deltas = [b - a for a, b in zip(ticks, ticks[1:])]
    assert len(set(deltas[1:])) == 1, deltas
