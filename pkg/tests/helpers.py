"""Shared test utilities: seeded random values and program generators."""

import random

from simverse import vm
from simverse.bits import bits, to01


def rand_bits(rng, max_len=16):
    n = rng.randrange(0, max_len + 1)
    return bits("".join(rng.choice("01") for _ in range(n)))


def gen_straightline(rng, max_len=12, quote_max=10):
    """Random straight-line program (no EVAL/IF): always halts.

    Tracks abstract stack depth so underflow faults are rare but possible
    (UNPAIR/HEAD/TAIL may still fault on unsuitable values — faults halt
    with the empty string, which both sides of any differential must match).
    """
    instrs = []
    depth = 1
    for _ in range(rng.randrange(1, max_len + 1)):
        pool = ["QUOTE", "QUOTE"]
        if depth >= 1:
            pool += ["DUP", "ISNIL", "HEAD", "TAIL", "CONS0", "CONS1", "UNPAIR"]
        if depth >= 2:
            pool += ["PAIR", "PAIR", "CONCAT", "SWAP", "DROP"]
        op = rng.choice(pool)
        if op == "QUOTE":
            instrs.append(vm.instr(vm.QUOTE, rand_bits(rng, quote_max)))
            depth += 1
        else:
            instrs.append(vm.instr(op))
            if op in ("DUP", "UNPAIR"):
                depth += 1
            elif op in ("PAIR", "CONCAT", "DROP"):
                depth -= 1
    return vm.program(instrs)


def gen_halting(rng, max_len=10):
    """Random halting program: straight-line, sometimes with a nested EVAL
    or IF over quoted straight-line branches."""
    p = gen_straightline(rng, max_len)
    roll = rng.random()
    if roll < 0.25:
        sub = gen_straightline(rng, 6)
        return vm.program(
            list(p.instrs) + [vm.instr(vm.QUOTE, sub.code), vm.instr(vm.EVAL)]
        )
    if roll < 0.4:
        qt = gen_straightline(rng, 5)
        qf = gen_straightline(rng, 5)
        cond = rng.choice(["1", "0", ""])
        return vm.program(
            list(p.instrs)
            + [
                vm.instr(vm.QUOTE, qt.code),
                vm.instr(vm.QUOTE, qf.code),
                vm.instr(vm.QUOTE, cond),
                vm.instr(vm.IF),
            ]
        )
    return p


def rng_for(name: str) -> random.Random:
    return random.Random(f"simverse:{name}")


def s(x) -> str:
    return to01(x)
