"""Codec tests: delimiting, pairs, tuples, nats.

Frozen expectations first, then exhaustive small-size sweeps and
randomized roundtrips.
"""

import pytest

from simverse.bits import (
    EMPTY,
    bits,
    bits_to_nat,
    beq,
    decode_pair,
    decode_tuple,
    delimit,
    encode_pair,
    encode_tuple,
    length,
    nat_to_bits,
    to01,
    undelimit,
)
from simverse.errors import EmptyTuple, MalformedPair

from helpers import rand_bits, rng_for

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import given, settings
from hypothesis import strategies as st

bitstr = st.text(alphabet="01", max_size=48)


def all_strings(max_len):
    yield ""
    for n in range(1, max_len + 1):
        for k in range(2 ** n):
            yield format(k, f"0{n}b")


# frozen vectors, written before the implementation run
DELIMIT_VECTORS = [
    ("", "01"),
    ("1", "1101"),
    ("0", "0001"),
    ("10", "110001"),
    ("0110", "0011110001"),
]

PAIR_VECTORS = [
    ("", "", "01"),
    ("1", "0", "11010"),
    ("", "1", "011"),
    ("10", "", "110001"),
    ("01", "11", "00110111"),
]


def test_delimit_vectors():
    for raw, enc in DELIMIT_VECTORS:
        assert to01(delimit(raw)) == enc


def test_undelimit_vectors():
    for raw, enc in DELIMIT_VECTORS:
        payload, rest = undelimit(enc + "10011")
        assert to01(payload) == raw
        assert to01(rest) == "10011"


def test_pair_vectors():
    for a, b, enc in PAIR_VECTORS:
        assert to01(encode_pair(a, b)) == enc
        x, y = decode_pair(enc)
        assert to01(x) == a and to01(y) == b


def test_pair_length_law_exhaustive():
    # |pair(a, b)| = 2|a| + 2 + |b|, strictly longer than either part
    for la in range(0, 9):
        a = "1" * la
        for lb in range(0, 9):
            b = "0" * lb
            n = length(encode_pair(a, b))
            assert n == 2 * la + 2 + lb
            assert n > la and n > lb


def test_pair_roundtrip_exhaustive_small():
    rng = rng_for("pair-roundtrip")
    tails = ["", "1", "0110", to01(rand_bits(rng, 12))]
    for a in all_strings(6):
        for b in ("", "1", "010", to01(rand_bits(rng, 8))):
            for t in tails:
                # the whole string is one pair: second component soaks the tail
                x, y = decode_pair(bits(to01(encode_pair(a, b + t))))
                assert to01(x) == a and to01(y) == b + t
                # two delimited blocks in sequence, decoded by scanning
                enc = to01(delimit(a)) + to01(delimit(b)) + t
                x, rest = undelimit(bits(enc))
                assert to01(x) == a
                y, rest2 = undelimit(rest)
                assert to01(y) == b
                assert to01(rest2) == t


def test_prefix_free_exhaustive():
    codes = [to01(delimit(s)) for s in all_strings(8)]
    codes.sort()
    for i in range(len(codes) - 1):
        assert not codes[i + 1].startswith(codes[i])


def test_delimit_injective_exhaustive():
    seen = set()
    for s in all_strings(8):
        c = to01(delimit(s))
        assert c not in seen
        seen.add(c)


def test_malformed_pair():
    for bad in ("1", "11", "10", "1011", "110", "1110"):
        with pytest.raises(MalformedPair):
            decode_pair(bad)
    with pytest.raises(MalformedPair):
        decode_pair("")  # empty: no terminator at all
    # everything after the terminator belongs to the second component
    x, y = decode_pair("011")
    assert to01(x) == "" and to01(y) == "1"


def test_tuple_vectors():
    assert to01(encode_tuple(["1"])) == "1101"
    assert to01(encode_tuple([""])) == "01"
    # <a, b> = pair(a, pair(b, "")): <"1","0"> = D("1") + D("0") + ""
    assert to01(encode_tuple(["1", "0"])) == "11010001"
    with pytest.raises(EmptyTuple):
        encode_tuple([])


def test_tuple_roundtrip_random():
    rng = rng_for("tuple-roundtrip")
    for _ in range(300):
        arity = rng.randrange(1, 6)
        items = [rand_bits(rng, 16) for _ in range(arity)]
        enc = encode_tuple(items)
        back = decode_tuple(enc, arity)
        assert len(back) == arity
        for got, want in zip(back, items):
            assert beq(got, want)


def test_tuple_length_monotone():
    rng = rng_for("tuple-monotone")
    for _ in range(100):
        items = [rand_bits(rng, 12) for _ in range(rng.randrange(1, 5))]
        n = length(encode_tuple(items))
        for it in items:
            assert n > length(it)
        extended = items + [rand_bits(rng, 12)]
        assert length(encode_tuple(extended)) > n


def test_nat_vectors():
    assert to01(nat_to_bits(0)) == ""
    assert to01(nat_to_bits(1)) == "0"
    assert to01(nat_to_bits(2)) == "1"
    assert to01(nat_to_bits(3)) == "00"
    assert to01(nat_to_bits(6)) == "11"
    assert to01(nat_to_bits(7)) == "000"
    with pytest.raises(ValueError):
        nat_to_bits(-1)


def test_nat_bijection_exhaustive():
    seen = set()
    for n in range(2 ** 16):
        s = to01(nat_to_bits(n))
        assert bits_to_nat(s) == n
        assert s not in seen
        seen.add(s)
    # lengths are nondecreasing and the map is onto all short strings
    assert seen >= {s for s in ("", "0", "1", "00", "01", "10", "11")}


@settings(max_examples=200)
@given(bitstr, bitstr, bitstr)
def test_pair_roundtrip_property(a, b, t):
    x, y = decode_pair(to01(encode_pair(a, b)))
    assert to01(x) == a and to01(y) == b
    enc = to01(delimit(a)) + to01(delimit(b)) + t
    p1, rest = undelimit(enc)
    p2, rest2 = undelimit(rest)
    assert to01(p1) == a and to01(p2) == b and to01(rest2) == t


@settings(max_examples=200)
@given(st.lists(bitstr, min_size=1, max_size=5))
def test_tuple_roundtrip_property(items):
    got = decode_tuple(encode_tuple(items), len(items))
    assert [to01(g) for g in got] == items


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_nat_roundtrip_property(n):
    assert bits_to_nat(nat_to_bits(n)) == n


def test_empty_constant():
    assert length(EMPTY) == 0
    assert to01(EMPTY) == ""
    assert beq(bits(""), EMPTY)
