"""Self-delimiting bit-string codes: strings, pairs, tuples, naturals.

The pair code is the doubling code: delimit(a) doubles every bit of a and
appends "01"; encode_pair(a, b) = delimit(a) ++ b. It is prefix-free and has
the closed-form length |encode_pair(a,b)| = 2|a| + 2 + |b|, strictly greater
than both |a| and |b| — the growth fact the minimal-delay argument needs.

Values are immutable ropes (simverse's BitString); every public function
accepts either a rope or '0'/'1' text and returns ropes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from ._core import kernel as _k
from .errors import EmptyTuple, MalformedPair

BitString = _k.Bits
EMPTY = _k.EMPTY


def bits(x) -> BitString:
    """Coerce '0'/'1' text (or a rope) to a rope."""
    if isinstance(x, _k.Bits):
        return x
    if isinstance(x, str):
        if x and set(x) - {"0", "1"}:
            raise ValueError(f"not a bit string: {x!r}")
        return _k.mk(x)
    raise TypeError(f"expected BitString or str, got {type(x).__name__}")


def to01(x) -> str:
    return _k.to01(bits(x))


def length(x) -> int:
    return bits(x).n


def beq(a, b) -> bool:
    return _k.eq(bits(a), bits(b))


def delimit(s) -> BitString:
    """D(s): each bit doubled, then "01". Prefix-free."""
    return _k.pair(bits(s), EMPTY)


def undelimit(s) -> tuple[BitString, BitString]:
    """Inverse of delimit on a prefix: (payload, rest)."""
    r = _k.unpair(bits(s))
    if r is None:
        raise MalformedPair(f"no well-formed delimited block at the start of {to01(s)[:64]!r}")
    return r


def encode_pair(a, b) -> BitString:
    return _k.pair(bits(a), bits(b))


def decode_pair(s) -> tuple[BitString, BitString]:
    r = _k.unpair(bits(s))
    if r is None:
        raise MalformedPair("missing terminator or mismatched doubled bits")
    return r


def encode_tuple(items: Sequence | Iterable) -> BitString:
    """Right-nested pairs with a unary wrapper: <x> = pair(x, eps)."""
    items = [bits(i) for i in items]
    if not items:
        raise EmptyTuple("tuples have arity >= 1")
    acc = EMPTY
    for x in reversed(items):
        acc = _k.pair(x, acc)
    return acc


def decode_tuple(s, arity: int) -> list[BitString]:
    """Split a right-nested tuple of known arity; the trailing rest must be empty."""
    out = []
    cur = bits(s)
    for _ in range(arity):
        a, cur = decode_pair(cur)
        out.append(a)
    if cur.n != 0:
        raise MalformedPair(f"{cur.n} trailing bits after {arity} elements")
    return out


def nat_to_bits(n: int) -> BitString:
    if n < 0:
        raise ValueError("naturals only")
    return _k.nat2bits(n)


def bits_to_nat(s) -> int:
    return _k.bits2nat(bits(s))


def digest(x) -> str:
    """Hex SHA-256 of the bit text, streamed with bounded memory.

    Safe for values whose flat text would be too large to materialize
    (deeply quoted code multiplies its bit count per nesting level)."""
    import hashlib

    h = hashlib.sha256()
    for c in _k.stream01(bits(x)):
        h.update(c.encode("ascii"))
    return h.hexdigest()
