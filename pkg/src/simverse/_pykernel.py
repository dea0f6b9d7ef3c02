"""Pure-Python kernel: bit ropes, the stack machine, and universe tick loops.

This module is the reference implementation; simverse._ckernel mirrors it
instruction for instruction. Everything here is performance-sensitive, so
values use persistent ropes (structural sharing): PAIR/UNPAIR/CONCAT on
machine data are O(1) node operations no matter how large the operands are,
which is what keeps fixed-point programs and state encodings desk-scale.

Rope nodes:
  Leaf   - a slice of an ASCII '0'/'1' string
  Rep    - unit string repeated count times (unary counters, empty-frame runs)
  Cat    - concatenation
  Pr     - the pair code D(a)++b kept unexpanded (D doubles each bit of a and
           appends "01"); expanded lazily and cached if bit-walked

Machine semantics (one tick per step call):
  - executes one instruction of the innermost frame
  - an exhausted innermost frame pops (one tick); popping the last frame
    halts with the top of the data stack (or empty), clearing the data stack
  - dynamic faults (underflow, UNPAIR of a non-pair, HEAD/TAIL of empty,
    EVAL/IF of an undecodable program) halt with the empty string
  - Halted is a fixed point
"""

# opcodes; nibble value == index
QUOTE, PAIR, UNPAIR, CONCAT, SWAP, DUP, DROP, EVAL, IF, ISNIL, HEAD, TAIL, CONS0, CONS1 = range(14)

OP_NAMES = (
    "QUOTE", "PAIR", "UNPAIR", "CONCAT", "SWAP", "DUP", "DROP", "EVAL",
    "IF", "ISNIL", "HEAD", "TAIL", "CONS0", "CONS1",
)

_MERGE_LEAF = 128  # concat materializes leaves at or below this size


class Bits:
    __slots__ = ("n", "_dec")

    def __repr__(self):
        if self.n <= 80:
            return f"Bits({to01(self)!r})"
        return f"Bits(<{self.n} bits>)"

    def __eq__(self, other):
        if not isinstance(other, Bits):
            return NotImplemented
        return eq(self, other)

    def __hash__(self):
        # cheap but valid; dict-heavy callers key on to01() instead
        return hash((self.n, head(self) if self.n else -1))


class _Leaf(Bits):
    __slots__ = ("s", "off")

    def __init__(self, s, off=0):
        self.s = s
        self.off = off
        self.n = len(s) - off
        self._dec = None


class _Rep(Bits):
    __slots__ = ("unit", "cnt")

    def __init__(self, unit, cnt):
        self.unit = unit
        self.cnt = cnt
        self.n = len(unit) * cnt
        self._dec = None


class _Cat(Bits):
    __slots__ = ("l", "r")

    def __init__(self, l, r):
        self.l = l
        self.r = r
        self.n = l.n + r.n
        self._dec = None


class _Pr(Bits):
    __slots__ = ("a", "b", "_exp")

    def __init__(self, a, b):
        self.a = a
        self.b = b
        self._exp = None
        self.n = 2 * a.n + 2 + b.n
        self._dec = None


EMPTY = _Leaf("")
ZERO = _Leaf("0")
ONE = _Leaf("1")
_L01 = _Leaf("01")


def mk(s):
    """Build a rope from '0'/'1' text."""
    if not s:
        return EMPTY
    return _Leaf(s)


def ones(k):
    if k <= 0:
        return EMPTY
    return _Rep("1", k)


def rep01(k):
    if k <= 0:
        return EMPTY
    return _Rep("01", k)


def length(x):
    return x.n


def isnil(x):
    return x.n == 0


def _expand(p):
    # materialize D(a) once; later bit-walks reuse it
    e = p._exp
    if e is None:
        a01 = to01(p.a)
        e = _Cat(_Leaf("".join(c + c for c in a01) + "01"), p.b)
        p._exp = e
    return e


def to01(x):
    if isinstance(x, _Leaf):
        return x.s[x.off:] if x.off else x.s
    out = []
    stack = [x]
    while stack:
        nd = stack.pop()
        t = type(nd)
        if t is _Leaf:
            out.append(nd.s[nd.off:] if nd.off else nd.s)
        elif t is _Rep:
            out.append(nd.unit * nd.cnt)
        elif t is _Cat:
            stack.append(nd.r)
            stack.append(nd.l)
        else:  # _Pr
            stack.append(_expand(nd))
    return "".join(out)


def _chunks(x):
    """Yield the rope's bits as str pieces, bounded memory even for huge reps."""
    stack = [x]
    while stack:
        nd = stack.pop()
        t = type(nd)
        if t is _Leaf:
            if nd.n:
                yield nd.s[nd.off:] if nd.off else nd.s
        elif t is _Rep:
            block = nd.unit * min(nd.cnt, max(1, 4096 // len(nd.unit)))
            left = nd.n
            while left > 0:
                piece = block if len(block) <= left else block[:left]
                yield piece
                left -= len(piece)
        elif t is _Cat:
            stack.append(nd.r)
            stack.append(nd.l)
        else:
            stack.append(_expand(nd))
    return


def stream01(x, piece=1 << 14):
    """Yield the rope's bits as str pieces with bounded peak memory.

    Unlike to01/_chunks, pair nodes are never expanded and cached: their
    payloads are bit-doubled chunk by chunk on the fly (a payload nested
    under m pair levels multiplies each source bit 2^m times), so even
    code quoted inside code many levels deep streams in O(piece) memory.
    """
    stack = [(x, 1)]
    buf = []
    size = 0
    while stack:
        nd, m = stack.pop()
        t = type(nd)
        if t is _Pr:
            stack.append((nd.b, m))
            stack.append((_L01, m))
            stack.append((nd.a, m + m))
            continue
        if t is _Cat:
            stack.append((nd.r, m))
            stack.append((nd.l, m))
            continue
        if t is _Leaf:
            src = nd.s[nd.off :] if nd.off else nd.s
            step = max(1, piece // m)
            for i in range(0, len(src), step):
                c = src[i : i + step]
                if m != 1:
                    c = "".join(ch * m for ch in c)
                buf.append(c)
                size += len(c)
                if size >= piece:
                    yield "".join(buf)
                    buf, size = [], 0
        else:  # _Rep
            u = nd.unit if m == 1 else "".join(ch * m for ch in nd.unit)
            k = max(1, piece // len(u))
            block = u * min(nd.cnt, k)
            left = nd.cnt
            while left > 0:
                take = min(left, k)
                c = block if take == k else u * take
                buf.append(c)
                size += len(c)
                if size >= piece:
                    yield "".join(buf)
                    buf, size = [], 0
                left -= take
    if buf:
        yield "".join(buf)


def eq(a, b):
    if a is b:
        return True
    if a.n != b.n:
        return False
    if a.n == 0:
        return True
    ta, tb = type(a), type(b)
    if ta is _Pr and tb is _Pr:
        return eq(a.a, b.a) and eq(a.b, b.b)
    if ta is _Rep and tb is _Rep and a.unit == b.unit:
        return a.cnt == b.cnt
    if ta is _Leaf and tb is _Leaf:
        return to01(a) == to01(b)
    if ta is _Cat and tb is _Cat and a.l.n == b.l.n:
        return eq(a.l, b.l) and eq(a.r, b.r)
    # generic compare, streamed so mismatched shapes over huge shared
    # ropes never materialize or cache the full text
    ga, gb = stream01(a), stream01(b)
    ca = cb = ""
    while True:
        if not ca:
            ca = next(ga, "")
        if not cb:
            cb = next(gb, "")
        if not ca:
            return not cb
        if not cb:
            return False
        k = min(len(ca), len(cb))
        if ca[:k] != cb[:k]:
            return False
        ca, cb = ca[k:], cb[k:]


def head(x):
    """First bit as int, or -1 if empty."""
    while True:
        if x.n == 0:
            return -1
        t = type(x)
        if t is _Leaf:
            return 1 if x.s[x.off] == "1" else 0
        if t is _Rep:
            return 1 if x.unit[0] == "1" else 0
        if t is _Cat:
            x = x.l if x.l.n else x.r
        else:  # _Pr: D(a) starts with a's first bit doubled, or "01" if a empty
            if x.a.n == 0:
                return 0
            x = x.a


def _peek2(x):
    """First two bits as a str of length <= 2."""
    h = head(x)
    if h < 0:
        return ""
    if x.n == 1:
        return "01"[h]
    return "01"[h] + "01"[head(drop(x, 1))]


def drop(x, k):
    """Rope of x without its first k bits; requires 0 <= k <= len."""
    while True:
        if k <= 0:
            return x
        if k >= x.n:
            return EMPTY
        t = type(x)
        if t is _Leaf:
            return _Leaf(x.s, x.off + k)
        if t is _Rep:
            u = len(x.unit)
            whole, rem = divmod(k, u)
            rest = _Rep(x.unit, x.cnt - whole - (1 if rem else 0))
            if rem == 0:
                return rest
            lead = _Leaf(x.unit, rem)
            return _Cat(lead, rest) if rest.n else lead
        if t is _Cat:
            if k < x.l.n:
                return _Cat(drop(x.l, k), x.r)
            k -= x.l.n
            x = x.r
        else:
            # _Pr(a, b) is doubled-a ++ "01" ++ b; split it structurally so
            # dropping into (or past) the D(a) block never expands the text
            da = 2 * x.a.n + 2
            if k >= da:
                k -= da
                x = x.b
            elif k == da - 1:
                return concat(ONE, x.b)
            elif k & 1 == 0:
                return pair(drop(x.a, k >> 1), x.b)
            else:
                bit = ONE if head(drop(x.a, k >> 1)) == 1 else ZERO
                return _Cat(bit, pair(drop(x.a, (k + 1) >> 1), x.b))


def tail(x):
    """x without its first bit; None if empty (caller faults)."""
    if x.n == 0:
        return None
    return drop(x, 1)


def concat(a, b):
    if a.n == 0:
        return b
    if b.n == 0:
        return a
    ta, tb = type(a), type(b)
    if ta is _Rep and tb is _Rep and a.unit == b.unit:
        return _Rep(a.unit, a.cnt + b.cnt)
    if ta is _Leaf and tb is _Rep:
        s = a.s[a.off:] if a.off else a.s
        u = b.unit
        if len(s) % len(u) == 0 and s == u * (len(s) // len(u)):
            return _Rep(u, b.cnt + len(s) // len(u))
    if ta is _Rep and tb is _Leaf:
        s = b.s[b.off:] if b.off else b.s
        u = a.unit
        if len(s) % len(u) == 0 and s == u * (len(s) // len(u)):
            return _Rep(u, a.cnt + len(s) // len(u))
    if ta is _Leaf and tb is _Leaf and a.n + b.n <= _MERGE_LEAF:
        return _Leaf(to01(a) + to01(b))
    if tb is _Cat:
        # shallow re-association lets unary/eps runs keep merging
        m = concat(a, b.l)
        if type(m) is not _Cat:
            return _Cat(m, b.r) if m.n else b.r
    return _Cat(a, b)


def pair(a, b):
    """The code D(a) ++ b."""
    if a.n == 0:
        # D(eps) = "01"; merge into repeat runs so eps-list chains stay O(1)
        return concat(_L01, b)
    return _Pr(a, b)


def unpair(x):
    """Split a leading D(a) block: (a, rest), or None if malformed."""
    if type(x) is _Pr:
        return (x.a, x.b)
    p2 = _peek2(x)
    if p2 == "01":
        return (EMPTY, drop(x, 2))
    if len(p2) < 2 or p2 == "10":
        return None
    if type(x) is _Cat:
        # a _Pr heading the left spine starts a doubled block; within it every
        # aligned pair is 00 or 11, so the first 01 the scan could meet is that
        # block's own terminator and the split point is known without a scan
        spine = []
        y = x
        while type(y) is _Cat:
            spine.append(y.r)
            y = y.l
        if type(y) is _Pr:
            rest = y.b
            while spine:
                rest = concat(rest, spine.pop())
            return (y.a, rest)
    # generic scan over bit pairs until the "01" terminator
    out = []
    consumed = 0  # global offset of the current chunk's first bit
    pend = ""
    for chunk in _chunks(x):
        if pend:
            chunk = pend + chunk
            pend = ""
        i = 0
        n = len(chunk)
        while i + 2 <= n:
            c0, c1 = chunk[i], chunk[i + 1]
            if c0 == c1:
                out.append(c0)
                i += 2
                continue
            if c0 == "0":  # "01" terminator
                return (mk("".join(out)), drop(x, consumed + i + 2))
            return None  # "10" is invalid
        pend = chunk[i:]
        consumed += i
    return None


def nat2bits(n):
    """0 -> eps, 1 -> '0', 2 -> '1', 3 -> '00', ... (binary of n+1, first bit dropped)."""
    return mk(bin(n + 1)[3:])


def bits2nat(x):
    return int("1" + to01(x), 2) - 1


# ---------------------------------------------------------------------------
# programs


class Prog:
    __slots__ = ("instrs", "code", "offs", "_suffix")

    def __init__(self, instrs, code, offs):
        self.instrs = instrs
        self.code = code
        self.offs = offs
        self._suffix = {0: code}

    def suffix(self, ip):
        r = self._suffix.get(ip)
        if r is None:
            r = drop(self.code, self.offs[ip])
            self._suffix[ip] = r
        return r

    def __len__(self):
        return len(self.instrs)


def instr_bits(op, payload=None):
    return 4 if payload is None else 6 + 2 * payload.n


def attach(code, instrs):
    """Register a known decoding for a code rope (codegen fast path)."""
    offs = [0]
    off = 0
    for op, payload in instrs:
        off += instr_bits(op, payload)
        offs.append(off)
    if off != code.n:
        raise ValueError(f"instruction sizes sum to {off}, code is {code.n} bits")
    p = Prog(tuple(instrs), code, offs)
    code._dec = p
    return p


def decode(x):
    """Prog, or an int bit-position where decoding fails."""
    d = x._dec
    if d is not None:
        return d
    if type(x) is _Cat:
        # structural fast paths keep runtime-assembled code (loop bodies,
        # stashed values appended by codegen) from re-scanning the large
        # already-decoded prefix every call. A whole program always ends on
        # an instruction boundary, so decode(a ++ b) = decode(a) ++ decode(b)
        # whenever a has a known decoding.
        l, r = x.l, x.r
        ld = l._dec
        if ld is None and (
            type(l) is _Leaf
            or (type(l) is _Cat and type(l.l) is _Leaf and type(l.r) is _Pr)
        ):
            # stash-then-append codegen yields (inline ++ (nibbles ++ D(v)));
            # decoding the halves separately keeps the stashed value out of
            # the generic text scan below. The inline half is the program's
            # own payload leaf, so its decoding is computed once and sticks.
            cand = decode(l)
            if type(cand) is not int:
                ld = cand
        if ld is not None:
            rd = decode(r)
            if type(rd) is int:
                return l.n + rd
            offs = ld.offs[:-1] + [l.n + o for o in rd.offs]
            p = Prog(ld.instrs + rd.instrs, x, offs)
            x._dec = p
            return p
        if type(l) is _Leaf and l.n >= 4 and l.n % 4 == 0 and type(r) is _Pr:
            # a small leaf of whole nibbles ending in a QUOTE nibble whose
            # delimited payload is the pair node: plain instrs, then QUOTE.
            # concat's leaf merging produces this shape when codegen appends
            # a stashed value (as a trailing QUOTE) to short inline code.
            s = to01(l)
            if s.endswith("0000"):
                lead = decode(mk(s[:-4])) if l.n > 4 else Prog((), EMPTY, [0])
                if type(lead) is not int:
                    rd = decode(r.b)
                    base = l.n + 2 * r.a.n + 2
                    if type(rd) is int:
                        return base + rd
                    p = Prog(
                        lead.instrs + ((QUOTE, r.a),) + rd.instrs,
                        x,
                        lead.offs[:-1] + [l.n - 4] + [base + o for o in rd.offs],
                    )
                    x._dec = p
                    return p
    s = to01(x)
    instrs = []
    offs = [0]
    i = 0
    n = len(s)
    while i < n:
        if n - i < 4:
            return i
        op = int(s[i : i + 4], 2)
        if op >= 14:
            return i
        i += 4
        if op == QUOTE:
            j = i
            out = []
            while True:
                if j + 1 >= n:
                    return i - 4
                c0, c1 = s[j], s[j + 1]
                if c0 == c1:
                    out.append(c0)
                    j += 2
                    continue
                if c0 == "1":
                    return i - 4
                break
            instrs.append((QUOTE, mk("".join(out))))
            i = j + 2
        else:
            instrs.append((op, None))
        offs.append(i)
    p = Prog(tuple(instrs), x, offs)
    x._dec = p
    return p


# ---------------------------------------------------------------------------
# machine


class Frame:
    __slots__ = ("prog", "ip")

    def __init__(self, prog, ip=0):
        self.prog = prog
        self.ip = ip


class EpsRun:
    __slots__ = ("cnt",)

    def __init__(self, cnt):
        self.cnt = cnt


class Machine:
    __slots__ = ("frames", "data", "halted", "out")

    def __init__(self, frames, data, halted=False, out=None):
        self.frames = frames
        self.data = data
        self.halted = halted
        self.out = out


def fresh(prog):
    return Machine([Frame(prog, 0)], [])


def _fault(m):
    m.frames = []
    m.data = []
    m.halted = True
    m.out = EMPTY


def _halt(m):
    m.out = m.data[-1] if m.data else EMPTY
    m.frames = []
    m.data = []
    m.halted = True


def _push_frame(m, prog):
    fs = m.frames
    top = fs[-1] if fs else None
    if type(top) is Frame and top.ip == len(top.prog.instrs):
        fs.pop()
        if fs and type(fs[-1]) is EpsRun:
            fs[-1].cnt += 1
        else:
            fs.append(EpsRun(1))
    fs.append(Frame(prog, 0))


def step(m):
    """One tick. Mutates m."""
    if m.halted:
        return
    fs = m.frames
    top = fs[-1]
    if type(top) is EpsRun:
        top.cnt -= 1
        if top.cnt == 0:
            fs.pop()
        if not fs:
            _halt(m)
        return
    prog = top.prog
    ip = top.ip
    if ip == len(prog.instrs):
        fs.pop()
        if not fs:
            _halt(m)
        return
    op, payload = prog.instrs[ip]
    top.ip = ip + 1
    d = m.data
    if op == QUOTE:
        d.append(payload)
    elif op == PAIR:
        if len(d) < 2:
            _fault(m)
            return
        b = d.pop()
        a = d.pop()
        d.append(pair(a, b))
    elif op == UNPAIR:
        if not d:
            _fault(m)
            return
        r = unpair(d.pop())
        if r is None:
            _fault(m)
            return
        d.append(r[0])
        d.append(r[1])
    elif op == CONCAT:
        if len(d) < 2:
            _fault(m)
            return
        b = d.pop()
        a = d.pop()
        d.append(concat(a, b))
    elif op == SWAP:
        if len(d) < 2:
            _fault(m)
            return
        d[-1], d[-2] = d[-2], d[-1]
    elif op == DUP:
        if not d:
            _fault(m)
            return
        d.append(d[-1])
    elif op == DROP:
        if not d:
            _fault(m)
            return
        d.pop()
    elif op == EVAL:
        if not d:
            _fault(m)
            return
        p = decode(d.pop())
        if type(p) is int:
            _fault(m)
            return
        _push_frame(m, p)
    elif op == IF:
        if len(d) < 3:
            _fault(m)
            return
        c = d.pop()
        qf = d.pop()
        qt = d.pop()
        sel = qt if (c.n == 1 and head(c) == 1) else qf
        p = decode(sel)
        if type(p) is int:
            _fault(m)
            return
        _push_frame(m, p)
    elif op == ISNIL:
        if not d:
            _fault(m)
            return
        d.append(ONE if d.pop().n == 0 else ZERO)
    elif op == HEAD:
        if not d:
            _fault(m)
            return
        s = d.pop()
        if s.n == 0:
            _fault(m)
            return
        d.append(ONE if head(s) == 1 else ZERO)
    elif op == TAIL:
        if not d:
            _fault(m)
            return
        s = d.pop()
        if s.n == 0:
            _fault(m)
            return
        d.append(drop(s, 1))
    elif op == CONS0:
        if not d:
            _fault(m)
            return
        d.append(concat(ZERO, d.pop()))
    else:  # CONS1
        if not d:
            _fault(m)
            return
        d.append(concat(ONE, d.pop()))


def run(prog, x, fuel):
    """(halted, out, ticks). Input x starts on the data stack (not a tick)."""
    m = Machine([Frame(prog, 0)], [x])
    t = 0
    while t < fuel:
        step(m)
        t += 1
        if m.halted:
            return (True, m.out, t)
    return (False, None, fuel)


def enc(m):
    """Injective structural encoding of a machine state."""
    if m.halted:
        return pair(ONE, m.out)
    fl = EMPTY
    for fr in m.frames:  # bottom (outermost) first so the head ends innermost
        if type(fr) is EpsRun:
            fl = concat(rep01(fr.cnt), fl)
        else:
            fl = pair(fr.prog.suffix(fr.ip), fl)
    dl = EMPTY
    for item in m.data:
        dl = pair(item, dl)
    return pair(ZERO, pair(fl, dl))


def clone(m):
    fs = []
    for fr in m.frames:
        fs.append(EpsRun(fr.cnt) if type(fr) is EpsRun else Frame(fr.prog, fr.ip))
    return Machine(fs, list(m.data), m.halted, m.out)


# ---------------------------------------------------------------------------
# universe tick loops
#
# Tick t=1 is the coupling tick: the machine receives one pushed value (the
# current environment value, or a caller-supplied block) and does nothing
# else. At t >= 2 the machine steps when t % divisor == 0. The environment
# updates w <- omega[w] every tick.


def _couple(m, val):
    if not m.halted:
        m.data.append(val)


def evolve_span(m, w, omega, divisor, t0, nticks, wbits, block, want):
    """Advance (w, m) by nticks ticks starting after absolute tick t0.

    want: optional dict tick -> None, filled with (w_int, enc_bits) snapshots
    taken after the tick completes. Returns the final w.
    """
    t = t0
    for _ in range(nticks):
        t += 1
        if t == 1:
            _couple(m, block if block is not None else wbits[w])
        elif not m.halted and t % divisor == 0:
            step(m)
        w = omega[w]
        if want is not None and t in want:
            want[t] = (w, enc(m))
    return w


def run_universe(m, w, omega, divisor, t0, max_ticks, wbits, block):
    """Run until the machine halts. (halted, w, t) with t = absolute halt tick."""
    t = t0
    end = t0 + max_ticks
    while t < end:
        t += 1
        if t == 1:
            _couple(m, block if block is not None else wbits[w])
        elif not m.halted and t % divisor == 0:
            step(m)
        w = omega[w]
        if m.halted:
            return (True, w, t)
    return (False, w, end)


def run_to_empty(m, w, omega, divisor, t0, max_ticks, wbits, block):
    """Run until a tick leaves the machine running with an empty data stack.

    Returns (found, w, t). Used by the nested trace harness: the emission
    protocol leaves the data stack empty for exactly one tick.
    """
    t = t0
    end = t0 + max_ticks
    while t < end:
        t += 1
        if t == 1:
            _couple(m, block if block is not None else wbits[w])
        elif not m.halted and t % divisor == 0:
            step(m)
            w = omega[w]
            if not m.halted and not m.data:
                return (True, w, t)
            continue
        w = omega[w]
        if m.halted:
            return (False, w, t)
    return (False, w, end)
