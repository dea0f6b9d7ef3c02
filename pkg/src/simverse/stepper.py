"""In-machine universe stepping.

The simulated universe state travels on the data stack as
s = pair(w, m), where w is the environment value and m is the structural
machine encoding: pair("1", out) when halted, pair("0", pair(fl, dl))
when running, with fl/dl right-nested lists (innermost frame and
top-of-stack first, terminated by the empty string).

step1 advances s by one universe tick: w walks the omega table, and the
machine part performs exactly one instruction (or a frame pop, or the
halt transition), handled by a 4-bit opcode dispatch tree whose leaves
edit the encoded lists structurally.

Two variants:
  - trusting: assumes the simulated machine never faults (true when its
    program was generated by this package). Every branch whose selection
    depends on environment-derived data has tick-balanced arms, so the
    host's tick count does not depend on the environment value.
  - validating: reproduces the real machine's fault semantics (stack
    underflow, UNPAIR of a non-pair, HEAD/TAIL of the empty string,
    EVAL/IF of undecodable code) by scanning values in-machine before
    committing, so it agrees with evolve() on arbitrary programs.

g_program(u) wraps step1 in the coupling tick plus a countdown loop; it
is the constructive witness that the universe's evolution map is
computable by the universe's own machine.
"""

from .asm import Frag, bin_to_unary, branch, dip, op, pad, quote, seq, table_walk, while_loop
from . import vm
from .universe import UniverseSpec

# enc of a machine that faulted or halted with empty output: pair("1", "")
HALT_EMPTY = "1101"

# tick cost of dip(op(o)) for a single-instruction inner program; the
# padding arm of a balanced two-way selection must match it exactly
PAD_TAKE = 13
# cost of the nonempty path of the exact-"1" normalizer below its two
# shared instructions; the empty path pads up to it
PAD_NORM = 8


def _repack() -> Frag:
    """[w', dl', frest, f1'] -> [s'] for handlers holding f1' on top."""
    return seq("SWAP", "PAIR", "SWAP", "PAIR", quote("0"), "SWAP", "PAIR", "PAIR")


def _repack_dltop() -> Frag:
    """[w', frest, f1', dl'] -> [s'] for handlers holding dl on top."""
    return seq(dip(seq("SWAP", "PAIR")), "PAIR", quote("0"), "SWAP", "PAIR", "PAIR")


def _rot_dl_top() -> Frag:
    """[w', dl, frest, f1'] -> [w', frest, f1', dl]"""
    return seq(dip(op("SWAP")), "SWAP")


def _fault_from(n_items: int) -> Frag:
    """Drop everything above w', push the fault encoding, repack."""
    drops = [op("DROP") for _ in range(n_items - 1)]
    return seq(*drops, quote(HALT_EMPTY), "PAIR")


def _norm_flag() -> Frag:
    """[c] -> [cn] with cn = "1" iff c == "1"; tick-balanced across cases."""
    nonempty = seq("DUP", "HEAD", branch(seq("TAIL", "ISNIL"), seq("DROP", quote("0"))))
    empty = seq("DROP", quote("0"), pad(PAD_NORM))
    return seq("DUP", "ISNIL", branch(empty, nonempty))


def _halt_transition() -> Frag:
    """[w', dl, frest(empty)] -> [s'] with m' = pair("1", top-of-dl-or-empty)"""
    dl_empty = seq("DROP", quote(""))
    dl_top = seq("UNPAIR", "DROP")
    return seq(
        "DROP",                      # [w', dl]
        "DUP", "ISNIL",
        branch(dl_empty, dl_top),    # [w', out]
        quote("1"), "SWAP", "PAIR",  # [w', m']
        "PAIR",
    )


def _pop_frame() -> Frag:
    """[w', dl, frest] -> [s'] with fl' = frest"""
    return seq("SWAP", "PAIR", quote("0"), "SWAP", "PAIR", "PAIR")


def _f1_empty() -> Frag:
    """[w', dl, frest, f1(empty)]: retire the exhausted frame."""
    return seq(
        "DROP",
        "DUP", "ISNIL",
        branch(_halt_transition(), _pop_frame()),
    )


# ---------------------------------------------------------------------------
# trusting opcode handlers: [w', dl, frest, f1'] -> [s'], f1' nibble-stripped


def _h_quote() -> Frag:
    # f1' = delimit(payload) ++ rest, which is exactly the pair encoding
    inner = seq("SWAP", dip(seq("SWAP", "PAIR")))
    return seq("UNPAIR", dip(inner), _repack())


def _on_dl(x: Frag) -> Frag:
    """Lift an edit of dl ([w', dl] -> [w', dl']) under frest and f1'."""
    return dip(dip(x))


def _h_pair() -> Frag:
    x = seq("UNPAIR", "UNPAIR", dip(op("SWAP")), dip(op("PAIR")), "PAIR")
    return seq(_on_dl(x), _repack())


def _h_unpair() -> Frag:
    x = seq("UNPAIR", dip(op("UNPAIR")), dip(op("SWAP")), "PAIR", "PAIR")
    return seq(_on_dl(x), _repack())


def _h_concat() -> Frag:
    x = seq("UNPAIR", "UNPAIR", dip(seq("SWAP", "CONCAT")), "PAIR")
    return seq(_on_dl(x), _repack())


def _h_swap() -> Frag:
    x = seq("UNPAIR", "UNPAIR", dip(op("SWAP")), "PAIR", "PAIR")
    return seq(_on_dl(x), _repack())


def _h_dup() -> Frag:
    x = seq("UNPAIR", dip(op("DUP")), "PAIR", "PAIR")
    return seq(_on_dl(x), _repack())


def _h_drop() -> Frag:
    x = seq("UNPAIR", "SWAP", "DROP")
    return seq(_on_dl(x), _repack())


def _h_unop(o: str) -> Frag:
    x = seq("UNPAIR", dip(op(o)), "PAIR")
    return seq(_on_dl(x), _repack())


def _push_code_frame() -> Frag:
    """[w', code, dl', frest, f1'] -> [s'] with fl' = pair(code, pair(f1', frest)).

    The caller frame re-enters as its remaining suffix; when the pushed
    code was the caller's last instruction that suffix is empty, matching
    the encoding of an exhausted frame."""
    return seq(
        "SWAP", "PAIR",              # [w', code, dl', pair(f1', frest)]
        dip(op("SWAP")),             # [w', dl', code, pair(f1', frest)]
        "PAIR",                      # [w', dl', fl']
        "SWAP", "PAIR",              # [w', pair(fl', dl')]
        quote("0"), "SWAP", "PAIR",  # [w', m']
        "PAIR",
    )


def _h_eval() -> Frag:
    return seq(_on_dl(op("UNPAIR")), _push_code_frame())


def _select_branch() -> Frag:
    """[w', dl] -> [w', sel, rest]: pop c, qf, qt; sel by the exact-"1" test.

    Both selection paths cost the same ticks: the taken arm is either a
    single-op dip or padding of identical length."""
    take_qt = dip(op("SWAP"))
    take_qf = pad(PAD_TAKE)
    return seq(
        "UNPAIR",                    # [w', c, r1]
        dip(_norm_flag()),           # [w', cn, r1]
        "UNPAIR", "UNPAIR",          # [w', cn, qf, qt, rest]
        dip(dip(op("SWAP"))),        # [w', qf, cn, qt, rest]
        dip(op("SWAP")),             # [w', qf, qt, cn, rest]
        "SWAP",                      # [w', qf, qt, rest, cn]
        branch(take_qt, take_qf),    # [w', sel, other, rest]
        dip(op("DROP")),             # [w', sel, rest]
    )


def _h_if() -> Frag:
    return seq(dip(dip(_select_branch())), _push_code_frame())


def _h_malformed() -> Frag:
    return _fault_from(4)


# ---------------------------------------------------------------------------
# validating machinery: in-machine scans and checked handlers, which keep
# dl on top ([w', frest, f1', dl]) so peeking it needs no depth juggling


def _pair_block_test() -> Frag:
    """[r] -> [r, flag]: continue while the next 2-bit block is 00 or 11."""
    not_bit = branch(quote("0"), quote("1"))
    eq_bits = seq(
        "DUP", "HEAD",                      # [r, b1]
        dip(seq("DUP", "TAIL", "HEAD")),    # [r, b2, b1]
        branch(seq(quote(""), "CONCAT"), not_bit),
    )
    len1 = seq("DUP", "TAIL", "ISNIL")
    return seq(
        "DUP", "ISNIL",
        branch(quote("0"), seq(len1, branch(quote("0"), eq_bits))),
    )


def _valid_pair_scan() -> Frag:
    """[v] -> [v, flag]: flag = "1" iff v = delimit(a) ++ b for some a, b."""
    post = seq(
        "DUP", "ISNIL",
        branch(
            seq("DROP", quote("0")),
            seq(
                "DUP", "HEAD",
                branch(
                    seq("DROP", quote("0")),
                    seq("TAIL", "DUP", "ISNIL", branch(seq("DROP", quote("0")), op("HEAD"))),
                ),
            ),
        ),
    )
    return seq("DUP", while_loop(_pair_block_test(), seq("TAIL", "TAIL")), post)


def _len_at_least(k: int) -> Frag:
    """[x] -> [flag], consuming x: "1" iff |x| >= k."""
    f = seq("ISNIL", branch(quote("0"), quote("1")))
    for _ in range(k - 1):
        f = seq("DUP", "ISNIL", branch(seq("DROP", quote("0")), seq("TAIL", f)))
    return f


def _valid_prog_scan() -> Frag:
    """[v] -> [v, flag]: flag = "1" iff v decodes as a program.

    Walks nibbles left to right. The loop continues while the residue is
    at least a nibble long and the nibble is not reserved; QUOTE payloads
    are skipped with the pair scan, and a malformed payload poisons the
    residue with a reserved nibble. Valid iff the residue ends empty."""
    bad_nib = seq(
        "DUP", "HEAD",
        branch(
            seq(
                "DUP", "TAIL", "HEAD",
                branch(
                    seq("DUP", "TAIL", "TAIL", "HEAD", branch(quote("0"), quote("1"))),
                    quote("1"),
                ),
            ),
            quote("1"),
        ),
    )
    test = seq("DUP", _len_at_least(4), branch(bad_nib, quote("0")))

    is_quote = seq(
        "DUP", "HEAD",
        branch(
            seq("DROP", quote("0")),
            seq(
                "DUP", "TAIL", "HEAD",
                branch(
                    seq("DROP", quote("0")),
                    seq(
                        "DUP", "TAIL", "TAIL", "HEAD",
                        branch(
                            seq("DROP", quote("0")),
                            seq("TAIL", "TAIL", "TAIL", "HEAD", branch(quote("0"), quote("1"))),
                        ),
                    ),
                ),
            ),
        ),
    )

    poison = seq("DROP", quote("1110"))
    skip_payload = seq(
        while_loop(_pair_block_test(), seq("TAIL", "TAIL")),
        "DUP", "ISNIL",
        branch(
            poison,
            seq(
                "DUP", "HEAD",
                branch(
                    poison,
                    seq("TAIL", "DUP", "ISNIL", branch(poison, op("TAIL"))),
                ),
            ),
        ),
    )
    skip_quote = seq("TAIL", "TAIL", "TAIL", "TAIL", skip_payload)
    skip_plain = seq("TAIL", "TAIL", "TAIL", "TAIL")
    body = seq("DUP", is_quote, branch(skip_quote, skip_plain))
    return seq("DUP", while_loop(test, body), "ISNIL")


def _check_dl_then(cont: Frag, depth: int = 4) -> Frag:
    """[..., dl] with depth items on the stack: fault on empty dl."""
    return seq("DUP", "ISNIL", branch(_fault_from(depth), cont))


def _hv_arity1(body_on_dl: Frag) -> Frag:
    """Checked handler for ops popping one value with no further checks;
    body_on_dl edits [.., dl] -> [.., dl']."""
    return seq(_rot_dl_top(), _check_dl_then(seq(body_on_dl, _repack_dltop())))


def _hv_arity2(tail_body: Frag) -> Frag:
    """Checked handler for ops popping two values; tail_body edits
    [.., b, a, rest] -> [.., dl']."""
    cont = seq(
        "UNPAIR",                    # [.., b, r1]
        "DUP", "ISNIL",
        branch(_fault_from(5), seq("UNPAIR", tail_body, _repack_dltop())),
    )
    return seq(_rot_dl_top(), _check_dl_then(cont))


def _hv_headtail(o: str) -> Frag:
    cont = seq(
        "UNPAIR", "SWAP",            # [.., rest, d1]
        "DUP", "ISNIL",
        branch(_fault_from(5), seq(op(o), "SWAP", "PAIR", _repack_dltop())),
    )
    return seq(_rot_dl_top(), _check_dl_then(cont))


def _hv_unpair() -> Frag:
    ok = seq(
        "UNPAIR",                    # [.., rest, a, b]
        dip(op("SWAP")),             # [.., a, rest, b]
        dip(op("PAIR")),             # [.., pair(a, rest), b]
        "SWAP", "PAIR",              # [.., dl']
        _repack_dltop(),
    )
    cont = seq(
        "UNPAIR", "SWAP",            # [.., rest, d1]
        _valid_pair_scan(),
        branch(ok, _fault_from(5)),
    )
    return seq(_rot_dl_top(), _check_dl_then(cont))


def _ok_push_dltop() -> Frag:
    """[w', frest, f1', rest, code] -> [s'] pushing code as the new frame."""
    return seq(
        dip(dip(seq("SWAP", "PAIR"))),   # [w', pair(f1', frest), rest, code]
        dip(op("SWAP")),                 # [w', rest, pair(f1', frest), code]
        "SWAP", "PAIR",                  # [w', rest, fl']
        "SWAP", "PAIR",                  # [w', pair(fl', rest)]
        quote("0"), "SWAP", "PAIR",      # [w', m']
        "PAIR",
    )


def _hv_eval() -> Frag:
    cont = seq(
        "UNPAIR", "SWAP",            # [w', frest, f1', rest, c]
        _valid_prog_scan(),
        branch(_ok_push_dltop(), _fault_from(5)),
    )
    return seq(_rot_dl_top(), _check_dl_then(cont))


def _hv_if() -> Frag:
    after_sel = seq(
        branch(dip(op("SWAP")), seq()),  # [.., sel, other, rest]
        dip(op("DROP")),                 # [.., sel, rest]
        "SWAP",                          # [.., rest, sel]
        _valid_prog_scan(),
        branch(_ok_push_dltop(), _fault_from(5)),
    )
    three = seq(
        "UNPAIR",                        # [.., cn, qf, qt, rest]
        dip(dip(op("SWAP"))),            # [.., qf, cn, qt, rest]
        dip(op("SWAP")),                 # [.., qf, qt, cn, rest]
        "SWAP",                          # [.., qf, qt, rest, cn]
        after_sel,
    )
    two = seq("UNPAIR", "DUP", "ISNIL", branch(_fault_from(6), three))
    cont = seq(
        "UNPAIR",                        # [.., c, r1]
        dip(_norm_flag()),               # [.., cn, r1]
        "DUP", "ISNIL",
        branch(_fault_from(5), two),
    )
    return seq(_rot_dl_top(), _check_dl_then(cont))


# ---------------------------------------------------------------------------
# assembly


def _handlers(validating: bool) -> list:
    if not validating:
        return [
            _h_quote(),
            _h_pair(),
            _h_unpair(),
            _h_concat(),
            _h_swap(),
            _h_dup(),
            _h_drop(),
            _h_eval(),
            _h_if(),
            _h_unop("ISNIL"),
            _h_unop("HEAD"),
            _h_unop("TAIL"),
            _h_unop("CONS0"),
            _h_unop("CONS1"),
            _h_malformed(),
            _h_malformed(),
        ]
    return [
        _h_quote(),
        _hv_arity2(seq(dip(op("SWAP")), dip(op("PAIR")), "PAIR")),
        _hv_unpair(),
        _hv_arity2(seq(dip(seq("SWAP", "CONCAT")), "PAIR")),
        _hv_arity2(seq(dip(op("SWAP")), "PAIR", "PAIR")),
        _hv_arity1(seq("UNPAIR", dip(op("DUP")), "PAIR", "PAIR")),
        _hv_arity1(seq("UNPAIR", "SWAP", "DROP")),
        _hv_eval(),
        _hv_if(),
        _hv_arity1(seq("UNPAIR", dip(op("ISNIL")), "PAIR")),
        _hv_headtail("HEAD"),
        _hv_headtail("TAIL"),
        _hv_arity1(seq("UNPAIR", dip(op("CONS0")), "PAIR")),
        _hv_arity1(seq("UNPAIR", dip(op("CONS1")), "PAIR")),
        _h_malformed(),
        _h_malformed(),
    ]


def _dispatch(handlers) -> Frag:
    """[w', dl, frest, f1] -> [s']: strip the 4-bit opcode, run its handler."""

    def node(depth, prefix):
        if depth == 4:
            return handlers[prefix]
        one = seq("TAIL", node(depth + 1, (prefix << 1) | 1))
        zero = seq("TAIL", node(depth + 1, prefix << 1))
        return seq("DUP", "HEAD", branch(one, zero))

    return node(0, 0)


def _running(validating: bool) -> Frag:
    """[w', m(running)] -> [s']"""
    return seq(
        "UNPAIR", "SWAP", "DROP",    # [w', pair(fl, dl)]
        "UNPAIR",                    # [w', fl, dl]
        "SWAP",                      # [w', dl, fl]
        "UNPAIR",                    # [w', dl, f1, frest]
        "SWAP",                      # [w', dl, frest, f1]
        "DUP", "ISNIL",
        branch(_f1_empty(), _dispatch(_handlers(validating))),
    )


def step1_fragment(u: UniverseSpec, validating: bool = False) -> Frag:
    """[s] -> [s']: one universe tick on the encoded state pair(w, m)."""
    return seq(
        "UNPAIR",                    # [w, m]
        "SWAP",                      # [m, w]
        table_walk(u.omega, u.w_width),
        "SWAP",                      # [w', m]
        "DUP", "HEAD",               # halted iff the pair encoding opens "1"
        branch(op("PAIR"), _running(validating)),
    )


def step1_program(u: UniverseSpec, validating: bool = False) -> vm.Program:
    return vm.program(list(step1_fragment(u, validating).instrs))


def _push_w() -> Frag:
    """[m, w] -> [m']: push w onto the simulated data stack if running."""
    halted = seq("SWAP", "DROP")
    running = seq(
        "UNPAIR", "SWAP", "DROP",    # [w, pair(fl, dl)]
        "UNPAIR",                    # [w, fl, dl]
        "SWAP",                      # [w, dl, fl]
        dip(op("PAIR")),             # [dl', fl]
        "SWAP", "PAIR",              # [pair(fl, dl')]
        quote("0"), "SWAP", "PAIR",  # [m']
    )
    return seq("SWAP", "DUP", "HEAD", branch(halted, running))


def couple_fragment(u: UniverseSpec) -> Frag:
    """[s] -> [s']: the tick 0 -> 1 transition, which copies w into the
    machine's data stack and walks omega."""
    return seq(
        "UNPAIR",                    # [w, m]
        "SWAP", "DUP",               # [m, w, w]
        table_walk(u.omega, u.w_width),
        dip(_push_w()),              # [m', w']
        "SWAP", "PAIR",
    )


# input/output plumbing shared by the evolution programs:
# <dt, w, n> -> [pair(w, n), dt]  and  [s] -> <w, n>
_UNPACK = ("UNPAIR", "UNPAIR", "UNPAIR", "DROP", "PAIR", "SWAP")
_CONVERT = ("UNPAIR", quote(""), "PAIR", "PAIR")


def _count_loop(step: Frag) -> Frag:
    """[s, unary] -> [s]: run step once per "1", consuming the counter."""
    test = seq("DUP", "ISNIL")
    body = seq("TAIL", dip(step))
    return seq(while_loop(test, body, negate=True), "DROP")


# generated programs are memoized on the universe's defining data: they
# are multi-megabit objects whose witness-table digests are cached per
# Program instance, so handing back the same instance matters
_PROGRAM_CACHE = {}


def _memo(tag, u, extra, build):
    key = (tag, u.omega, u.w_width, u.clock_divisor, extra)
    p = _PROGRAM_CACHE.get(key)
    if p is None:
        p = _PROGRAM_CACHE[key] = build()
    return p


def g_fragment(u: UniverseSpec, validating: bool = True) -> Frag:
    """Fragment form of g_program, for embedding inside larger programs."""
    if u.clock_divisor != 1:
        raise ValueError("g_fragment needs clock_divisor == 1")
    step = step1_fragment(u, validating)
    go = seq("TAIL", dip(couple_fragment(u)), _count_loop(step))
    return seq(
        *_UNPACK,
        bin_to_unary(),
        "DUP", "ISNIL",
        branch(op("DROP"), go),
        *_CONVERT,
    )


def g_program(u: UniverseSpec, validating: bool = True) -> vm.Program:
    """Program computing evolve: <dt, w, enc(id)> -> <w_dt, enc(id_dt)>.

    Tick 1 is the coupling push; ticks 2..dt step the machine. Only
    tick-per-tick universes are expressible this way: with a slower clock
    the (w, machine) pair is not a function of itself one tick later.
    """
    if u.clock_divisor != 1:
        raise ValueError("g_program needs clock_divisor == 1")
    return _memo("g", u, validating, lambda: _build_g(u, validating))


def _build_g(u, validating):
    return vm.program(list(g_fragment(u, validating).instrs))


def g_state_program(u: UniverseSpec, validating: bool = False) -> vm.Program:
    """Program iterating the tick map alone: <dt, w, enc(id)> -> <w', enc'>.

    No coupling tick: this is the pure dynamics applied dt times, suitable
    for continuing from mid-trajectory states."""
    if u.clock_divisor != 1:
        raise ValueError("g_state_program needs clock_divisor == 1")

    def build():
        step = step1_fragment(u, validating)
        f = seq(*_UNPACK, bin_to_unary(), _count_loop(step), *_CONVERT)
        return vm.program(list(f.instrs))

    return _memo("g_state", u, validating, build)


def trajectory_program(u: UniverseSpec, dts, validating: bool = True) -> vm.Program:
    """Program emitting several moments at once: <w, enc(id)> -> tuple of
    <w_t, enc(id_t)> for each t in dts, in order.

    The snapshot times are fixed at build time, so the advance segments
    are straight-line repetitions of the tick map."""
    dts = [int(t) for t in dts]
    if not dts or dts[0] < 0 or any(b <= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dts must be non-empty, non-negative, strictly increasing")
    if u.clock_divisor != 1:
        raise ValueError("trajectory_program needs clock_divisor == 1")
    return _memo(
        "trajectory", u, (tuple(dts), validating), lambda: _build_trajectory(u, dts, validating)
    )


def _build_trajectory(u, dts, validating):
    step = step1_fragment(u, validating)
    snapshot = seq("DUP", *_CONVERT, "SWAP")  # [.., s] -> [.., <w, n>, s]
    parts = ["UNPAIR", "UNPAIR", "DROP", "PAIR"]  # <w, n> -> [pair(w, n)]
    prev = 0
    for t in dts:
        d = t - prev
        if d > 0:
            if prev == 0:
                parts.append(couple_fragment(u))
                d -= 1
            parts.extend([step] * d)
        parts.append(snapshot)
        prev = t
    parts.extend(["DROP", quote("")] + ["PAIR"] * len(dts))
    return vm.program(list(seq(*parts).instrs))
