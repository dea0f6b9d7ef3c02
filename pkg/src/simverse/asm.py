"""Combinators for writing machine programs.

Every builder returns a Frag: the instruction tuple plus a conservative
stack effect (need = stack items consumed below the entry top at the
deepest point, net = depth change). seq() composes effects, so arity
slips in long choreographies fail at build time, not at run time.

Conventions used throughout:
  - branch(qt, qf) consumes a flag from the top of the stack and runs one
    arm in a child frame; both arms must have the same net effect, and the
    two generated arms are opcode-identical whenever their instruction
    lists are, which keeps data-dependent paths tick-for-tick equal.
  - dip(inner) stashes the top of the stack as a QUOTE instruction
    appended after inner's code, so inner runs one item deeper and the
    stashed value returns on top afterwards.
  - while_loop(test, body) is a self-application loop: the loop code sits
    on the stack and re-runs itself via DUP, EVAL. Each iteration retires
    two exhausted frames, which the kernel stores run-length encoded.
"""

from collections import namedtuple

from . import vm
from .bits import bits, to01

Frag = namedtuple("Frag", "instrs need net")

# need/net per opcode; EVAL and IF are handled by the structured builders
_EFFECT = {
    vm.QUOTE: (0, 1),
    vm.PAIR: (2, -1),
    vm.UNPAIR: (1, 1),
    vm.CONCAT: (2, -1),
    vm.SWAP: (2, 0),
    vm.DUP: (1, 1),
    vm.DROP: (1, -1),
    vm.ISNIL: (1, 0),
    vm.HEAD: (1, 0),
    vm.TAIL: (1, 0),
    vm.CONS0: (1, 0),
    vm.CONS1: (1, 0),
}


def quote(v) -> Frag:
    return Frag((vm.instr(vm.QUOTE, bits(v) if not hasattr(v, "n") else v),), 0, 1)


def op(o) -> Frag:
    i = vm.instr(o)
    need, net = _EFFECT[i.op]
    return Frag((i,), need, net)


def seq(*frags) -> Frag:
    instrs = []
    need = 0
    depth = 0
    for f in frags:
        if isinstance(f, str):
            f = op(f)
        instrs.extend(f.instrs)
        need = max(need, f.need - depth)
        depth += f.net
    return Frag(tuple(instrs), need, depth)


def code_of(frag) -> "vm.Program":
    return vm.program(list(frag.instrs))


def raw_eval(consumed: int, produced: int) -> Frag:
    """EVAL of code the checker cannot see; caller declares the effect of
    the evaluated code on the stack below the popped code value."""
    return Frag((vm.instr(vm.EVAL),), consumed + 1, produced - consumed - 1)


def branch(qt, qf) -> Frag:
    """Consume a flag ('1' selects qt, anything else qf); run the arm."""
    if qt.net != qf.net:
        raise ValueError(f"branch arms disagree on net effect: {qt.net} vs {qf.net}")
    arm_need = max(qt.need, qf.need)
    instrs = (
        vm.instr(vm.QUOTE, code_of(qt).code),
        vm.instr(vm.SWAP),
        vm.instr(vm.QUOTE, code_of(qf).code),
        vm.instr(vm.SWAP),
        vm.instr(vm.IF),
    )
    return Frag(instrs, max(1, arm_need + 1), qt.net - 1)


def dip(inner) -> Frag:
    """Run inner one item below the top; the top returns afterwards.

    The top is turned into a QUOTE instruction ("0000" ++ delimited value)
    concatenated after inner's code, and the whole thing is EVAL'd.
    """
    instrs = (
        vm.instr(vm.QUOTE, ""),
        vm.instr(vm.PAIR),
        vm.instr(vm.CONS0),
        vm.instr(vm.CONS0),
        vm.instr(vm.CONS0),
        vm.instr(vm.CONS0),
        vm.instr(vm.QUOTE, code_of(inner).code),
        vm.instr(vm.SWAP),
        vm.instr(vm.CONCAT),
        vm.instr(vm.EVAL),
    )
    return Frag(instrs, inner.need + 1, inner.net)


def while_loop(test, body, negate=False) -> Frag:
    """Run body while test's flag selects it; state stays on the stack.

    test must push exactly one flag (net +1) and body must preserve depth
    (net 0). The loop code keeps itself on top of the stack and tail-calls
    via DUP, EVAL; negate=True continues on flag '0' instead of '1'.
    """
    if test.net != 1:
        raise ValueError(f"loop test must push exactly one flag, net {test.net}")
    if body.net != 0:
        raise ValueError(f"loop body must preserve depth, net {body.net}")
    # the tail-call's EVAL consumes the remaining loop-code copy and the
    # invoked iteration exits with the state alone, matching stop's DROP
    go = seq(dip(body), "DUP", raw_eval(1, 0))
    stop = op("DROP")
    arm_t, arm_f = (stop, go) if negate else (go, stop)
    loop = seq(dip(test), "SWAP", branch(arm_t, arm_f))
    c = code_of(loop).code
    entry = (vm.instr(vm.QUOTE, c), vm.instr(vm.DUP), vm.instr(vm.EVAL))
    need = max(test.need, body.need)
    return Frag(entry, need, 0)


def bin_to_unary() -> Frag:
    """Top of stack: a number in the short binary form (value n encodes as
    binary(n+1) without its leading bit). Replaces it with '1' * n."""
    test = seq("DUP", "ISNIL")  # [u, b] -> [u, b, flag]; continue on '0'
    body = seq(
        "DUP", "TAIL", "SWAP", "HEAD",      # [u, b', bit]
        dip(op("SWAP")),                     # [b', u, bit]
        "SWAP", "DUP", "CONCAT", "SWAP",     # [b', u+u, bit]
        branch(op("CONS1"), seq()),          # [b', u2]
        "SWAP",                              # [u2, b']
    )
    return seq(quote("1"), "SWAP", while_loop(test, body, negate=True), "DROP", "TAIL")


def table_walk(table, width, encode=None) -> Frag:
    """Consume a width-bit value, push table[value] (width-bit, or encoded
    with the given function). Generated as a full binary tree on the bits;
    the two arms of every node are opcode-identical, so the tick cost does
    not depend on the value walked."""
    if encode is None:
        encode = lambda v: format(v, f"0{width}b") if width else ""

    def node(depth, prefix):
        if depth == width:
            return seq("DROP", quote(encode(table[prefix])))
        one = seq("TAIL", node(depth + 1, (prefix << 1) | 1))
        zero = seq("TAIL", node(depth + 1, prefix << 1))
        return seq("DUP", "HEAD", branch(one, zero))

    if width == 0:
        return seq("DROP", quote(encode(table[0])))
    return node(0, 0)


def pad(ticks: int) -> Frag:
    """Straight-line no-op costing exactly the given ticks (>= 0, != 1)."""
    if ticks < 0 or ticks == 1:
        raise ValueError("pad supports 0 and any count >= 2")
    parts = []
    while ticks >= 2:
        if ticks == 3:
            parts.append(seq(quote(""), "ISNIL", "DROP"))
            ticks -= 3
        else:
            parts.append(seq(quote(""), "DROP"))
            ticks -= 2
    return seq(*parts)


def run_frag(frag, x, fuel=10 ** 7):
    """Convenience: run a fragment as a whole program on input x."""
    return vm.run(code_of(frag), x, fuel)
