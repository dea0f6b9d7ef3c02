"""Independent big-step evaluator used as a differential oracle for the VM.

Deliberately written against the wire-format documentation only: plain
Python strings of '0'/'1', a recursive evaluator over an explicit operand
stack, and its own decoder. No imports from simverse internals, so a bug
would have to be made twice to go unnoticed.

eval_program returns (status, output, remaining_budget_consumed_flag)-free
form: ("halt", out_str) | ("fault",) | ("diverge",) where "diverge" means
the recursion budget ran out (analogous to fuel, but counted in evaluator
recursion steps rather than ticks — outputs are compared only when both
sides halt).
"""

OPS = ["QUOTE", "PAIR", "UNPAIR", "CONCAT", "SWAP", "DUP", "DROP", "EVAL",
       "IF", "ISNIL", "HEAD", "TAIL", "CONS0", "CONS1"]


def delim(s: str) -> str:
    return "".join(c + c for c in s) + "01"


def undelim(s: str):
    """(payload, rest) or None."""
    i = 0
    out = []
    while True:
        if i + 2 > len(s):
            return None
        a, b = s[i], s[i + 1]
        if a == b:
            out.append(a)
            i += 2
        elif a == "0":
            return ("".join(out), s[i + 2:])
        else:
            return None


def parse(code: str):
    """List of (opname, payload) or None if undecodable."""
    instrs = []
    i = 0
    while i < len(code):
        if i + 4 > len(code):
            return None
        op = int(code[i:i + 4], 2)
        if op >= 14:
            return None
        i += 4
        if op == 0:
            r = undelim(code[i:])
            if r is None:
                return None
            payload, _ = r
            instrs.append(("QUOTE", payload))
            i += len(delim(payload))
        else:
            instrs.append((OPS[op], None))
    return instrs


class _Fault(Exception):
    pass


class _Budget(Exception):
    pass


def _exec(instrs, stack, budget):
    """Run one instruction sequence to completion against a shared stack."""
    for op, payload in instrs:
        budget[0] -= 1
        if budget[0] <= 0:
            raise _Budget()
        if op == "QUOTE":
            stack.append(payload)
        elif op == "PAIR":
            if len(stack) < 2:
                raise _Fault()
            b = stack.pop()
            a = stack.pop()
            stack.append(delim(a) + b)
        elif op == "UNPAIR":
            if not stack:
                raise _Fault()
            r = undelim(stack.pop())
            if r is None:
                raise _Fault()
            stack.append(r[0])
            stack.append(r[1])
        elif op == "CONCAT":
            if len(stack) < 2:
                raise _Fault()
            b = stack.pop()
            a = stack.pop()
            stack.append(a + b)
        elif op == "SWAP":
            if len(stack) < 2:
                raise _Fault()
            stack[-1], stack[-2] = stack[-2], stack[-1]
        elif op == "DUP":
            if not stack:
                raise _Fault()
            stack.append(stack[-1])
        elif op == "DROP":
            if not stack:
                raise _Fault()
            stack.pop()
        elif op == "EVAL":
            if not stack:
                raise _Fault()
            sub = parse(stack.pop())
            if sub is None:
                raise _Fault()
            _exec(sub, stack, budget)
        elif op == "IF":
            if len(stack) < 3:
                raise _Fault()
            c = stack.pop()
            qf = stack.pop()
            qt = stack.pop()
            sub = parse(qt if c == "1" else qf)
            if sub is None:
                raise _Fault()
            _exec(sub, stack, budget)
        elif op == "ISNIL":
            if not stack:
                raise _Fault()
            stack.append("1" if stack.pop() == "" else "0")
        elif op == "HEAD":
            if not stack:
                raise _Fault()
            s = stack.pop()
            if s == "":
                raise _Fault()
            stack.append(s[0])
        elif op == "TAIL":
            if not stack:
                raise _Fault()
            s = stack.pop()
            if s == "":
                raise _Fault()
            stack.append(s[1:])
        elif op == "CONS0":
            if not stack:
                raise _Fault()
            stack.append("0" + stack.pop())
        elif op == "CONS1":
            if not stack:
                raise _Fault()
            stack.append("1" + stack.pop())
        else:
            raise AssertionError(op)


def eval_program(code: str, x: str, budget: int = 100000):
    """Big-step result of running code with initial stack [x]."""
    instrs = parse(code)
    if instrs is None:
        # undecodable top-level program: the machine would fault at EVAL
        # time; at run() time this is a caller error, mirror as fault
        return ("fault",)
    stack = [x]
    try:
        _exec(instrs, stack, [budget])
    except _Fault:
        return ("halt", "", True)
    except _Budget:
        return ("diverge",)
    return ("halt", stack[-1] if stack else "", False)
