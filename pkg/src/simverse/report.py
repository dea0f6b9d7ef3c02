"""Line-oriented experiment reports.

Each line is a tag followed by key=value fields in call-site order, so a
report built from the same inputs is byte-identical across runs. Values
never contain spaces; bit strings above a size cutoff are rendered as
length plus content hash instead of raw text (some program values run to
gigabits and would also leak rope internals into the diff surface).
"""

import os

from .bits import bits, digest, length, to01

RAW_MAX = 64


def val(x):
    """Render a bit value: short ones verbatim, long ones as len+hash."""
    b = bits(x)
    n = length(b)
    if n == 0:
        return "-"
    if n <= RAW_MAX:
        return to01(b)
    return f"{n}b:sha256:{digest(b)}"


def token(s):
    """Space-free token for free-text fields (failure reasons and such)."""
    s = str(s)
    return "-" if not s else s.replace(" ", "_")


class Report:
    def __init__(self):
        self.lines = []

    def line(self, tag, **kv):
        self.lines.append(" ".join([tag] + [f"{k}={v}" for k, v in kv.items()]))

    def raw(self, text):
        self.lines.extend(str(text).splitlines())

    def text(self):
        return "".join(ln + "\n" for ln in self.lines)


def resolve_out(path):
    """Report file target: --out, resolved inside SIMVERSE_OUT if relative."""
    if path is None:
        return None
    base = os.environ.get("SIMVERSE_OUT", "")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def emit(rep: Report, out_path=None) -> str:
    """Print the report and optionally write it to a file; returns the text."""
    text = rep.text()
    print(text, end="")
    target = resolve_out(out_path)
    if target:
        d = os.path.dirname(target)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(target, "w") as f:
            f.write(text)
    return text
