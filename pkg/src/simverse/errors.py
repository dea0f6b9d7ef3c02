"""Exception types shared across the package."""


class SimverseError(Exception):
    pass


class MalformedPair(SimverseError):
    """Input does not start with a valid doubled-bit block."""


class EmptyTuple(SimverseError):
    """Tuples must have arity >= 1."""


class MalformedProgram(SimverseError):
    """Bit string does not decode to an instruction sequence."""

    def __init__(self, position: int, reason: str = ""):
        self.position = position
        self.reason = reason
        super().__init__(f"undecodable at bit {position}" + (f": {reason}" if reason else ""))


class OutOfFuel(SimverseError):
    """Tick budget exhausted before the machine halted."""

    def __init__(self, ticks: int):
        self.ticks = ticks
        super().__init__(f"no halt within {ticks} ticks")


class FuelExhausted(OutOfFuel):
    """Per-item fuel exhaustion inside a witness builder; never fatal."""


class WidthMismatch(SimverseError):
    """Environment value length disagrees with the universe width."""


class TooLargeToEnumerate(SimverseError):
    """Exhaustive check requested over an enumeration that is too big."""


class DomainEmpty(SimverseError):
    """Witness has an empty claimed domain."""


class InsufficientDomain(SimverseError):
    """Domain lacks the variation the check needs."""


class ExactnessViolation(SimverseError):
    """A verified-exact equality failed; carries both sides for diffing."""

    def __init__(self, got: str, want: str, context: str = ""):
        self.got = got
        self.want = want
        self.context = context
        super().__init__(
            (context + ": " if context else "")
            + f"got {_clip(got)} want {_clip(want)}"
        )


class TooFewRounds(SimverseError):
    """Density estimation needs at least three completed rounds."""


class DomainMismatch(SimverseError):
    """Edges cannot compose: endpoints or domains disagree."""


class GridTooSmall(SimverseError):
    """Growth fitting needs at least four grid points."""


def _clip(s: str, n: int = 64) -> str:
    return s if len(s) <= n else s[:n] + f"...({len(s)} bits)"
