"""simverse: computational universes on a step-counted stack machine.

Self-delimiting codecs, a universal stack machine with exact tick
accounting, S-m-n specialization and recursion-theorem fixed points,
oracle-verified simulation witnesses between universes, self-simulation
with the minimal-delay law, nested trajectory self-simulation, and a
witnessed simulation graph with timing filters.
"""

from ._core import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
