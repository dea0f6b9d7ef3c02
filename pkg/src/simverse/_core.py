"""Kernel selection: compiled extension when available, pure Python otherwise.

Set SIMVERSE_PURE=1 to force the pure kernel (useful for differential tests
and benchmarking). simverse.backend_name() reports which one is active.
"""

import os

if os.environ.get("SIMVERSE_PURE") == "1":
    from . import _pykernel as kernel

    BACKEND = "pure"
else:
    try:
        from . import _ckernel as kernel  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _pykernel as kernel

        BACKEND = "pure"


def backend_name() -> str:
    return BACKEND
