"""Kernel backend selection.

Hot loops ship in two flavours: numba-jitted scalar loops and vectorized
numpy fallbacks.  The active flavour is chosen once at import time from the
``SQKIT_BACKEND`` environment variable:

* unset        -> numba when importable, numpy otherwise
* ``numba``    -> numba, import errors propagate
* ``numpy``    -> pure numpy, numba never imported

Both implementations remain importable regardless of the selection so that
``benchmarks/bench_backends.py`` can time them side by side.
"""

from __future__ import annotations

import os

ENV_VAR = "SQKIT_BACKEND"


def _detect() -> str:
    choice = os.environ.get(ENV_VAR, "").strip().lower()
    if choice in ("numpy", "python"):
        return "numpy"
    if choice == "numba":
        import numba  # noqa: F401  -- fail loudly on an explicit request

        return "numba"
    if choice:
        raise ValueError(f"{ENV_VAR}={choice!r}: expected 'numba' or 'numpy'")
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


ACTIVE: str = _detect()


def using_numba() -> bool:
    return ACTIVE == "numba"
