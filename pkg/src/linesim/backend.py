"""Kernel backend selection.

Hot loops (the tick kernel and the path search) exist twice: a numba
@njit build and a pure numpy/python build with identical semantics.
``LINESIM_BACKEND`` picks one:

    auto   - numba when importable, numpy otherwise (default)
    numba  - force numba, raise if unavailable
    numpy  - force the pure fallback

``python -m linesim.bench`` compares the two on the desk-scale scenario.
"""

import os

_choice = os.environ.get("LINESIM_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"LINESIM_BACKEND must be auto|numba|numpy, got {_choice!r}")

HAS_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        import numba  # noqa: F401

        HAS_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise RuntimeError("LINESIM_BACKEND=numba but numba is not importable")

USE_NUMBA = HAS_NUMBA and _choice in ("auto", "numba")


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
