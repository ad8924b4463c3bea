"""Backend selection for the hot numerical kernels.

The package ships two implementations of its inner loops: compiled numba
kernels and a plain numpy/scipy path.  The environment variable
``CQSCAT_BACKEND`` picks one:

* ``auto`` (default): numba if it imports, numpy otherwise
* ``numba``: require numba, raise if it is missing
* ``numpy``: force the vectorized fallback

The choice is read once at import time.  ``benchmarks/bench_backends.py``
compares the two paths.
"""

from __future__ import annotations

import os

_VALID = ("auto", "numba", "numpy")


def _probe_numba() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


_requested = os.environ.get("CQSCAT_BACKEND", "auto").strip().lower() or "auto"
if _requested not in _VALID:
    raise ValueError(
        f"CQSCAT_BACKEND={_requested!r} not understood; expected one of {_VALID}"
    )

if _requested == "numpy":
    _active = "numpy"
elif _requested == "numba":
    if not _probe_numba():
        raise ImportError("CQSCAT_BACKEND=numba but numba is not importable")
    _active = "numba"
else:
    _active = "numba" if _probe_numba() else "numpy"


def active_backend() -> str:
    """Return the backend actually in use, ``"numba"`` or ``"numpy"``."""
    return _active


def use_numba() -> bool:
    return _active == "numba"


def default_workers() -> int:
    """Worker count for the decoupled frequency solves.

    Taken from ``CQSCAT_WORKERS`` when set, else 1.
    """
    raw = os.environ.get("CQSCAT_WORKERS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"CQSCAT_WORKERS={raw!r} must be >= 1")
    return n
