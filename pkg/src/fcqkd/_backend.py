"""Kernel backend selection.

``FCQKD_BACKEND`` picks the implementation of the hot loops:

* ``numba`` (default when numba imports cleanly) compiles the kernels with
  ``@njit``;
* ``numpy`` uses the vectorised pure-numpy versions.

Both paths consume the same pre-drawn random arrays, so for a given seed the
discrete outcomes are identical and float outputs agree to rounding.
"""

from __future__ import annotations

import os

BACKENDS = ("numba", "numpy")

try:  # pragma: no cover - depends on the environment
    import numba

    HAVE_NUMBA = True
except Exception:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(f):
        return f

    return wrapper


def default_backend() -> str:
    requested = os.environ.get("FCQKD_BACKEND", "").strip().lower()
    if requested in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if requested not in BACKENDS:
        raise ValueError(f"FCQKD_BACKEND must be one of {BACKENDS}, got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        raise RuntimeError("FCQKD_BACKEND=numba but numba is not importable")
    return requested


def resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend
