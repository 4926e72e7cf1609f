"""Kernel backend selection.

The hot numeric kernels ship in two functionally identical variants: a
numba-jitted loop version and a pure NumPy one.  Which variant is active is
decided once at import time; set ``WINNBETA_DISABLE_NUMBA=1`` in the
environment to force the NumPy path (or leave numba uninstalled, which has
the same effect).
"""

import os

__all__ = ["HAVE_NUMBA", "NUMBA_ENABLED", "maybe_jit"]


def _env_disabled() -> bool:
    raw = os.environ.get("WINNBETA_DISABLE_NUMBA", "")
    return raw.strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    numba = None
    HAVE_NUMBA = False

NUMBA_ENABLED = HAVE_NUMBA and not _env_disabled()


def maybe_jit(func):
    """Compile ``func`` with numba when the jitted path is active.

    Identity decorator otherwise, so the same source serves both backends.
    """
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func
