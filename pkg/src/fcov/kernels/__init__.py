"""Backend selection for the resampling and limit-law kernels.

The compiled backend is used when numba imports cleanly.  Set the
environment variable ``FCOV_NUMBA`` to ``0``, ``false``, ``off`` or ``no``
before import to force the pure-numpy path (useful for debugging and for
the backend parity benchmark).
"""
from __future__ import annotations

import os

__all__ = ["BACKEND", "available_backends", "bootstrap_replicates", "bridge_chunk"]


def _numba_disabled() -> bool:
    flag = os.environ.get("FCOV_NUMBA", "").strip().lower()
    return flag in {"0", "false", "off", "no"}


def available_backends() -> tuple[str, ...]:
    """Names of the backends importable in this environment."""
    names = ["numpy"]
    try:
        import numba  # noqa: F401

        names.insert(0, "numba")
    except ImportError:
        pass
    return tuple(names)


if _numba_disabled():
    from .numpy_backend import bootstrap_replicates, bridge_chunk

    BACKEND = "numpy"
else:
    try:
        from .numba_backend import bootstrap_replicates, bridge_chunk

        BACKEND = "numba"
    except ImportError:
        from .numpy_backend import bootstrap_replicates, bridge_chunk

        BACKEND = "numpy"
