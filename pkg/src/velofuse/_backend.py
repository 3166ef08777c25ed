"""Backend selection: compiled kernels when available, numpy fallback otherwise.

Set ``VELOFUSE_PURE_PYTHON=1`` to force the fallback (useful for debugging
and for benchmarking the two implementations against each other).
"""

from __future__ import annotations

import os

_force_pure = os.environ.get("VELOFUSE_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    from velofuse import _purepy as impl

    BACKEND = "purepy (forced)"
else:
    try:
        from velofuse import _core as impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built on this install
        from velofuse import _purepy as impl  # type: ignore[no-redef]

        BACKEND = "purepy"


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
