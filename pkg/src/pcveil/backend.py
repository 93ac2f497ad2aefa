"""Kernel backend selection.

Hot per-point loops live in twin modules: a numba-jitted one and a pure
numpy fallback.  Set ``PCVEIL_BACKEND=numpy`` or ``PCVEIL_BACKEND=numba``
to force a path; by default the numba backend is used when numba imports
and the numpy fallback otherwise.
"""

import os

from pcveil.errors import InvalidParameterError

ENV_VAR = "PCVEIL_BACKEND"

_active = None


def _load(name: str):
    if name == "numpy":
        from pcveil import _kernels_numpy as mod
    elif name == "numba":
        from pcveil import _kernels_numba as mod
    else:
        raise InvalidParameterError(f"unknown kernel backend {name!r} (expected 'numpy' or 'numba')")
    return mod


def kernels():
    """Return the active kernel module, resolving it on first use."""
    global _active
    if _active is None:
        requested = os.environ.get(ENV_VAR, "").strip().lower()
        if requested:
            _active = _load(requested)
        else:
            try:
                _active = _load("numba")
            except ImportError:
                _active = _load("numpy")
    return _active


def use_backend(name: str):
    """Force a backend; used by tests and the kernel benchmark."""
    global _active
    _active = _load(name)
    return _active


def backend_name() -> str:
    return kernels().NAME
