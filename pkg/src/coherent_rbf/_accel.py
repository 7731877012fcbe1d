"""Backend switch for the hot kernels.

Every hot loop in the package exists twice: a numba ``@njit`` version and a
vectorised numpy version.  The environment variable ``COHERENT_RBF_NUMBA``
selects the default at import time (``0``/``false``/``off`` forces numpy);
:func:`set_backend` overrides it at runtime.
"""
import os

ENV_FLAG = "COHERENT_RBF_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_default():
    raw = os.environ.get(ENV_FLAG, "1").strip().lower()
    return HAVE_NUMBA and raw not in ("0", "false", "no", "off", "numpy")


_use_numba = _env_default()


def njit(*args, **kwargs):
    """``numba.njit`` with cached compilation, or a no-op without numba."""
    kwargs.setdefault("cache", True)
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def backend():
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _use_numba
    previous = backend()
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def use_numba():
    return _use_numba
