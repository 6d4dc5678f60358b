"""Kernel backend selection.

The compiled Cython kernels are used when importable; otherwise the
pure-Python versions. Set ``LEXFREE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_backend

try:
    if os.environ.get("LEXFREE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python forced by LEXFREE_PURE_PYTHON")
    from . import _kernels as compiled_backend
except ImportError:
    compiled_backend = None

default_backend = compiled_backend or python_backend
BACKEND = default_backend.NAME


def available() -> dict:
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out


def get(name=None):
    """Backend module by name (``"cython"`` or ``"python"``); ``None`` for the default."""
    if name is None:
        return default_backend
    backends = available()
    if name not in backends:
        raise ValueError(f"kernel backend {name!r} not available (have {sorted(backends)})")
    return backends[name]
