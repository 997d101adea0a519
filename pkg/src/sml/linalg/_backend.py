"""Kernel backend selection: compiled when available, pure Python otherwise.

Set ``SML_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

try:
    if os.environ.get("SML_PURE_PYTHON"):
        raise ImportError("pure-Python backend forced")
    from . import _ckernels
except ImportError:
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active = _BACKENDS.get("cython", _pykernels)


def available():
    return sorted(_BACKENDS)


def get(name=None):
    """Kernel module by name; ``None`` gives the active one."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {available()}") from None


def set_backend(name):
    global _active
    _active = get(name)
    return _active.BACKEND


def active():
    return _active.BACKEND
