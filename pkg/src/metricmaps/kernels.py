"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``METRICMAPS_PURE_PYTHON`` is set to a non-empty value,
the numpy fallback is used. Both backends return identical results.
"""

import os

from . import _kernels_py

_compiled = None
if not os.environ.get("METRICMAPS_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

BACKEND = "cython" if _compiled is not None else "python"
_impl = BACKENDS[BACKEND]


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None


def relation_accuracy(*args):
    return _impl.relation_accuracy(*args)


def directed_hausdorff(*args):
    return _impl.directed_hausdorff(*args)


def bnb_search(*args):
    return _impl.bnb_search(*args)
