"""Backend selection for the velocity-quadrature kernels.

The compiled Cython extension is preferred; the pure-Python module is used
when it is missing or when ``MOMENTDG_PURE_PYTHON`` is set in the environment.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("MOMENTDG_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

recurrence_moments = _impl.recurrence_moments
finite_moments = _impl.finite_moments
window_contract = _impl.window_contract
hankel = _kernels_py.hankel


def use_backend(name):
    """Switch kernels at runtime ("python" or "cython"); returns the old name."""
    global BACKEND, recurrence_moments, finite_moments, window_contract
    if name == "cython":
        from . import _kernels as impl
    elif name == "python":
        impl = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    old = BACKEND
    BACKEND = name
    recurrence_moments = impl.recurrence_moments
    finite_moments = impl.finite_moments
    window_contract = impl.window_contract
    return old
