"""Backend dispatch for the convolution kernels.

Two interchangeable implementations exist:

* ``numba`` — jitted fused loops (default when numba imports cleanly)
* ``numpy`` — im2col/col2im plus BLAS matmuls

The active backend is picked once at import time from the environment
variable ``POSECAST_BACKEND`` and can be switched at runtime with
:func:`use_backend` (used by the tests and the kernel benchmark).
"""

import os

from . import _kernels_numpy

_BACKENDS = {"numpy": _kernels_numpy}

try:
    from . import _kernels_numba

    _BACKENDS["numba"] = _kernels_numba
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    _HAVE_NUMBA = False

_OPS = (
    "conv1d_fwd",
    "conv1d_bwd",
    "convt1d_fwd",
    "convt1d_bwd",
    "conv2d_fwd",
    "conv2d_bwd",
    "convt2d_fwd",
    "convt2d_bwd",
)

_active_name = None
_active = None


def available_backends():
    return tuple(sorted(_BACKENDS))


def current_backend():
    return _active_name


def use_backend(name):
    """Select the kernel backend ('numpy' or 'numba')."""
    global _active_name, _active
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        )
    _active_name = name
    _active = _BACKENDS[name]


_env = os.environ.get("POSECAST_BACKEND")
if _env is not None:
    use_backend(_env.strip().lower())
else:
    use_backend("numba" if _HAVE_NUMBA else "numpy")


def conv1d_fwd(x, w, b, stride, pad):
    return _active.conv1d_fwd(x, w, b, stride, pad)


def conv1d_bwd(x, w, gy, stride, pad, need_gx=True):
    """Returns (gx, gw, gb); gx is None when need_gx is False."""
    if _active_name == "numba":
        if need_gx:
            return _active.conv1d_bwd(x, w, gy, stride, pad)
        gw, gb = _active.conv1d_bwd_nogx(x, w, gy, stride, pad)
        return None, gw, gb
    return _active.conv1d_bwd(x, w, gy, stride, pad, need_gx)


def convt1d_fwd(x, w, b, stride, pad):
    return _active.convt1d_fwd(x, w, b, stride, pad)


def convt1d_bwd(x, w, gy, stride, pad, need_gx=True):
    if _active_name == "numba":
        return _active.convt1d_bwd(x, w, gy, stride, pad)
    return _active.convt1d_bwd(x, w, gy, stride, pad, need_gx)


def conv2d_fwd(x, w, b, stride, pad):
    return _active.conv2d_fwd(x, w, b, stride, pad)


def conv2d_bwd(x, w, gy, stride, pad, need_gx=True):
    """Returns (gx, gw, gb); gx is None when need_gx is False."""
    if _active_name == "numba":
        if need_gx:
            return _active.conv2d_bwd(x, w, gy, stride, pad)
        gw, gb = _active.conv2d_bwd_nogx(x, w, gy, stride, pad)
        return None, gw, gb
    return _active.conv2d_bwd(x, w, gy, stride, pad, need_gx)


def convt2d_fwd(x, w, b, stride, pad):
    return _active.convt2d_fwd(x, w, b, stride, pad)


def convt2d_bwd(x, w, gy, stride, pad, need_gx=True):
    if _active_name == "numba":
        return _active.convt2d_bwd(x, w, gy, stride, pad)
    return _active.convt2d_bwd(x, w, gy, stride, pad, need_gx)
