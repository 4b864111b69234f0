"""Hot numeric kernels with a compiled core and a pure numpy fallback.

The backend is chosen at import time: the Cython extension when it built,
otherwise the numpy lane.  Set ROPEFLOW_KERNELS to ``compiled`` or ``pure``
to force a lane (``compiled`` raises if the extension is missing), or call
:func:`set_backend` at runtime.  Matrix products are not kernels here; both
lanes leave them to BLAS through numpy.

Shapes are normalized so callers may pass any leading dimensions; the
trailing axis is the reduction/pair axis.
"""

from __future__ import annotations

import os

import numpy as np

from . import pure as _pure

try:
    from . import _core as _compiled
except ImportError:
    _compiled = None

_env = os.environ.get("ROPEFLOW_KERNELS", "auto").lower()
if _env not in ("auto", "compiled", "pure"):
    raise ValueError(f"ROPEFLOW_KERNELS must be auto|compiled|pure, got {_env!r}")
if _env == "compiled" and _compiled is None:
    raise ImportError("ROPEFLOW_KERNELS=compiled but the extension is not built")

_impl = _pure if (_env == "pure" or _compiled is None) else _compiled


def available_backends():
    return ("pure",) if _compiled is None else ("pure", "compiled")


def get_backend():
    return _impl.name


def set_backend(name):
    """Switch the active lane; mainly for parity tests and benchmarks."""
    global _impl
    if name == "pure":
        _impl = _pure
    elif name == "compiled":
        if _compiled is None:
            raise ValueError("compiled kernel core is not built")
        _impl = _compiled
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def _as2d(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    return a.reshape(-1, a.shape[-1])


def _dtype_of(x):
    return x.dtype if x.dtype in (np.float32, np.float64) else np.float64


def rope_rotate(x, cos_t, sin_t, inverse=False):
    """Rotate interleaved (even, odd) pairs along the last axis.

    x: (..., 2p); cos_t/sin_t: (..., p) broadcastable to x's leading shape.
    """
    dt = _dtype_of(x)
    lead = x.shape[:-1]
    p = x.shape[-1] // 2
    c = np.broadcast_to(cos_t, lead + (p,))
    s = np.broadcast_to(sin_t, lead + (p,))
    out = _impl.rope_rotate(_as2d(x, dt), _as2d(c, dt), _as2d(s, dt), inverse)
    return out.reshape(x.shape)


def softmax_rows(z):
    dt = _dtype_of(z)
    return _impl.softmax_rows(_as2d(z, dt)).reshape(z.shape)


def softmax_rows_backward(p, dp):
    dt = _dtype_of(p)
    return _impl.softmax_rows_backward(_as2d(p, dt), _as2d(dp, dt)).reshape(p.shape)


def layernorm_forward(x, gain, bias, eps=1e-6):
    dt = _dtype_of(x)
    x2 = _as2d(x, dt)
    y, mean, rstd = _impl.layernorm_forward(
        x2, np.ascontiguousarray(gain, dtype=dt), np.ascontiguousarray(bias, dtype=dt), eps
    )
    return y.reshape(x.shape), mean, rstd


def layernorm_backward(dy, x, mean, rstd, gain):
    dt = _dtype_of(x)
    dx, dgain, dbias = _impl.layernorm_backward(
        _as2d(dy, dt),
        _as2d(x, dt),
        np.ascontiguousarray(mean, dtype=np.float64),
        np.ascontiguousarray(rstd, dtype=np.float64),
        np.ascontiguousarray(gain, dtype=dt),
    )
    return dx.reshape(x.shape), dgain, dbias


def gelu_forward(x):
    dt = _dtype_of(x)
    return _impl.gelu_forward(_as2d(x, dt)).reshape(x.shape)


def gelu_backward(x, dy):
    dt = _dtype_of(x)
    return _impl.gelu_backward(_as2d(x, dt), _as2d(dy, dt)).reshape(x.shape)


def silu_forward(x):
    dt = _dtype_of(x)
    return _impl.silu_forward(_as2d(x, dt)).reshape(x.shape)


def silu_backward(x, dy):
    dt = _dtype_of(x)
    return _impl.silu_backward(_as2d(x, dt), _as2d(dy, dt)).reshape(x.shape)
