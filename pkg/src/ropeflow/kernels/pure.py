"""Pure numpy reference implementations of the hot kernels.

These are the fallback lane when the compiled core is unavailable and the
ground truth the compiled lane is tested against.  All reductions run in
float64 regardless of the input dtype; outputs keep the input dtype except
where noted.  Matrix products are deliberately absent: those go through
BLAS via numpy in both lanes.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327

name = "pure"


def rope_rotate(x, cos_t, sin_t, inverse=False):
    """Rotate interleaved pairs of x by the per-pair angles given as cos/sin.

    x: (n, 2p) with pair (x[:, 2j], x[:, 2j+1]); cos_t, sin_t: (n, p).
    inverse=True applies the transpose (negated-angle) rotation.
    """
    a = x[:, 0::2]
    b = x[:, 1::2]
    s = -sin_t if inverse else sin_t
    out = np.empty_like(x)
    out[:, 0::2] = a * cos_t - b * s
    out[:, 1::2] = a * s + b * cos_t
    return out


def softmax_rows(z):
    """Row-wise softmax of a 2-D array."""
    m = z.max(axis=1, keepdims=True)
    e = np.exp(z - m)
    e /= e.sum(axis=1, keepdims=True, dtype=np.float64).astype(z.dtype)
    return e


def softmax_rows_backward(p, dp):
    """Gradient through a row-wise softmax given its output p."""
    dot = np.sum(p * dp, axis=1, keepdims=True, dtype=np.float64)
    return (p * (dp - dot)).astype(p.dtype, copy=False)


def layernorm_forward(x, gain, bias, eps):
    """Row-wise layer norm. Returns (y, mean, rstd); mean/rstd are float64."""
    mu = x.mean(axis=1, dtype=np.float64)
    xc = x.astype(np.float64, copy=False) - mu[:, None]
    var = np.mean(xc * xc, axis=1)
    rstd = 1.0 / np.sqrt(var + eps)
    y = (xc * rstd[:, None] * gain + bias).astype(x.dtype, copy=False)
    return y, mu, rstd


def layernorm_backward(dy, x, mean, rstd, gain):
    """Gradients of layernorm_forward: returns (dx, dgain, dbias)."""
    n = x.shape[1]
    xhat = (x.astype(np.float64, copy=False) - mean[:, None]) * rstd[:, None]
    dxhat = dy.astype(np.float64, copy=False) * gain
    s1 = dxhat.sum(axis=1)
    s2 = np.sum(dxhat * xhat, axis=1)
    dx = rstd[:, None] * (dxhat - (s1[:, None] + xhat * s2[:, None]) / n)
    dgain = np.sum(dy.astype(np.float64, copy=False) * xhat, axis=0)
    dbias = dy.sum(axis=0, dtype=np.float64)
    return (
        dx.astype(x.dtype, copy=False),
        dgain.astype(x.dtype, copy=False),
        dbias.astype(x.dtype, copy=False),
    )


def gelu_forward(x):
    """Exact (erf-based) GELU."""
    return (0.5 * x * (1.0 + erf(x * _INV_SQRT2))).astype(x.dtype, copy=False)


def gelu_backward(x, dy):
    xd = x.astype(np.float64, copy=False)
    d = 0.5 * (1.0 + erf(xd * _INV_SQRT2)) + xd * _INV_SQRT_2PI * np.exp(-0.5 * xd * xd)
    return (dy * d).astype(x.dtype, copy=False)


def silu_forward(x):
    xd = x.astype(np.float64, copy=False)
    return (xd / (1.0 + np.exp(-xd))).astype(x.dtype, copy=False)


def silu_backward(x, dy):
    xd = x.astype(np.float64, copy=False)
    sig = 1.0 / (1.0 + np.exp(-xd))
    return (dy * sig * (1.0 + xd * (1.0 - sig))).astype(x.dtype, copy=False)
