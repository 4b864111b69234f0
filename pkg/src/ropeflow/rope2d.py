"""Rotary-embedding frequency tables and axial 2-D application.

A head of width ``d_model`` carries ``d_model/4`` rotation frequencies per
image axis: the first half of the feature dimensions rotates with the
horizontal (x) coordinate, the second half with the vertical (y)
coordinate, and within each half consecutive feature pairs share one
frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

TWO_PI = 2.0 * np.pi

DEFAULT_THETA_BASE = 1e-4
"""Default geometric-series base.

With a base below one the series descends: dimension 0 carries the highest
frequency (one radian per position) and the last dimension the lowest.
The base is exposed everywhere so the ascending convention is expressible
too.
"""


def _readonly(a):
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyTable:
    """Per-dimension rotation frequencies of one axis of a rotary head.

    theta[d] is in radians per position unit; wavelength[d] = 2*pi/theta[d]
    is the position period of dimension d.
    """

    theta: np.ndarray
    theta_base: float
    wavelength: np.ndarray = field(default=None)

    def __post_init__(self):
        theta = _readonly(self.theta)
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 1 or theta.size < 2:
            raise ValueError("frequency table needs a 1-D theta with at least 2 entries")
        if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise ValueError("theta entries must be finite and positive")
        # theta[0] == 1 holds for constructed geometric series (exponent 0)
        # but not for extrapolation-transformed tables, so it is enforced by
        # build_frequency_table rather than here.
        diffs = np.diff(theta)
        if not (np.all(diffs < 0) or np.all(diffs > 0)):
            raise ValueError("theta must be strictly monotone")
        if self.theta_base <= 0:
            raise ValueError("theta_base must be positive")
        wl = self.wavelength
        if wl is None:
            wl = TWO_PI / theta
        object.__setattr__(self, "wavelength", _readonly(wl))

    @property
    def D(self):
        return int(self.theta.size)

    def with_theta(self, theta):
        """Derived table with the same base bookkeeping but new frequencies."""
        return FrequencyTable(theta=theta, theta_base=self.theta_base)


def build_frequency_table(D, theta_base=DEFAULT_THETA_BASE):
    """Geometric frequency series theta[d] = theta_base**(d/(D-1)), d = 0..D-1."""
    if int(D) != D or D < 2:
        raise ValueError(f"need at least 2 frequency dimensions, got {D}")
    if theta_base <= 0:
        raise ValueError(f"theta_base must be positive, got {theta_base}")
    if theta_base == 1.0:
        raise ValueError("theta_base=1 collapses the series to a constant")
    d = np.arange(int(D), dtype=np.float64)
    theta = np.power(theta_base, d / (D - 1))
    table = FrequencyTable(theta=theta, theta_base=float(theta_base))
    assert table.theta[0] == 1.0  # exponent 0 of the geometric series
    return table


@dataclass(frozen=True)
class PositionGrid:
    """Token coordinates of a height x width grid, with per-axis contexts.

    train_context holds the per-axis training extents (y, x); the
    per-axis extrapolation scale is the tested extent over the trained
    extent.  Coordinates may be fractional (position-interpolation remaps
    produce those) but must be strictly increasing per axis.
    """

    height: int
    width: int
    train_context: tuple[int, int] = None
    positions_y: np.ndarray = None
    positions_x: np.ndarray = None

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("grid extents must be positive")
        tc = self.train_context or (self.height, self.width)
        if tc[0] < 1 or tc[1] < 1:
            raise ValueError("train_context extents must be positive")
        object.__setattr__(self, "train_context", (int(tc[0]), int(tc[1])))
        py = np.arange(self.height, dtype=np.float64) if self.positions_y is None else self.positions_y
        px = np.arange(self.width, dtype=np.float64) if self.positions_x is None else self.positions_x
        py = _readonly(py)
        px = _readonly(px)
        if py.size != self.height or px.size != self.width:
            raise ValueError("coordinate vectors must match the grid extents")
        if (py.size > 1 and np.any(np.diff(py) <= 0)) or (px.size > 1 and np.any(np.diff(px) <= 0)):
            raise ValueError("coordinate vectors must be strictly increasing")
        object.__setattr__(self, "positions_y", py)
        object.__setattr__(self, "positions_x", px)

    @property
    def tokens(self):
        return self.height * self.width

    @property
    def scale(self):
        """Per-axis (y, x) extrapolation scale: tested extent / trained extent."""
        return (self.height / self.train_context[0], self.width / self.train_context[1])


@dataclass(frozen=True)
class HeadVectors:
    """Token-major (tokens, d_model) head vectors.

    The first half of the feature dimensions binds to the horizontal axis,
    the second half to the vertical axis; d_model must be divisible by 4.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("values must be (tokens, d_model)")
        if v.shape[1] % 4 != 0:
            raise ValueError(f"d_model must be divisible by 4, got {v.shape[1]}")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def tokens(self):
        return int(self.values.shape[0])

    @property
    def d_model(self):
        return int(self.values.shape[1])


def axial_angles(grid, table_x, table_y):
    """Per-token rotation angles, returned as ((tokens, Dx), (tokens, Dy)).

    Tokens are row-major: token i sits at (y, x) = divmod(i, width).
    """
    ang_x = np.multiply.outer(grid.positions_x, table_x.theta)  # (W, D)
    ang_y = np.multiply.outer(grid.positions_y, table_y.theta)  # (H, D)
    xi = np.tile(np.arange(grid.width), grid.height)
    yi = np.repeat(np.arange(grid.height), grid.width)
    return ang_x[xi], ang_y[yi]


def apply_axial_rope(vectors, grid, table_x, table_y):
    """Rotate head vectors axially: x-half by column angle, y-half by row angle.

    Every token vector keeps its Euclidean norm (rotations are isometries),
    and query/key inner products depend only on coordinate differences.
    """
    d = vectors.d_model
    if d // 4 != table_x.D or d // 4 != table_y.D:
        raise ValueError(
            f"d_model/4 = {d // 4} must equal both table sizes "
            f"({table_x.D} horizontal, {table_y.D} vertical)"
        )
    if vectors.tokens != grid.tokens:
        raise ValueError(f"token count {vectors.tokens} != grid tokens {grid.tokens}")
    tok_x, tok_y = axial_angles(grid, table_x, table_y)
    half = d // 2
    out = np.empty_like(vectors.values)
    out[:, :half] = kernels.rope_rotate(vectors.values[:, :half], np.cos(tok_x), np.sin(tok_x))
    out[:, half:] = kernels.rope_rotate(vectors.values[:, half:], np.cos(tok_y), np.sin(tok_y))
    return HeadVectors(values=out)
