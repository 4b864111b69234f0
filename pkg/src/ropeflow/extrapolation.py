"""Static position-extrapolation schemes for rotary embeddings.

Each scheme is expressed as a position map g and a frequency map h, plus an
optional attention-logit scale.  All maps reduce to the identity at scale 1,
and none of them ever raises a frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rope2d import TWO_PI, FrequencyTable


@dataclass(frozen=True)
class RampParams:
    """Band boundaries of the by-parts ramp, in rotations over the context."""

    alpha: float = 1.0
    beta: float = 32.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not self.alpha < self.beta:
            raise ValueError(f"need alpha < beta, got {self.alpha} >= {self.beta}")


def _check_scale(s):
    if s < 1.0:
        raise ValueError(f"extrapolation scale must be >= 1, got {s}")


def pi_map(m, s):
    """Uniform position interpolation: g(m) = m/s, frequencies untouched."""
    _check_scale(s)
    return m / s


def rotations(table, L):
    """Rotations each dimension completes over a context of L positions."""
    if L <= 0:
        raise ValueError(f"context must be positive, got {L}")
    return L * table.theta / TWO_PI


def ntk_frequencies(table, s):
    """Frequency-dependent compression h(theta_d) = theta_d / s**(2d/(D-2))."""
    D = table.D
    if D < 3:
        raise ValueError(f"need at least 3 dimensions, got D={D}")
    _check_scale(s)
    exps = 2.0 * np.arange(D, dtype=np.float64) / (D - 2)
    return table.with_theta(table.theta / np.power(s, exps))


def yarn_ramp(r, ramp):
    """Piecewise-linear blend weight: 0 below alpha, 1 above beta."""
    r = np.asarray(r, dtype=np.float64)
    out = np.clip((r - ramp.alpha) / (ramp.beta - ramp.alpha), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def blend_frequencies(theta, gamma, pi_leg):
    # theta/s + gamma*(theta - theta/s) rather than the two-product form so
    # the gamma=1 and s=1 cases return theta bit-exactly.
    return pi_leg + gamma * (theta - pi_leg)


def yarn_frequencies(table, s, L, ramp):
    """By-parts interpolation: blend between theta/s and theta via the ramp.

    Dimensions completing fewer than alpha rotations over the training
    context get the full uniform compression; dimensions above beta are
    left untouched.
    """
    _check_scale(s)
    gamma = yarn_ramp(rotations(table, L), ramp)
    return table.with_theta(blend_frequencies(table.theta, gamma, table.theta / s))


def attention_scale(s):
    """Pre-softmax logit multiplier 0.1*ln(s) + 1; exactly 1 at s = 1."""
    _check_scale(s)
    return 0.1 * np.log(s) + 1.0
