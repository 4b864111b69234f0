"""Time-dynamic position extrapolation driven by a sampling-time scheduler.

The scheduler attenuates extrapolation as sampling approaches the data
endpoint (t = 0): every dynamic scheme reproduces the static scheme it
extends at full strength and collapses to plain rotary embeddings at t = 0,
so the late, detail-resolving steps run under the encoding the model was
trained with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .extrapolation import (
    RampParams,
    _check_scale,
    attention_scale,
    blend_frequencies,
    ntk_frequencies,
    pi_map,
    rotations,
    yarn_frequencies,
    yarn_ramp,
)
from .rope2d import TWO_PI, FrequencyTable

PLACEMENTS = ("exponent", "multiplicative")
SCHEDULE_TARGETS = ("by_parts_thresholds", "ntk_term", "both")

POLICY_KINDS = (
    "vanilla",
    "pi",
    "ntk",
    "yarn",
    "dy_pi",
    "dy_ntk",
    "dy_yarn",
    "lumina_time_aware",
)
_STATIC_KINDS = frozenset({"vanilla", "pi", "ntk", "yarn"})
_YARN_FAMILY = frozenset({"yarn", "dy_yarn"})

_DEGENERATE_RAMP_WIDTH = 1e-9


@dataclass(frozen=True)
class ScaleSchedule:
    """kappa(t) = lambda_s * t**lambda_t, with its placement mode.

    `placement` selects how kappa enters the frequency compression
    (exponentiating it, or scaling the base); `target` selects where the
    scheduler acts inside the by-parts scheme.
    """

    lambda_s: float = 2.0
    lambda_t: float = 2.0
    placement: str = "exponent"
    target: str = "by_parts_thresholds"

    def __post_init__(self):
        if self.lambda_s <= 0:
            raise ValueError("lambda_s must be positive")
        if self.lambda_t <= 0:
            raise ValueError("lambda_t must be positive")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.target not in SCHEDULE_TARGETS:
            raise ValueError(f"target must be one of {SCHEDULE_TARGETS}, got {self.target!r}")

    def to_dict(self):
        return {
            "lambda_s": self.lambda_s,
            "lambda_t": self.lambda_t,
            "placement": self.placement,
            "target": self.target,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _check_time(t):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"sampling time must lie in [0, 1], got {t}")


def kappa(t, schedule):
    """Scheduler value lambda_s * t**lambda_t; 0 at t=0, lambda_s at t=1."""
    _check_time(t)
    return schedule.lambda_s * t**schedule.lambda_t


def dy_pi_map(m, s, t, schedule):
    """Position interpolation with the scale exponentiated by kappa(t)."""
    _check_scale(s)
    return m / s ** kappa(t, schedule)


def dy_ntk_frequencies(table, s, t, schedule):
    """Time-dynamic frequency compression.

    Exponent placement multiplies the per-dimension exponent by kappa(t);
    multiplicative placement scales the base instead, with kappa clamped
    below by 1/s so the effective base never drops under 1 (which would
    amplify frequencies instead of compressing them).
    """
    D = table.D
    if D < 3:
        raise ValueError(f"need at least 3 dimensions, got D={D}")
    _check_scale(s)
    k = kappa(t, schedule)
    exps = 2.0 * np.arange(D, dtype=np.float64) / (D - 2)
    if schedule.placement == "exponent":
        theta = table.theta / np.power(s, k * exps)
    else:
        base = s * max(k, 1.0 / s)
        theta = table.theta / np.power(base, exps)
    return table.with_theta(theta)


def dy_yarn_ramp(r, ramp, t, lambda_t):
    """By-parts ramp with thresholds alpha*t**lambda_t, beta*t**lambda_t.

    The threshold scheduler always uses unit magnitude (the thresholds are
    already multiplied by alpha and beta).  As t -> 0 both thresholds
    collapse to zero, which unscales every band; the collapsed ramp is
    defined as 1 for any positive rotation count.
    """
    _check_time(t)
    k = t**lambda_t
    if k * (ramp.beta - ramp.alpha) < _DEGENERATE_RAMP_WIDTH:
        r = np.asarray(r, dtype=np.float64)
        out = np.where(r > 0, 1.0, 0.0)
        return float(out) if out.ndim == 0 else out
    return yarn_ramp(r, RampParams(alpha=ramp.alpha * k, beta=ramp.beta * k))


def dy_yarn_frequencies(table, s, L, ramp, t, schedule):
    """Time-dynamic by-parts interpolation.

    target = "by_parts_thresholds" moves the band boundaries with t (the
    best-performing incorporation); "ntk_term" leaves the bands static and
    exponentiates the compressed leg by kappa(t) instead; "both" applies
    the two together.
    """
    _check_scale(s)
    _check_time(t)
    r = rotations(table, L)
    if schedule.target in ("by_parts_thresholds", "both"):
        gamma = dy_yarn_ramp(r, ramp, t, schedule.lambda_t)
    else:
        gamma = yarn_ramp(r, ramp)
    if schedule.target in ("ntk_term", "both"):
        pi_leg = table.theta / s ** kappa(t, schedule)
    else:
        pi_leg = table.theta / s
    return table.with_theta(blend_frequencies(table.theta, gamma, pi_leg))


def lumina_time_aware_frequencies(table, s, L, t):
    """Baseline that interpolates from uniform interpolation toward NTK.

    The per-dimension compression exponent is blended linearly with weight
    t on the uniform (position-division) leg: t=1 reproduces position
    interpolation exactly, t=0 the NTK frequency map.  Returns the position
    factor and the frequency table.  This runs opposite to the dynamic
    schemes above: it holds interpolation strength early and NTK late.
    """
    D = table.D
    if D < 3:
        raise ValueError(f"need at least 3 dimensions, got D={D}")
    _check_scale(s)
    _check_time(t)
    position_factor = 1.0 / s**t
    exps = 2.0 * np.arange(D, dtype=np.float64) / (D - 2)
    theta = table.theta / np.power(s, (1.0 - t) * exps)
    return position_factor, table.with_theta(theta)


@dataclass(frozen=True)
class PePolicy:
    """A (possibly time-dependent) positional-encoding policy.

    Evaluation binds the policy to explicit per-axis contexts (trained
    extent L and tested extent L'), so one policy value serves any
    resolution pair.  attention_scale_enabled=None means "on for the
    by-parts family, off otherwise".
    """

    kind: str
    ramp: RampParams = field(default_factory=RampParams)
    schedule: ScaleSchedule = field(default_factory=ScaleSchedule)
    attention_scale_enabled: bool = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; valid: {', '.join(POLICY_KINDS)}")

    @property
    def time_dependent(self):
        return self.kind not in _STATIC_KINDS

    @property
    def scales_attention(self):
        if self.attention_scale_enabled is None:
            return self.kind in _YARN_FAMILY
        return bool(self.attention_scale_enabled)

    def to_dict(self):
        return {
            "kind": self.kind,
            "ramp": {"alpha": self.ramp.alpha, "beta": self.ramp.beta},
            "schedule": self.schedule.to_dict(),
            "attention_scale_enabled": self.attention_scale_enabled,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            ramp=RampParams(**d["ramp"]),
            schedule=ScaleSchedule.from_dict(d["schedule"]),
            attention_scale_enabled=d.get("attention_scale_enabled"),
        )


class AxisEval(NamedTuple):
    """Evaluated policy for one axis: positions scale by position_factor."""

    position_factor: float
    table: FrequencyTable


def policy_axis_eval(policy, table, L, L_prime, t=None):
    """Evaluate a policy on one axis with trained extent L, tested L'.

    Dynamic kinds require the sampling time t.  At L' = L every kind
    returns the untouched table and a unit position factor.
    """
    if L <= 0 or L_prime <= 0:
        raise ValueError("contexts must be positive")
    s = L_prime / L
    _check_scale(s)
    if policy.time_dependent:
        if t is None:
            raise ValueError(f"policy kind {policy.kind!r} needs a sampling time")
        _check_time(t)
    kind = policy.kind
    if kind == "vanilla":
        return AxisEval(1.0, table)
    if kind == "pi":
        return AxisEval(1.0 / s, table)
    if kind == "ntk":
        return AxisEval(1.0, ntk_frequencies(table, s))
    if kind == "yarn":
        return AxisEval(1.0, yarn_frequencies(table, s, L, policy.ramp))
    if kind == "dy_pi":
        return AxisEval(1.0 / s ** kappa(t, policy.schedule), table)
    if kind == "dy_ntk":
        return AxisEval(1.0, dy_ntk_frequencies(table, s, t, policy.schedule))
    if kind == "dy_yarn":
        return AxisEval(1.0, dy_yarn_frequencies(table, s, L, policy.ramp, t, policy.schedule))
    position_factor, new_table = lumina_time_aware_frequencies(table, s, L, t)
    return AxisEval(position_factor, new_table)


def policy_tau(policy, scale_y, scale_x):
    """Attention-logit scale for the policy at the given per-axis scales.

    The scalar scale feeding the log is the geometric mean of the two axis
    scales; equal to 1 (hence tau = 1) whenever both axes are unscaled.
    """
    if not policy.scales_attention:
        return 1.0
    _check_scale(scale_y)
    _check_scale(scale_x)
    return attention_scale(math.sqrt(scale_y * scale_x))


WAVELENGTH_COLUMNS = ("kind", "t", "axis", "d", "theta_eff", "wavelength_eff")


def wavelength_report(policy, table, L, L_prime, times):
    """Effective per-dimension frequency and wavelength at each time.

    The effective frequency folds the position remap in: a wave
    cos(g(m) * h(theta_d)) advances by position_factor * h(theta_d)
    radians per token, so its wavelength in token units is 2*pi over that.
    Rows follow WAVELENGTH_COLUMNS, with one row per axis, time, and
    dimension.
    """
    Ls = L if isinstance(L, (tuple, list)) else (L, L)
    Lps = L_prime if isinstance(L_prime, (tuple, list)) else (L_prime, L_prime)
    rows = []
    for t in times:
        for axis, La, Lpa in (("y", Ls[0], Lps[0]), ("x", Ls[1], Lps[1])):
            ev = policy_axis_eval(policy, table, La, Lpa, t=t)
            theta_eff = ev.position_factor * ev.table.theta
            for d in range(table.D):
                rows.append(
                    (policy.kind, float(t), axis, d, float(theta_eff[d]), float(TWO_PI / theta_eff[d]))
                )
    return rows
