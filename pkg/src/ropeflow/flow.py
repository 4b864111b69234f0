"""Flow-matching machinery: the linear noising path and a deterministic
Euler sampler with a per-step positional-policy hook.

The path is x_t = (1-t)x + t*eps, so t=1 is pure noise and t=0 pure data;
the matching velocity target is the constant eps - x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_STEPS = 28


@dataclass(frozen=True)
class DiffusionState:
    """A noised batch with its time and schedule coefficients."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"time must lie in [0, 1], got {self.t}")

    @property
    def alpha_t(self):
        return 1.0 - self.t

    @property
    def sigma_t(self):
        return self.t


@dataclass(frozen=True)
class StepGrid:
    """Uniform time grid from 1 to 0 inclusive; `times` has steps+1 entries."""

    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("need at least one step")

    @property
    def times(self):
        return np.linspace(1.0, 0.0, self.steps + 1)


def forward_noise(x, epsilon, t):
    """Mix data with noise along the linear path: (1-t)x + t*eps."""
    x = np.asarray(x, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if x.shape != epsilon.shape:
        raise ValueError(f"shape mismatch: data {x.shape} vs noise {epsilon.shape}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"time must lie in [0, 1], got {t}")
    return DiffusionState(x=(1.0 - t) * x + t * epsilon, t=float(t))


def initial_noise(shape, seed):
    """Standard-normal start of the sampler; one RNG stream per batch element."""
    batch = shape[0]
    out = np.empty(shape, dtype=np.float64)
    for i in range(batch):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        out[i] = rng.standard_normal(shape[1:])
    return out


def euler_sample(model, grid, policy, seed, shape, x_init=None, on_step=None):
    """Integrate x' = v from the noise endpoint to the data endpoint.

    `model(x, t, policy)` returns the velocity estimate; the policy and the
    grid time of the current step are handed to it together at every step,
    so time-dependent policies re-evaluate per step.  Deterministic given
    the seed (or an explicit x_init).
    """
    times = grid.times
    x = initial_noise(shape, seed) if x_init is None else np.array(x_init, dtype=np.float64)
    if x.shape != tuple(shape):
        raise ValueError(f"x_init shape {x.shape} != requested {tuple(shape)}")
    for k in range(grid.steps):
        t_k = float(times[k])
        if on_step is not None:
            on_step(k, t_k)
        v = np.asarray(model(x, t_k, policy), dtype=np.float64)
        if v.shape != x.shape:
            raise ValueError(f"velocity shape {v.shape} != state shape {x.shape}")
        if not np.all(np.isfinite(v)):
            raise RuntimeError(f"non-finite velocity at step {k} (t={t_k})")
        x = x + (float(times[k + 1]) - t_k) * v
    return x
