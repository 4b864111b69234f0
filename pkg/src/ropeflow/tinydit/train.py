"""Plain SGD-with-momentum training on a synthetic dataset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint
from .model import Model


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 1e-3
    momentum: float = 0.9
    batch: int = 64
    steps: int = 2000

    def __post_init__(self):
        if self.lr <= 0 or not 0 <= self.momentum < 1 or self.batch < 1 or self.steps < 0:
            raise ValueError("bad training hyperparameters")


def _step_seed(seed, step):
    return int(np.random.SeedSequence([int(seed), 2, int(step)]).generate_state(1)[0])


def train(cfg, images, classes, hyper, seed, log_every=0):
    """Train from scratch; deterministic given (cfg, data, hyper, seed).

    The batch-index stream and the per-step noise/time draws come from
    separate seed branches, so changing the step count never reshuffles
    earlier batches.  Raises on non-finite loss, naming the step.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.shape[0] == 0:
        raise ValueError("empty training dataset")
    model = Model(cfg, seed=seed, dtype=np.float32)
    velocity = np.zeros_like(model.params.flat)
    batch_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    losses = []
    for step in range(hyper.steps):
        idx = batch_rng.integers(0, images.shape[0], size=hyper.batch)
        try:
            value, grad = model.loss_and_grad(images[idx], classes[idx], _step_seed(seed, step))
        except FloatingPointError as e:
            raise RuntimeError(f"training diverged at step {step}: {e}") from e
        if not np.isfinite(value):
            raise RuntimeError(f"training diverged at step {step}: loss={value}")
        losses.append(value)
        velocity *= hyper.momentum
        velocity -= hyper.lr * grad
        model.params.flat += velocity
        if log_every and (step % log_every == 0 or step == hyper.steps - 1):
            print(f"step {step:5d}  loss {value:.5f}")
    tail = losses[-100:]
    meta = {
        "seed": int(seed),
        "steps": hyper.steps,
        "hyper": {"lr": hyper.lr, "momentum": hyper.momentum, "batch": hyper.batch},
        "initial_loss": losses[0] if losses else None,
        "final_loss_tail_mean": float(np.mean(tail)) if tail else None,
        "loss_curve_tail": [float(v) for v in tail],
        "loss_curve_thinned": [float(v) for v in losses[:: max(1, len(losses) // 100)]],
        "dataset_size": int(images.shape[0]),
    }
    return Checkpoint(config=cfg, params=model.params.flat.copy(), meta=meta)
