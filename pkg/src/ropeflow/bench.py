"""Benchmark the pure numpy kernel lane against the compiled core.

Run as `python -m ropeflow.bench`.  Times each kernel on attention-sized
workloads and a full training step end to end on both lanes.  Matrix
products route through BLAS in both lanes, so the deltas below isolate the
memory-bound elementwise/reduction work the compiled core fuses.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .tinydit import Model, ModelConfig, TrainHyper


def _time(fn, min_time=0.2):
    fn()  # warm up
    n = 0
    t0 = time.perf_counter()
    while True:
        fn()
        n += 1
        dt = time.perf_counter() - t0
        if dt >= min_time:
            return dt / n


def kernel_cases(dtype=np.float32):
    rng = np.random.default_rng(0)
    rows, cols, pairs = 16384, 256, 16
    x = rng.standard_normal((rows, 2 * pairs)).astype(dtype)
    ang = rng.standard_normal((rows, pairs)).astype(dtype)
    z = rng.standard_normal((rows, cols)).astype(dtype)
    p = np.abs(z) + 0.1
    p /= p.sum(axis=1, keepdims=True)
    g = rng.standard_normal(512).astype(dtype)
    b = rng.standard_normal(512).astype(dtype)
    xw = rng.standard_normal((rows, 512)).astype(dtype)
    _, mean, rstd = kernels.layernorm_forward(xw, g, b)
    return {
        "rope_rotate": lambda: kernels.rope_rotate(x, np.cos(ang), np.sin(ang)),
        "softmax_rows": lambda: kernels.softmax_rows(z),
        "softmax_backward": lambda: kernels.softmax_rows_backward(p, z),
        "layernorm_forward": lambda: kernels.layernorm_forward(xw, g, b),
        "layernorm_backward": lambda: kernels.layernorm_backward(xw, xw, mean, rstd, g),
        "gelu_forward": lambda: kernels.gelu_forward(xw),
        "gelu_backward": lambda: kernels.gelu_backward(xw, xw),
    }


def train_step_case():
    cfg = ModelConfig(image_side=32, patch_size=4, d_model=64, heads=2, layers=4,
                      mlp_ratio=4, class_count=8)
    model = Model(cfg, seed=0, dtype=np.float32)
    rng = np.random.default_rng(1)
    images = rng.standard_normal((TrainHyper().batch, 32, 32)) * 0.3
    classes = rng.integers(0, 8, images.shape[0])
    return lambda: model.loss_and_grad(images, classes, seed=5)


def main():
    lanes = kernels.available_backends()
    print(f"kernel lanes available: {', '.join(lanes)}")
    results = {}
    for lane in lanes:
        kernels.set_backend(lane)
        for name, fn in kernel_cases().items():
            results.setdefault(name, {})[lane] = _time(fn)
        results.setdefault("train_step (batch 64)", {})[lane] = _time(train_step_case(), 1.0)
    kernels.set_backend(lanes[-1])
    width = max(len(k) for k in results)
    header = f"{'kernel':<{width}}  " + "".join(f"{lane:>12}" for lane in lanes)
    if len(lanes) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, times in results.items():
        line = f"{name:<{width}}  " + "".join(f"{times[lane] * 1e3:>10.3f}ms" for lane in lanes)
        if len(lanes) == 2:
            line += f"{times['pure'] / times['compiled']:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
