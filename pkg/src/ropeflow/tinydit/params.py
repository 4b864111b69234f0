"""Flat parameter storage with a named-offset index.

All parameters live in one 1-D array; named views are reshaped slices of
it, so in-place optimizer updates reach every tensor.
"""

from __future__ import annotations

import numpy as np


def param_layout(cfg):
    """Ordered (name, shape) pairs defining the flat layout."""
    d = cfg.d_model
    pp = cfg.patch_values
    rd = cfg.mlp_ratio * d
    spec = [
        ("patch_embed.w", (pp, d)),
        ("patch_embed.b", (d,)),
        ("time_mlp.w1", (d, d)),
        ("time_mlp.b1", (d,)),
        ("time_mlp.w2", (d, d)),
        ("time_mlp.b2", (d,)),
        ("class_embed.table", (cfg.class_count, d)),
    ]
    for i in range(cfg.layers):
        b = f"blocks.{i}"
        spec += [
            (f"{b}.ln1.gain", (d,)),
            (f"{b}.ln1.bias", (d,)),
            (f"{b}.attn.wqkv", (d, 3 * d)),
            (f"{b}.attn.bqkv", (3 * d,)),
            (f"{b}.attn.wo", (d, d)),
            (f"{b}.attn.bo", (d,)),
            (f"{b}.ln2.gain", (d,)),
            (f"{b}.ln2.bias", (d,)),
            (f"{b}.mlp.w1", (d, rd)),
            (f"{b}.mlp.b1", (rd,)),
            (f"{b}.mlp.w2", (rd, d)),
            (f"{b}.mlp.b2", (d,)),
        ]
    spec += [
        ("final_ln.gain", (d,)),
        ("final_ln.bias", (d,)),
        ("head.w", (d, pp)),
        ("head.b", (pp,)),
    ]
    return spec


def param_count(cfg):
    return sum(int(np.prod(shape)) for _, shape in param_layout(cfg))


def param_offsets(cfg):
    """name -> (offset, shape) index into the flat array."""
    out = {}
    offset = 0
    for name, shape in param_layout(cfg):
        out[name] = (offset, shape)
        offset += int(np.prod(shape))
    return out


class Params:
    """Flat parameter (or gradient) array with named reshaped views."""

    def __init__(self, cfg, flat=None, dtype=np.float32):
        self.cfg = cfg
        self.offsets = param_offsets(cfg)
        total = param_count(cfg)
        if flat is None:
            flat = np.zeros(total, dtype=dtype)
        else:
            flat = np.asarray(flat, dtype=dtype)
            if flat.size != total:
                raise ValueError(f"expected {total} parameters, got {flat.size}")
        self.flat = flat

    def view(self, name):
        offset, shape = self.offsets[name]
        return self.flat[offset : offset + int(np.prod(shape))].reshape(shape)

    def zeros_like(self):
        return Params(self.cfg, np.zeros_like(self.flat), dtype=self.flat.dtype)

    def copy(self):
        return Params(self.cfg, self.flat.copy(), dtype=self.flat.dtype)

    @property
    def dtype(self):
        return self.flat.dtype

    def block_names(self):
        return list(self.offsets)


def layer_type_of(name):
    """Coarse parameter grouping used by the finite-difference checks."""
    if name.startswith("blocks."):
        return name.split(".", 2)[2].rsplit(".", 1)[0]  # ln1 / attn.wqkv -> attn ...
    return name.rsplit(".", 1)[0]


def init_params(cfg, seed, dtype=np.float32):
    """Fan-in scaled uniform weights; zero the output head so the fresh
    model predicts exactly zero velocity."""
    params = Params(cfg, dtype=dtype)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    for name, shape in param_layout(cfg):
        v = params.view(name)
        if name.startswith("head."):
            continue  # stays zero
        if name.endswith(".gain"):
            v[:] = 1.0
        elif name.endswith(".bqkv") and cfg.qk_bias_init != 0.0:
            d = cfg.d_model
            v[: 2 * d] = cfg.qk_bias_init  # equal q and k biases: locality kernel
        elif name.endswith((".bias", ".b", ".b1", ".b2", ".bqkv", ".bo")):
            continue  # zero
        else:
            fan_in = shape[0] if len(shape) == 2 else shape[-1]
            if name == "class_embed.table":
                fan_in = shape[1]  # lookup row feeds a width-d add, not a matmul
            bound = 1.0 / np.sqrt(fan_in)
            v[:] = rng.uniform(-bound, bound, size=shape)
    return params
