"""Checkpoint container and its binary file format.

Layout: 4 magic bytes, uint32 version, uint32 header length, a JSON header
(config, named parameter offsets, training metadata), then the flat
parameter array as little-endian float32.  The loader validates the count
against the config-derived layout and rejects non-finite values.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .params import Params, param_count, param_offsets

MAGIC = b"TDCP"
VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    params: np.ndarray  # flat float32
    meta: dict

    def to_model(self, dtype=np.float32):
        from .model import Model

        return Model(self.config, params=Params(self.config, self.params, dtype=dtype))


def save_checkpoint(path, ckpt):
    header = {
        "config": ckpt.config.to_dict(),
        "offsets": {k: [off, list(shape)] for k, (off, shape) in param_offsets(ckpt.config).items()},
        "meta": ckpt.meta,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    flat = np.ascontiguousarray(ckpt.params, dtype="<f4")
    if flat.size != param_count(ckpt.config):
        raise ValueError("parameter count does not match the config layout")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        fh.write(flat.tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic, not a checkpoint file")
    version, hlen = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[12 : 12 + hlen].decode("utf-8"))
    cfg = ModelConfig.from_dict(header["config"])
    flat = np.frombuffer(data, dtype="<f4", offset=12 + hlen).astype(np.float32)
    expected = param_count(cfg)
    if flat.size != expected:
        raise ValueError(f"{path}: expected {expected} parameters, found {flat.size}")
    offsets = {k: (off, tuple(shape)) for k, (off, shape) in header["offsets"].items()}
    if offsets != param_offsets(cfg):
        raise ValueError(f"{path}: parameter index does not match the config layout")
    if not np.all(np.isfinite(flat)):
        raise ValueError(f"{path}: checkpoint contains non-finite parameters")
    return Checkpoint(config=cfg, params=flat, meta=header["meta"])
