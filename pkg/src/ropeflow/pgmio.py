"""Binary (P5) PGM reading/writing and the [-1, 1] <-> 8-bit codec."""

from __future__ import annotations

import numpy as np

_MAXVAL = 255


def write_pgm(path, img):
    """Write a 2-D uint8 array as binary PGM."""
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError("write_pgm expects a 2-D uint8 array")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{_MAXVAL}\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path):
    """Read a binary PGM into a 2-D uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM")
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed between them.
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        tokens.append(int(data[start:i]))
    i += 1  # single whitespace after maxval
    w, h, maxval = tokens
    if maxval != _MAXVAL:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    raw = np.frombuffer(data, dtype=np.uint8, count=h * w, offset=i)
    return raw.reshape(h, w).copy()


def encode_unit(x):
    """Map [-1, 1] floats to uint8 (values outside the range are clipped)."""
    return np.rint((np.clip(x, -1.0, 1.0) + 1.0) * (_MAXVAL / 2.0)).astype(np.uint8)


def decode_unit(img):
    """Inverse of encode_unit, up to quantization."""
    return img.astype(np.float64) * (2.0 / _MAXVAL) - 1.0
