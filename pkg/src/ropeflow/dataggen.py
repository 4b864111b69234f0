"""Synthetic image distributions with analytically known spectra.

Three generators: Gaussian random fields with a radial power-law spectrum,
axis-aligned periodic textures, and Gaussian blob scenes.  Every image is
normalized to zero mean and unit variance and is a pure function of
(seed, image index), so batches are reproducible element by element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .spectral import radial_bin_index

KINDS = ("power_law_field", "periodic_texture", "blob_scene")


@dataclass(frozen=True)
class DatasetSpec:
    """One synthetic source: a kind, its parameters, and a class per variant.

    Variants (one omega, one period, ...) cycle over image indices; image i
    draws variant i % len(class_ids) and carries that variant's class id.
    """

    kind: str
    side: int
    count: int
    seed: int
    params: Mapping = field(default_factory=dict)
    class_ids: tuple = (0,)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown dataset kind {self.kind!r}; valid: {', '.join(KINDS)}")
        if self.side < 4 or (self.side & (self.side - 1)) != 0:
            raise ValueError(f"side must be a power of two >= 4, got {self.side}")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "class_ids", tuple(int(c) for c in self.class_ids))
        n_var = len(self._variants())
        if len(self.class_ids) != n_var:
            raise ValueError(f"{n_var} variants need {n_var} class ids, got {len(self.class_ids)}")

    def _variants(self):
        if self.kind == "power_law_field":
            om = self.params.get("omega", 2.0)
            return [{"omega": float(o)} for o in np.atleast_1d(om)]
        if self.kind == "periodic_texture":
            periods = np.atleast_1d(self.params.get("periods", 8))
            for p in periods:
                if self.side % int(p) != 0:
                    raise ValueError(f"period {p} does not divide side {self.side}")
            return [{"period": int(p)} for p in periods]
        blobs = int(self.params.get("blobs", 8))
        sigma = float(self.params.get("sigma", 2.0))
        if blobs < 1 or sigma <= 0:
            raise ValueError("blob_scene needs blobs >= 1 and sigma > 0")
        return [{"blobs": blobs, "sigma": sigma}]

    def to_dict(self):
        return {
            "kind": self.kind,
            "side": self.side,
            "count": self.count,
            "seed": self.seed,
            "params": dict(self.params),
            "class_ids": list(self.class_ids),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            side=int(d["side"]),
            count=int(d["count"]),
            seed=int(d["seed"]),
            params=d.get("params", {}),
            class_ids=tuple(d.get("class_ids", (0,))),
        )


def _normalize(img):
    img = img - img.mean()
    sd = img.std()
    if sd == 0:
        return img
    return img / sd


def _power_law_amplitude(side, omega, C):
    # Amplitudes follow the *binned* radial profile, so the estimated radial
    # spectrum matches C/f**omega exactly in expectation bin by bin.
    rad = radial_bin_index(side).astype(np.float64)
    amp = np.zeros_like(rad)
    nz = rad > 0
    amp[nz] = np.sqrt(C) * rad[nz] ** (-omega / 2.0)
    return amp


def _gen_power_law(side, rng, omega, C=1.0):
    white = rng.standard_normal((side, side))
    shaped = np.fft.ifft2(np.fft.fft2(white) * _power_law_amplitude(side, omega, C)).real
    return _normalize(shaped)


def _gen_periodic(side, rng, period):
    phase_x, phase_y = rng.uniform(0.0, 2.0 * np.pi, 2)
    coords = np.arange(side, dtype=np.float64)
    wave_x = np.sin(2.0 * np.pi * coords / period + phase_x)
    wave_y = np.sin(2.0 * np.pi * coords / period + phase_y)
    return _normalize(wave_x[None, :] + wave_y[:, None])


def _gen_blobs(side, rng, blobs, sigma):
    centers = rng.uniform(0.0, side, (blobs, 2))
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    img = np.zeros((side, side))
    for cy, cx in centers:
        img += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma**2))
    return _normalize(img)


def generate(spec):
    """Materialize a spec: returns (images (count, side, side), classes)."""
    variants = spec._variants()
    images = np.empty((spec.count, spec.side, spec.side), dtype=np.float64)
    classes = np.empty(spec.count, dtype=np.int64)
    for i in range(spec.count):
        v = i % len(variants)
        rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), i]))
        params = variants[v]
        if spec.kind == "power_law_field":
            images[i] = _gen_power_law(spec.side, rng, params["omega"], spec.params.get("C", 1.0))
        elif spec.kind == "periodic_texture":
            images[i] = _gen_periodic(spec.side, rng, params["period"])
        else:
            images[i] = _gen_blobs(spec.side, rng, params["blobs"], params["sigma"])
        classes[i] = spec.class_ids[v]
    return images, classes


DATASET_MANIFEST = "manifest.json"
DEFAULT_AMPLITUDE = 3.0
"""Full-scale value of the on-disk 8-bit encoding.

Generated images are unit variance; dividing by this amplitude puts all but
the far Gaussian tails inside the [-1, 1] pixel range the model trains on.
"""


def save_dataset(specs, out_dir, amplitude=DEFAULT_AMPLITUDE):
    """Write specs to a directory of PGM files plus a JSON manifest."""
    import json
    from pathlib import Path

    from .pgmio import encode_unit, write_pgm

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    index = 0
    sides = {s.side for s in specs}
    if len(sides) != 1:
        raise ValueError(f"all specs in one dataset must share a side, got {sides}")
    for si, spec in enumerate(specs):
        images, classes = generate(spec)
        for j in range(spec.count):
            name = f"img_{index:05d}.pgm"
            write_pgm(out / name, encode_unit(images[j] / amplitude))
            entries.append({"file": name, "class": int(classes[j]), "spec": si, "index": j})
            index += 1
    manifest = {
        "side": specs[0].side,
        "amplitude": amplitude,
        "specs": [s.to_dict() for s in specs],
        "images": entries,
    }
    with open(out / DATASET_MANIFEST, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    return manifest


def load_dataset(path):
    """Read a saved dataset: returns (images in [-1, 1], classes, manifest)."""
    import json
    from pathlib import Path

    from .pgmio import decode_unit, read_pgm

    root = Path(path)
    mpath = root / DATASET_MANIFEST
    if not mpath.exists():
        raise FileNotFoundError(f"no {DATASET_MANIFEST} in {root}")
    with open(mpath) as fh:
        manifest = json.load(fh)
    entries = manifest["images"]
    side = manifest["side"]
    images = np.empty((len(entries), side, side), dtype=np.float64)
    classes = np.empty(len(entries), dtype=np.int64)
    for i, e in enumerate(entries):
        images[i] = decode_unit(read_pgm(root / e["file"]))
        classes[i] = e["class"]
    return images, classes, manifest
