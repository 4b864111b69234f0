"""Build the shipped reference assets under assets/reference/.

Trains the reference checkpoint on the synthetic mixture, freezes the
evaluation protocol and thresholds, and writes:

    assets/reference/model.ckpt   trained checkpoint
    assets/reference/train.cfg    CLI config reproducing the training run
    assets/reference/eval.json    evaluation protocol + frozen thresholds

Usage: python scripts/make_reference.py [--steps N]
Deterministic: rerunning reproduces the checkpoint byte for byte.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from ropeflow import dataggen, evalkit  # noqa: E402
from ropeflow.dynamic import PePolicy  # noqa: E402
from ropeflow.spectral import radial_psd  # noqa: E402
from ropeflow.tinydit import ModelConfig, TrainHyper, save_checkpoint, train  # noqa: E402

# training data: texture classes 0-3, power-law classes 4-7
SIDE = 32
PERIODS = [4, 8, 16, 32]
OMEGAS = [1.6, 2.0, 2.4, 2.8]
DATASET_COUNT = 2048
DATASET_SEED = 0
TRAIN_SEED = 7

MODEL = dict(image_side=SIDE, patch_size=4, d_model=64, heads=2, layers=4,
             mlp_ratio=4, class_count=8, theta_base=1e-2)
HYPER = dict(lr=2e-3, momentum=0.9, batch=64)

EVAL = {
    "test_side": 64,
    "count": 8,
    "steps": 28,
    "class_id": 5,          # power-law omega = 2.0
    "band": [1.0, 12.0],
    "alpha": 0.25,          # by-parts boundaries matched to the 8-token grid
    "beta": 2.0,
    "lambda_s": 2.0,
    "lambda_t": 2.0,
    "seeds": [0, 1, 2, 3, 4],
}
REFERENCE_DATASET = dict(kind="power_law_field", side=64, count=256, seed=123,
                         params={"omega": 2.0}, class_ids=[5])
REFERENCE_SCALE = dataggen.DEFAULT_AMPLITUDE  # match the on-disk pixel scale


def training_specs():
    from ropeflow.cli import mixture_specs

    return mixture_specs(SIDE, DATASET_COUNT, DATASET_SEED, PERIODS, OMEGAS)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()

    out = REPO / "assets" / "reference"
    out.mkdir(parents=True, exist_ok=True)

    print("generating training mixture ...")
    images, classes = [], []
    for spec in training_specs():
        imgs, cls = dataggen.generate(spec)
        images.append(np.clip(imgs / dataggen.DEFAULT_AMPLITUDE, -1, 1))
        classes.append(cls)
    images = np.concatenate(images)
    classes = np.concatenate(classes)

    cfg = ModelConfig(**MODEL)
    hyper = TrainHyper(steps=args.steps, **HYPER)
    print(f"training {args.steps} steps ...")
    ckpt = train(cfg, images, classes, hyper, TRAIN_SEED, log_every=200)
    ratio = ckpt.meta["final_loss_tail_mean"] / ckpt.meta["initial_loss"]
    print(f"loss {ckpt.meta['initial_loss']:.4f} -> {ckpt.meta['final_loss_tail_mean']:.4f} "
          f"({ratio:.1%} of baseline)")
    save_checkpoint(out / "model.ckpt", ckpt)

    # freeze the native-resolution sanity threshold: vanilla samples at the
    # training side must sit below 2x the measured reference-run distance
    model = ckpt.to_model()
    ref_spec = dataggen.DatasetSpec.from_dict(REFERENCE_DATASET)
    ref_at_train = dataggen.DatasetSpec(
        kind="power_law_field", side=SIDE, count=256, seed=123,
        params={"omega": 2.0}, class_ids=(5,),
    )
    ref_imgs, _ = dataggen.generate(ref_at_train)
    reference32 = radial_psd(ref_imgs / REFERENCE_SCALE)
    samples = evalkit.sample_with_policy(model, PePolicy(kind="vanilla"), SIDE, 0, 8, 28, 5)
    # the artifact window needs test > train, so only the spectral part applies here
    from ropeflow.evalkit import spectral_distance

    native_distance = spectral_distance(radial_psd(samples), reference32, (1.0, 12.0))
    print(f"native vanilla spectral distance: {native_distance:.4f}")

    protocol = {
        "model": MODEL,
        "hyper": {**HYPER, "steps": args.steps},
        "train_seed": TRAIN_SEED,
        "dataset": {"side": SIDE, "count": DATASET_COUNT, "seed": DATASET_SEED,
                    "periods": PERIODS, "omegas": OMEGAS},
        "reference_dataset": REFERENCE_DATASET,
        "reference_scale": REFERENCE_SCALE,
        "eval": EVAL,
        "thresholds": {"native_vanilla_spectral_distance": round(2.0 * native_distance, 4)},
    }
    (out / "eval.json").write_text(json.dumps(protocol, indent=1, sort_keys=True))

    cfg_lines = [
        "# reference training run; use with: ropeflow train --config this-file --dataset <mixture dir>",
        f"steps = {args.steps}",
        f"seed = {TRAIN_SEED}",
        f"patch-size = {MODEL['patch_size']}",
        f"d-model = {MODEL['d_model']}",
        f"heads = {MODEL['heads']}",
        f"layers = {MODEL['layers']}",
        f"mlp-ratio = {MODEL['mlp_ratio']}",
        f"class-count = {MODEL['class_count']}",
        f"theta-base = {MODEL['theta_base']}",
        f"lr = {HYPER['lr']}",
        f"momentum = {HYPER['momentum']}",
        f"batch = {HYPER['batch']}",
    ]
    (out / "train.cfg").write_text("\n".join(cfg_lines) + "\n")
    print(f"wrote {out / 'model.ckpt'}, eval.json, train.cfg")


if __name__ == "__main__":
    main()
