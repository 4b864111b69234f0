"""Contracts on the shipped reference assets."""

import numpy as np
import pytest

from ropeflow import dataggen, evalkit
from ropeflow.dynamic import PePolicy
from ropeflow.evalkit import spectral_distance
from ropeflow.spectral import radial_psd
from ropeflow.tinydit import ModelConfig, param_count


def test_checkpoint_matches_protocol(reference_checkpoint, reference_eval_protocol):
    cfg = reference_checkpoint.config
    assert cfg == ModelConfig(**reference_eval_protocol["model"])
    assert reference_checkpoint.params.size == param_count(cfg)
    assert np.all(np.isfinite(reference_checkpoint.params))


def test_training_halved_the_zero_model_loss(reference_checkpoint):
    meta = reference_checkpoint.meta
    # the zero-initialized head makes the first recorded loss the zero-model baseline
    assert meta["final_loss_tail_mean"] <= 0.5 * meta["initial_loss"], (
        f"{meta['final_loss_tail_mean']:.4f} vs baseline {meta['initial_loss']:.4f}"
    )
    assert meta["steps"] >= 2000


def test_native_vanilla_samples_match_training_spectra(
    reference_checkpoint, reference_eval_protocol
):
    """Sampling at the training resolution under the vanilla policy stays
    below the frozen spectral-distance threshold from the reference run."""
    proto = reference_eval_protocol
    model = reference_checkpoint.to_model()
    side = model.cfg.image_side
    ref_spec = dataggen.DatasetSpec(
        kind="power_law_field", side=side, count=256,
        seed=proto["reference_dataset"]["seed"],
        params={"omega": 2.0}, class_ids=(proto["eval"]["class_id"],),
    )
    ref_imgs, _ = dataggen.generate(ref_spec)
    reference = radial_psd(ref_imgs / proto["reference_scale"])
    samples = evalkit.sample_with_policy(
        model, PePolicy(kind="vanilla"), side, 0, 8, proto["eval"]["steps"],
        proto["eval"]["class_id"],
    )
    dist = spectral_distance(radial_psd(samples), reference, tuple(proto["eval"]["band"]))
    assert dist <= proto["thresholds"]["native_vanilla_spectral_distance"], dist
