"""Spectral-distance and repetition metrics, and the ablation harness."""

import numpy as np
import pytest

from ropeflow.evalkit import (
    ABLATION_COLUMNS,
    AblationGrid,
    EvalReport,
    ablation_grid,
    artifact_score,
    evaluate_samples,
    spectral_distance,
)
from ropeflow.spectral import RadialSpectrum, radial_psd
from ropeflow.tinydit import Model, ModelConfig


def _spec(freq, power):
    return RadialSpectrum(np.asarray(freq, float), np.asarray(power, float), 1)


def test_spectral_distance_identity():
    s = _spec([1, 2, 3, 4], [4.0, 2.0, 1.0, 0.5])
    assert spectral_distance(s, s, (1, 4)) == 0.0


def test_spectral_distance_log_scale():
    s = _spec([1, 2, 3, 4], [4.0, 2.0, 1.0, 0.5])
    scaled = _spec([1, 2, 3, 4], np.e * np.asarray([4.0, 2.0, 1.0, 0.5]))
    assert spectral_distance(s, scaled, (1, 4)) == pytest.approx(1.0, rel=1e-12)


def test_spectral_distance_symmetric():
    rng = np.random.default_rng(0)
    a = _spec(np.arange(1, 9), rng.uniform(0.5, 3, 8))
    b = _spec(np.arange(1, 9), rng.uniform(0.5, 3, 8))
    assert spectral_distance(a, b, (1, 8)) == pytest.approx(spectral_distance(b, a, (1, 8)))


def test_spectral_distance_band_subsets_shared_bins():
    # generated at side 64 (bins to 31), reference at side 32 (bins to 15)
    gen = _spec(np.arange(32), np.ones(32))
    ref = _spec(np.arange(16), np.full(16, np.e))
    assert spectral_distance(gen, ref, (1, 12)) == pytest.approx(1.0, rel=1e-12)


def test_spectral_distance_errors():
    a = _spec([1, 2, 3], [1, 1, 1])
    b = _spec([1.0, 2.5, 3.0], [1, 1, 1])
    with pytest.raises(ValueError):
        spectral_distance(a, b, (1, 3))
    with pytest.raises(ValueError):
        spectral_distance(a, a, (10, 20))


def test_artifact_score_detects_tiling():
    rng = np.random.default_rng(1)
    tile = rng.standard_normal((32, 32))
    image = np.tile(tile, (2, 2))
    assert artifact_score(image, 32, 64) >= 0.95


def test_artifact_score_white_noise_low():
    rng = np.random.default_rng(2)
    scores = [artifact_score(rng.standard_normal((64, 64)), 32, 64) for _ in range(20)]
    assert float(np.mean(scores)) <= 0.1


def test_artifact_score_constant_image():
    assert artifact_score(np.full((64, 64), 2.5), 32, 64) == 0.0


def test_artifact_score_affine_invariance():
    rng = np.random.default_rng(3)
    img = rng.standard_normal((64, 64))
    base = artifact_score(img, 32, 64)
    assert artifact_score(3.7 * img - 11.0, 32, 64) == pytest.approx(base, rel=1e-9)


def test_artifact_score_validation():
    with pytest.raises(ValueError):
        artifact_score(np.zeros((64, 64)), 64, 64)


def test_eval_report_requires_finite():
    with pytest.raises(ValueError):
        EvalReport(policy={}, resolution=64, spectral_distance=np.nan,
                   artifact_score=0.0, sample_count=1, seed=0)


@pytest.fixture(scope="module")
def toy_model():
    cfg = ModelConfig(image_side=8, patch_size=2, d_model=32, heads=2, layers=1,
                      mlp_ratio=2, class_count=2)
    return Model(cfg, seed=0)


@pytest.fixture(scope="module")
def toy_reference():
    rng = np.random.default_rng(4)
    return radial_psd(rng.standard_normal((16, 16, 16)))


def _grid():
    return AblationGrid(test_side=16, steps=2, batch=1, class_id=0, band=(1.0, 6.0))


def test_ablation_row_counts(toy_model, toy_reference):
    seeds = [0, 1]
    rows = ablation_grid(toy_model, _grid(), seeds, toy_reference)
    dy_ntk = [r for r in rows if r[0] == "dy_ntk"]
    dy_yarn = [r for r in rows if r[0] == "dy_yarn"]
    assert len(dy_ntk) == 2 * 4 * 3 * len(seeds)
    assert len(dy_yarn) == 3 * len(seeds)
    assert len(rows[0]) == len(ABLATION_COLUMNS)


def test_ablation_single_cell_matches_direct_run(toy_model, toy_reference):
    grid = AblationGrid(test_side=16, steps=2, batch=1, class_id=0, band=(1.0, 6.0),
                        placements=("exponential",), lambda_ss=(2.0,), lambda_ts=(1.0,),
                        yarn_targets=())
    rows = ablation_grid(toy_model, grid, [5], toy_reference)
    assert len(rows) == 1
    from ropeflow.dynamic import PePolicy, ScaleSchedule
    from ropeflow.evalkit import sample_with_policy

    policy = PePolicy(kind="dy_ntk", ramp=grid.ramp,
                      schedule=ScaleSchedule(lambda_s=2.0, lambda_t=1.0))
    samples = sample_with_policy(toy_model, policy, 16, 5, 1, 2, 0)
    report = evaluate_samples(samples, toy_reference, (1.0, 6.0), 8, 5, policy)
    assert rows[0][-2] == report.spectral_distance
    assert rows[0][-1] == report.artifact_score


def test_ablation_deterministic(toy_model, toy_reference):
    a = ablation_grid(toy_model, _grid(), [0], toy_reference)
    b = ablation_grid(toy_model, _grid(), [0], toy_reference)
    assert a == b
