import json
from pathlib import Path

import numpy as np
import pytest

from ropeflow import dataggen
from ropeflow.tinydit import load_checkpoint

REPO_ROOT = Path(__file__).resolve().parent.parent
ASSETS = REPO_ROOT / "assets" / "reference"


@pytest.fixture(scope="session")
def reference_eval_protocol():
    path = ASSETS / "eval.json"
    if not path.exists():
        pytest.fail(f"missing {path}; regenerate with scripts/make_reference.py")
    return json.loads(path.read_text())


@pytest.fixture(scope="session")
def reference_checkpoint():
    path = ASSETS / "model.ckpt"
    if not path.exists():
        pytest.fail(f"missing {path}; regenerate with scripts/make_reference.py")
    return load_checkpoint(path)


@pytest.fixture(scope="session")
def power_law_batch_64():
    """256 unit-variance power-law fields (omega=2) at side 64."""
    spec = dataggen.DatasetSpec(
        kind="power_law_field", side=64, count=256, seed=2024, params={"omega": 2.0}
    )
    images, _ = dataggen.generate(spec)
    return images


@pytest.fixture(scope="session")
def white_noise_for_batch_64(power_law_batch_64):
    """Per-image unit noise paired with power_law_batch_64."""
    noise = np.empty_like(power_law_batch_64)
    for i in range(noise.shape[0]):
        rng = np.random.default_rng(np.random.SeedSequence([777, i]))
        noise[i] = rng.standard_normal(noise.shape[1:])
    return noise
