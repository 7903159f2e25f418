import numpy as np
import pytest

from dynens import SynthModelSpec, SynthWorldSpec, generate_bundle, write_bundle


@pytest.fixture
def small_world():
    return SynthWorldSpec(
        num_classes=4,
        n_train=200,
        n_val=150,
        n_test=300,
        class_priors=(0.25, 0.25, 0.25, 0.25),
        rho=0.2,
        seed=5,
    )


@pytest.fixture
def small_models():
    return [
        SynthModelSpec("mobile", 417284, a0=0.55, a_inf=0.92, tau=4.0, gamma=0.7, kappa=0.3),
        SynthModelSpec("nas", 174420, a0=0.50, a_inf=0.90, tau=4.0, gamma=0.7, kappa=0.3),
        SynthModelSpec("incept", 402308, a0=0.45, a_inf=0.86, tau=5.0, gamma=0.7, kappa=0.3),
    ]


@pytest.fixture
def small_bundle(small_world, small_models):
    return generate_bundle(small_world, small_models, epochs=6)


@pytest.fixture
def bundle_dir(tmp_path, small_bundle):
    return write_bundle(small_bundle, tmp_path / "bundle")


def random_prob_rows(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Generic probability rows: normalized positive uniforms."""
    raw = rng.random((n, k)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)
