import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """Three tinted-noise classes, 30 images each (90 total)."""
    root = tmp_path_factory.mktemp("leaves")
    rng = np.random.default_rng(0)
    tints = {"healthy": (40, 160, 40), "rust": (150, 90, 30), "blight": (90, 90, 110)}
    for name, tint in tints.items():
        d = root / name
        d.mkdir()
        for i in range(30):
            noise = rng.integers(0, 120, size=(48, 48, 3))
            img = np.clip(np.array(tint)[None, None, :] + noise, 0, 255).astype("uint8")
            Image.fromarray(img).save(d / f"img_{i:03d}.png")
    return root
