import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from rotoscat import build_angular_bank, build_spatial_bank


@pytest.fixture(scope="session")
def bank32():
    """Spatial bank at the 32x32 working geometry (d=5, J=3, L=8)."""
    return build_spatial_bank(5, 3, 8)


@pytest.fixture(scope="session")
def abank8():
    return build_angular_bank(8, 2)


@pytest.fixture(scope="session")
def bank16():
    """Small bank for cheap exhaustive checks (d=4, J=2, L=4)."""
    return build_spatial_bank(4, 2, 4)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Directory-per-class corpus: three texture families, plus one
    excluded background directory and one corrupt file."""
    from PIL import Image

    root = tmp_path_factory.mktemp("corpus")
    gen = np.random.default_rng(99)
    u = np.arange(20)
    for name in ("grid", "horiz", "vert"):
        d = root / name
        d.mkdir()
        for i in range(10):
            if name == "horiz":
                im = 0.5 + 0.4 * np.sin(2 * np.pi * u[:, None] * 3 / 20)
            elif name == "vert":
                im = 0.5 + 0.4 * np.sin(2 * np.pi * u[None, :] * 3 / 20)
            else:
                im = 0.5 + 0.2 * np.sin(2 * np.pi * u[:, None] * 3 / 20) \
                    + 0.2 * np.sin(2 * np.pi * u[None, :] * 3 / 20)
            im = im + 0.05 * gen.standard_normal((20, 20))
            arr = (np.clip(im, 0, 1) * 255).astype(np.uint8)
            Image.fromarray(arr).convert("RGB").save(d / f"im{i:02d}.png")
    bg = root / "BACKGROUND_Google"
    bg.mkdir()
    Image.fromarray(np.zeros((8, 8), dtype=np.uint8)).save(bg / "x.png")
    (root / "grid" / "broken.png").write_bytes(b"no")
    return root
