import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lamplan.volume import LandmarkSet, Volume


@pytest.fixture
def worked_landmarks():
    """Hand-checkable landmark fixture (frame axes fall on world axes)."""
    return LandmarkSet(
        {
            "A": [0.0, 30.0, 0.0],
            "B": [0.0, 0.0, 0.0],
            "C": [-10.0, -2.0, 1.0],
            "D": [-12.0, -2.0, -4.0],
            "E": [12.0, -2.0, -4.0],
            "F": [10.0, -2.0, 1.0],
            "G": [0.0, 1.0, -12.0],
        }
    )


@pytest.fixture
def small_volume():
    rng = np.random.default_rng(42)
    vox = rng.uniform(-500, 900, size=(12, 10, 8)).astype(np.float32)
    return Volume(vox, (1.5, 2.0, 1.0), (-4.0, 3.0, 7.5))


def random_rotation(rng) -> np.ndarray:
    """Uniform-ish random rotation matrix via QR."""
    m = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
