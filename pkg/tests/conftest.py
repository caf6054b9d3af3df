import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for tests.oracles imports

from netsynth.geometry import GridRegion


def random_region(rng, width, height, cell_size=1.0, n_occupied=None, extent=None):
    """Random occupancy region; keeps at least one open cell."""
    total = width * height
    if n_occupied is None:
        n_occupied = int(round((extent or 0.0) * total))
    n_occupied = min(n_occupied, total - 1)
    occ = np.zeros(total, dtype=bool)
    occ[rng.choice(total, size=n_occupied, replace=False)] = True
    return GridRegion(width, height, cell_size, occ.reshape(height, width))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
