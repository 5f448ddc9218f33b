from __future__ import annotations

import numpy as np
import pytest

from segray.geometry import disc, ellipse
from segray.pde import build_operator, eigen_smallest, solve_1d_model


@pytest.fixture(scope="session")
def unit_disc():
    return disc(1.0)


@pytest.fixture(scope="session")
def ellipse21():
    return ellipse((2.0, 1.0))


@pytest.fixture(scope="session")
def disc_eigen_coarse(unit_disc):
    """First Dirichlet eigenpair of the unit disc at h = 0.02."""
    return eigen_smallest(build_operator(unit_disc, None, 0.02))


@pytest.fixture(scope="session")
def model_eigen_unit():
    """1D eigen model on [-1, 1] with zero potential."""
    return solve_1d_model(None, 1.0, mode="eigen", n_nodes=2001)


def random_disc_pairs(count, seed=0, radius=0.9, min_r=0.1):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a = rng.uniform(-radius, radius, size=(2, 2))
        if np.all(np.sum(a ** 2, axis=1) < radius ** 2) and \
                np.linalg.norm(a[1] - a[0]) > min_r:
            out.append((a[0], a[1]))
    return out
