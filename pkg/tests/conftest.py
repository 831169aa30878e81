import numpy as np
import pytest

from fpalign.grids import make_grids


def random_smooth_state(grid, rng, sigma=1.0):
    """Strictly positive smooth phase-space density with mild x-structure."""
    x = grid.x.centers
    L = grid.x.length
    v = grid.v.centers

    def field(scale, lo=None):
        out = np.zeros_like(x)
        for k in (1, 2, 3):
            amp = scale * rng.uniform(-1.0, 1.0) / k
            out += amp * np.cos(2 * np.pi * k * x / L + rng.uniform(0, 2 * np.pi))
        return out

    rho = 1.0 + np.clip(field(0.45), -0.75, 0.75)
    u = field(0.25)
    temp = sigma * (1.0 + np.clip(field(0.15), -0.3, 0.3))
    f = (rho[:, None] / np.sqrt(2 * np.pi * temp[:, None])
         * np.exp(-((v[None, :] - u[:, None]) ** 2) / (2 * temp[:, None])))
    return f


@pytest.fixture(scope="session")
def corpus_grid():
    return make_grids(2 * np.pi, 48, 7.0, 64)


@pytest.fixture(scope="session")
def state_corpus(corpus_grid):
    """100 random smooth states used by the identity and inequality checks."""
    rng = np.random.default_rng(2024)
    return [random_smooth_state(corpus_grid, rng) for _ in range(100)]
