import numpy as np
import pytest

from hdmean import TwoSampleProblem


@pytest.fixture
def make_problem():
    """Factory for small Gaussian two-sample problems."""

    def _make(seed=0, n_x=8, n_y=8, p=5, shift=0.0):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n_x, p)) + shift
        y = rng.standard_normal((n_y, p))
        return TwoSampleProblem(x, y)

    return _make
