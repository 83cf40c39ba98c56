import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fcov import FunctionalSample, GridDomain, fourier_basis


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_basis_sample(rng, n=60, rank=4, grid=101, sigmas=None):
    """Sample lying exactly in the span of the first ``rank`` basis curves."""
    dom = GridDomain.uniform(grid)
    basis = fourier_basis(rank, dom.points)
    if sigmas is None:
        sigmas = 1.0 / np.arange(1, rank + 1)
    coef = rng.standard_normal((n, rank)) * np.asarray(sigmas)
    return FunctionalSample(coef @ basis.T, dom), coef


@pytest.fixture
def basis_sample(rng):
    return make_basis_sample(rng)
