import numpy as np
import pytest

from rcsm.numerics import RngStream


@pytest.fixture
def rng():
    return RngStream(1234, 0)


def random_pd(rng, n, shift=0.1):
    g = rng.standard_cscg((n, n))
    return g @ g.conj().T + shift * np.eye(n)
