import numpy as np
import pytest

from tpgraph import kernels

BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def chain_sigma(p, r):
    """Independent construction of r**|j-k|, used as the oracle input."""
    return np.array([[r ** abs(a - b) for b in range(p)] for a in range(p)], dtype=float)


def random_spd(rng, q):
    A = rng.standard_normal((q, q + 2))
    return A @ A.T + 0.1 * np.eye(q)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
