import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from magelastic.algebra import Metric
from magelastic.mesh import generate_box_mesh

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def spd(rng, n=None, low=0.5, high=2.0):
    shape = () if n is None else (n,)
    Q, _ = np.linalg.qr(rng.normal(size=shape + (3, 3)))
    lam = rng.uniform(low, high, size=shape + (3,))
    return np.einsum("...ij,...j,...kj->...ik", Q, lam, Q)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def metric(rng):
    return Metric(spd(rng))


@pytest.fixture(scope="session")
def cube4():
    return generate_box_mesh(divisions=(4, 4, 4))


@pytest.fixture(scope="session")
def jittered4():
    return generate_box_mesh(divisions=(4, 4, 4), jitter=0.2, seed=7)


@pytest.fixture(scope="session")
def unit_tet_mesh():
    from magelastic.mesh import SimplicialMesh
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    return SimplicialMesh(V, np.array([[0, 1, 2, 3]]))
