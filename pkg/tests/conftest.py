import numpy as np
import pytest

from sipfw import Discretization, DomainSpec, ModelParams


@pytest.fixture
def bench_params():
    return ModelParams(chi=0.4, d_u=0.01, d_m=0.01, d_w=0.01, alpha=5.0, beta=0.01, gamma=5.0)


@pytest.fixture
def box2d():
    return DomainSpec(dim=2, length=6.0)


@pytest.fixture
def box3d():
    return DomainSpec(dim=3, length=6.0)


def make_disc(h=32, h0=None, dt=1e-3, t_final=0.01, particles=1024):
    return Discretization(
        h_modes=h, h0_cutoff=h if h0 is None else h0, dt=dt, t_final=t_final, n_particles=particles
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
