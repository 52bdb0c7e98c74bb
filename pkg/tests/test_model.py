import numpy as np
import pytest
from hypothesis import given, strategies as st

from sipfw import Discretization, DomainSpec, ModelParams, ParticleEnsemble, eta, rho


def test_rho_examples():
    assert rho(0.0) == 0.0
    assert rho(1.0) == 1.0
    assert rho(3.0) == pytest.approx(1.5, abs=0)


def test_eta_examples():
    assert eta(0.0) == 0.0
    assert eta(1.0) == 1.0
    assert eta(9.0) == pytest.approx(1.8, abs=1e-15)


def test_rho_eta_reject_negative():
    with pytest.raises(ValueError):
        rho(-1e-12)
    with pytest.raises(ValueError):
        eta(np.array([0.5, -0.1]))


@given(st.floats(min_value=0.0, max_value=1e12, allow_nan=False))
def test_rho_growth_factor_bound(w):
    # exactly the bound the per-step weight factor relies on
    assert -1.0 <= rho(w) - 1.0 <= 1.0


@given(st.floats(min_value=0.0, max_value=1e12, allow_nan=False))
def test_eta_bounded_by_two(u):
    assert 0.0 <= eta(u) <= 2.0


def test_rho_monotone():
    w = np.linspace(0.0, 50.0, 500)
    values = rho(w)
    assert (np.diff(values) > 0).all()
    assert values.max() < 2.0


def test_model_params_positive():
    with pytest.raises(ValueError, match="beta"):
        ModelParams(chi=0.4, d_u=0.01, d_m=0.01, d_w=0.01, alpha=5.0, beta=0.0, gamma=5.0)
    with pytest.raises(ValueError, match="chi"):
        ModelParams(chi=-0.4, d_u=0.01, d_m=0.01, d_w=0.01, alpha=5.0, beta=0.01, gamma=5.0)


def test_domain_spec_validation():
    dom = DomainSpec(dim=2, length=6.0)
    assert dom.origin == (0.0, 0.0)
    with pytest.raises(ValueError):
        DomainSpec(dim=4, length=1.0)
    with pytest.raises(ValueError):
        DomainSpec(dim=2, length=0.0)
    with pytest.raises(ValueError):
        DomainSpec(dim=3, length=1.0, origin=(0.0, 0.0))


def test_discretization_validation():
    with pytest.raises(ValueError):
        Discretization(h_modes=33, h0_cutoff=33, dt=1e-3, t_final=1.0, n_particles=10)
    with pytest.raises(ValueError):
        Discretization(h_modes=32, h0_cutoff=64, dt=1e-3, t_final=1.0, n_particles=10)
    with pytest.raises(ValueError):
        Discretization(h_modes=32, h0_cutoff=32, dt=0.6, t_final=1.0, n_particles=10)


def test_n_steps_ceiling():
    disc = Discretization(h_modes=32, h0_cutoff=32, dt=1e-3, t_final=0.1, n_particles=10)
    assert disc.n_steps == 100
    disc = Discretization(h_modes=32, h0_cutoff=32, dt=3e-3, t_final=0.01, n_particles=10)
    # 0.01/0.003 = 3.33 -> 4 steps, so n dt >= T > (n-1) dt
    assert disc.n_steps == 4
    assert disc.n_steps * disc.dt >= disc.t_final > (disc.n_steps - 1) * disc.dt


def test_particle_ensemble_validation(rng):
    pos = rng.random((10, 2))
    with pytest.raises(ValueError):
        ParticleEnsemble(pos, np.ones(9))
    with pytest.raises(ValueError):
        ParticleEnsemble(pos, -np.ones(10))
    ens = ParticleEnsemble(pos, np.ones(10))
    assert ens.count == 10 and ens.dim == 2 and ens.total_mass == 10.0
