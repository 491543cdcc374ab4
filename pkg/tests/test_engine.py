import numpy as np
import pytest

from oracles import lindblad_oracle
from phonon_decoupling.bath import BathSpec, memory_kernel
from phonon_decoupling.engine import EngineOptions, photon_population, simulate
from phonon_decoupling.errors import DomainError, ResourceError, UsageError
from phonon_decoupling.ptensor import build_process_tensor
from phonon_decoupling.system import SystemParams

P = SystemParams(delta=0.2, g=0.7, kappa=1.0, gamma=0.02, gamma_star=0.03)


@pytest.mark.parametrize(
    "kw",
    [dict(dt=0.0), dict(dt=0.1, t_max=0.05), dict(svd_cutoff=1.0), dict(memory_tolerance=0.0)],
)
def test_options_are_validated(kw):
    with pytest.raises(DomainError):
        EngineOptions(**kw)


def test_steps_round_to_the_grid():
    assert EngineOptions(dt=0.05, t_max=1.0).steps == 20
    assert EngineOptions(dt=0.3, t_max=1.0).steps == 3


def test_phonon_free_simulation_matches_lindblad():
    opts = EngineOptions(dt=0.05, t_max=10.0)
    res = simulate(BathSpec(alpha=0.0), P, opts)
    states, G = lindblad_oracle(P.delta, P.g, P.kappa, P.gamma, P.gamma_star, opts.dt, opts.steps)
    assert np.abs(res.states - states).max() < 1e-8
    assert np.abs(res.grid.G - G).max() < 1e-6
    assert res.max_bond == 1
    assert np.allclose(res.times, opts.dt * np.arange(opts.steps + 1))


def test_photon_population_reads_the_cavity_level():
    states = np.zeros((2, 3, 3), complex)
    states[0, 1, 1] = 0.25
    states[1, 2, 2] = 1.0
    assert np.allclose(photon_population(states), [0.25, 0.0])


def test_phonons_slow_the_exciton_to_photon_transfer():
    opts = EngineOptions(dt=0.1, t_max=6.0, svd_cutoff=1e-6)
    bare = simulate(BathSpec(alpha=0.0), P, opts, grid=False)
    warm = simulate(BathSpec(temperature=50.0), P, opts, grid=False)
    assert bare.grid is None
    # phonons renormalise the coupling, so the first photon maximum is lower
    assert warm.photon_population[:20].max() < bare.photon_population[:20].max()
    assert warm.max_bond > 1


def test_prebuilt_tensor_must_share_the_timestep():
    pt = build_process_tensor(memory_kernel(0.1, 5, BathSpec(alpha=0.0)), steps=20)
    with pytest.raises(UsageError):
        simulate(BathSpec(alpha=0.0), P, EngineOptions(dt=0.05, t_max=1.0), pt=pt)
    res = simulate(BathSpec(alpha=0.0), P, EngineOptions(dt=0.1, t_max=2.0), pt=pt)
    assert res.process_tensor is pt


def test_bond_cap_is_enforced():
    with pytest.raises(ResourceError):
        simulate(BathSpec(), P, EngineOptions(dt=0.1, t_max=2.0, svd_cutoff=1e-12, max_bond=2))
