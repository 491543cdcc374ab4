import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonon_decoupling.bath import BathSpec
from phonon_decoupling.errors import DomainError, NumericalError
from phonon_decoupling.system import SystemParams
from phonon_decoupling.varpol import (
    VarpolOptions,
    _iterate,
    displacement_rhs,
    free_energy_bound,
    free_energy_of,
    frequency_grid,
    renormalization_factors,
    resonance_condition,
    solve_variational_displacement,
)

ALPHA, XI = 0.025, 2.23
COLD = BathSpec(alpha=ALPHA, xi=XI, temperature=0.0)
WARM = BathSpec(alpha=ALPHA, xi=XI, temperature=4.0)


def test_zero_coupling_limit_is_the_full_polaron():
    sol = solve_variational_displacement(COLD, SystemParams(g=1e-6))
    assert np.allclose(sol.F, 1.0, atol=1e-6)
    assert sol.B_v == pytest.approx(np.exp(-ALPHA * XI**2 / 4), abs=1e-3)
    assert sol.B_v == pytest.approx(0.9694, abs=1e-3)


@settings(max_examples=10)
@given(g=st.floats(0.05, 12.0))
def test_resonant_zero_temperature_fixed_point_has_closed_form(g):
    sol = solve_variational_displacement(COLD, SystemParams(g=g), resonance_mode=True)
    assert sol.delta_v == pytest.approx(0.0, abs=1e-12)
    nu = sol.nu_grid
    assert np.abs(sol.F - nu / (nu + sol.g_v)).max() < 1e-6


def test_renormalization_factors_of_trivial_displacements():
    B, R = renormalization_factors(np.zeros(400), COLD)
    assert (B, R) == (1.0, 0.0)
    B, R = renormalization_factors(np.ones(400), COLD)
    assert B == pytest.approx(np.exp(-ALPHA * XI**2 / 4), rel=1e-10)
    assert R == pytest.approx(-ALPHA * XI**3 * np.sqrt(np.pi) / 4, rel=1e-10)
    assert R == pytest.approx(-0.1229, abs=1e-4)


def test_renormalization_factors_reject_out_of_range_displacement():
    with pytest.raises(DomainError):
        renormalization_factors(np.full(400, 1.5), COLD)


@settings(max_examples=20)
@given(seed=st.integers(0, 2**32 - 1))
def test_b_v_falls_with_temperature_for_any_displacement(seed):
    F = np.random.default_rng(seed).uniform(0, 1, 400)
    Bs = [renormalization_factors(F, BathSpec(temperature=T))[0] for T in (0.0, 10.0, 50.0)]
    assert Bs[0] > Bs[1] > Bs[2]


def test_b_v_rises_monotonically_with_coupling():
    gs = np.linspace(0.0, 12.0, 20)
    B = [solve_variational_displacement(WARM, SystemParams(g=g), resonance_mode=True).B_v for g in gs]
    assert np.all(np.diff(B) > 0)
    B10 = solve_variational_displacement(WARM, SystemParams(g=10.0), resonance_mode=True).B_v
    assert B10 > 0.99


@settings(max_examples=25)
@given(
    g=st.floats(0.0, 12.0),
    delta=st.floats(-3.0, 3.0),
    T=st.sampled_from([0.0, 4.0, 50.0, 150.0]),
    resonance=st.booleans(),
)
def test_solution_invariants(g, delta, T, resonance):
    spec = BathSpec(temperature=T)
    sol = solve_variational_displacement(spec, SystemParams(delta=delta, g=g), resonance_mode=resonance)
    assert np.all((sol.F >= 0) & (sol.F <= 1))
    assert sol.R_v <= 0
    assert 0 < sol.B_v <= 1
    assert sol.residual < VarpolOptions().tol
    assert sol.g_v == pytest.approx(g * sol.B_v)
    assert sol.delta_v == pytest.approx(sol.delta + sol.R_v)
    assert sol.eta_v == pytest.approx(np.hypot(2 * sol.g_v, sol.delta_v))
    # the converged F reproduces itself under the self-consistency map
    rhs = displacement_rhs(sol.nu_grid, sol.g_v, sol.delta_v, spec)
    assert np.abs(rhs - sol.F).max() < 1e-8


def test_converged_displacement_minimises_the_bound():
    p = SystemParams(g=1.5)
    sol = solve_variational_displacement(WARM, p, resonance_mode=True)
    A0 = free_energy_bound(sol, p)
    rng = np.random.default_rng(7)
    for _ in range(10):
        direction = rng.normal(size=sol.F.size)
        trial = np.clip(sol.F * (1 + 0.01 * direction / np.abs(direction).max()), 0, 1)
        A = free_energy_of(trial, WARM, p, True, sol.nu_grid, sol.weights)
        assert A0 <= A + 1e-14


def test_bound_without_coupling_depends_on_displacement_only_through_r_v():
    p = SystemParams(delta=0.4, g=0.0)
    nu, w = frequency_grid(WARM)
    for F in (np.zeros_like(nu), np.ones_like(nu), nu / (nu + 1.0)):
        _, R = renormalization_factors(F, WARM, nu, w)
        dv = abs(p.delta + R)
        x = 0.5 * WARM.beta * dv
        expected = 0.5 * R - (x + np.log1p(np.exp(-2 * x))) / WARM.beta
        assert free_energy_of(F, WARM, p, False, nu, w) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("g", [0.8, 1.1, 1.4, 2.0])
def test_selected_seed_has_the_lowest_bound(g):
    p = SystemParams(g=g)
    nu, w = frequency_grid(WARM)
    opts = VarpolOptions()
    sol = solve_variational_displacement(WARM, p, resonance_mode=True)
    for F0 in (np.ones_like(nu), np.zeros_like(nu)):
        F = _iterate(F0, WARM, p, True, nu, w, opts)[0]
        assert sol.free_energy <= free_energy_of(F, WARM, p, True, nu, w) + 1e-14


def test_resonance_condition():
    assert resonance_condition(BathSpec(alpha=0.0), SystemParams(g=1.0)) == 0.0
    small = resonance_condition(COLD, SystemParams(g=1e-6))
    assert small == pytest.approx(ALPHA * XI**3 * np.sqrt(np.pi) / 4, rel=1e-4)
    large = resonance_condition(COLD, SystemParams(g=10.0))
    assert 0 < large < small


def test_non_convergence_reports_residual_history():
    with pytest.raises(NumericalError) as info:
        solve_variational_displacement(WARM, SystemParams(g=1.0), options=VarpolOptions(max_iter=2))
    diag = info.value.diagnostics
    assert all("residual_history" in d for d in diag.values())


def test_negative_coupling_is_rejected():
    with pytest.raises(DomainError):
        solve_variational_displacement(WARM, SystemParams(g=-1.0))
