"""Variational polaron transformation.

The displacement of each phonon mode is ``f_k = g_k F(nu_k)``. ``F`` is the
self-consistent stationary point of the Feynman-Bogoliubov bound restricted
to the vacuum and single-excitation sector of the exciton-cavity system.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bath import BathSpec, gauss_legendre, spectral_density
from .errors import DomainError, NumericalError
from .system import SystemParams

__all__ = [
    "VariationalSolution",
    "VarpolOptions",
    "frequency_grid",
    "renormalization_factors",
    "displacement_rhs",
    "free_energy_of",
    "free_energy_bound",
    "solve_variational_displacement",
    "resonance_condition",
]


@dataclass(frozen=True)
class VarpolOptions:
    n_nodes: int = 400
    mixing: float = 0.5
    tol: float = 1e-10
    max_iter: int = 10_000


@dataclass
class VariationalSolution:
    nu_grid: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    B_v: float
    R_v: float
    g_v: float
    delta: float
    delta_v: float
    eta_v: float
    free_energy: float
    iterations: int
    residual: float
    spec: BathSpec = field(repr=False)
    g: float = 0.0
    resonance_mode: bool = False
    seed: str = ""

    def F_at(self, nu):
        """Displacement function at arbitrary frequencies.

        Uses the right-hand side of the self-consistency condition with the
        converged renormalised parameters, which equals ``F`` on the grid.
        """
        return displacement_rhs(np.asarray(nu, float), self.g_v, self.delta_v, self.spec)


def frequency_grid(spec: BathSpec, n_nodes=400):
    return gauss_legendre(n_nodes, 0.0, 8.0 * spec.xi)


def renormalization_factors(F, spec: BathSpec, nu=None, weights=None):
    """Return ``(B_v, R_v)`` for a displacement function sampled on the grid."""
    if nu is None:
        nu, weights = frequency_grid(spec, len(F))
    F = np.asarray(F, float)
    if np.any(F < -1e-12) or np.any(F > 1 + 1e-12):
        raise DomainError("F must lie in [0, 1]")
    J = spectral_density(nu, spec)
    B = np.exp(-0.5 * np.sum(weights * J * F**2 / nu**2 * spec.coth(nu)))
    R = np.sum(weights * J / nu * F * (F - 2.0))
    return float(B), float(R)


def _one_minus_ct(g_v, delta_v, eta_v, beta):
    """``1 - (delta_v/eta_v) tanh(beta eta_v / 2)`` without cancellation."""
    t = 1.0 if np.isinf(beta) else np.tanh(0.5 * beta * eta_v)
    if delta_v > 0:
        one_minus_c = 4.0 * g_v**2 / (eta_v * (eta_v + delta_v))
        return (1.0 - t) + t * one_minus_c, t
    return 1.0 - (delta_v / eta_v) * t, t


def displacement_rhs(nu, g_v, delta_v, spec: BathSpec):
    """Right-hand side of the self-consistency condition for ``F(nu)``.

    Written as ``a / (a + b(nu))`` with ``a, b >= 0`` so that the result is
    automatically in ``[0, 1]``.
    """
    nu = np.asarray(nu, float)
    beta = spec.beta
    eta_v = np.hypot(2.0 * g_v, delta_v)
    if g_v == 0:
        if delta_v > 0 and np.isinf(beta):
            return nu / (nu + delta_v)
        return np.ones_like(nu)
    a, t = _one_minus_ct(g_v, delta_v, eta_v, beta)
    b = 2.0 * g_v**2 * t * spec.coth(nu) / (nu * eta_v)
    return a / (a + b)


def _log_partition(eta_v, beta):
    """``(1/beta) ln(2 cosh(beta eta_v / 2))`` including the T = 0 limit."""
    if np.isinf(beta):
        return 0.5 * eta_v
    x = 0.5 * beta * eta_v
    return (x + np.log1p(np.exp(-2.0 * x))) / beta


def free_energy_of(F, spec: BathSpec, p: SystemParams, resonance_mode=False, nu=None, weights=None):
    """Free-energy bound of a trial ``F`` up to F-independent constants.

    With the thermal energy well below the cavity frequency the truncated
    partition sum reduces to ``R_v/2 - (1/beta) ln 2cosh(beta eta_v/2)``.
    In resonance mode the trial is evaluated at its own resonance,
    ``delta = -R_v``.
    """
    B, R = renormalization_factors(F, spec, nu, weights)
    delta_v = 0.0 if resonance_mode else p.delta + R
    eta_v = np.hypot(2.0 * p.g * B, delta_v)
    return 0.5 * R - _log_partition(eta_v, spec.beta)


def free_energy_bound(sol: VariationalSolution, p: SystemParams, temperature=None):
    spec = sol.spec if temperature is None else replace(sol.spec, temperature=temperature)
    return float(free_energy_of(sol.F, spec, p, sol.resonance_mode, sol.nu_grid, sol.weights))


def _iterate(F0, spec, p, resonance_mode, nu, w, opts):
    F = F0.copy()
    B, R = renormalization_factors(F, spec, nu, w)
    history = []
    for it in range(1, opts.max_iter + 1):
        delta_v = 0.0 if resonance_mode else p.delta + R
        target = displacement_rhs(nu, p.g * B, delta_v, spec)
        F_new = np.clip((1 - opts.mixing) * F + opts.mixing * target, 0.0, 1.0)
        B_new, R_new = renormalization_factors(F_new, spec, nu, w)
        res = max(np.max(np.abs(F_new - F)), abs(B_new - B))
        history.append(res)
        F, B, R = F_new, B_new, R_new
        if res < opts.tol:
            return F, B, R, it, history
    raise NumericalError(
        "variational fixed point did not converge",
        {"residual_history": history[-50:], "iterations": opts.max_iter},
    )


def solve_variational_displacement(
    spec: BathSpec, p: SystemParams, resonance_mode=False, options: VarpolOptions = VarpolOptions()
) -> VariationalSolution:
    """Self-consistent variational displacement function.

    Two seeds, ``F = 1`` (full polaron) and ``F = 0`` (no displacement), are
    iterated with linear mixing. Of the converged fixed points the one with
    the lowest free-energy bound is returned. In resonance mode the detuning
    is slaved to ``delta = -R_v`` so the renormalised detuning vanishes.
    """
    if not p.g >= 0:
        raise DomainError("g must be >= 0")
    nu, w = frequency_grid(spec, options.n_nodes)
    candidates = []
    failures = {}
    for name, F0 in (("ones", np.ones_like(nu)), ("zeros", np.zeros_like(nu))):
        try:
            F, B, R, it, hist = _iterate(F0, spec, p, resonance_mode, nu, w, options)
        except NumericalError as exc:
            failures[name] = exc.diagnostics
            continue
        A = free_energy_of(F, spec, p, resonance_mode, nu, w)
        candidates.append((A, name, F, B, R, it, hist[-1]))
    if not candidates:
        raise NumericalError("no variational seed converged", failures)
    A, name, F, B, R, it, res = min(candidates, key=lambda c: c[0])
    delta = -R if resonance_mode else p.delta
    delta_v = delta + R
    g_v = p.g * B
    return VariationalSolution(
        nu_grid=nu,
        weights=w,
        F=F,
        B_v=B,
        R_v=R,
        g_v=g_v,
        delta=delta,
        delta_v=delta_v,
        eta_v=float(np.hypot(2 * g_v, delta_v)),
        free_energy=float(A),
        iterations=it,
        residual=float(res),
        spec=spec,
        g=p.g,
        resonance_mode=resonance_mode,
        seed=name,
    )


def resonance_condition(spec: BathSpec, p: SystemParams, options: VarpolOptions = VarpolOptions()):
    """Lab detuning ``delta = -R_v`` placing the cavity on the polaron-shifted exciton."""
    if spec.alpha == 0:
        return 0.0
    return solve_variational_displacement(spec, p, True, options).delta
