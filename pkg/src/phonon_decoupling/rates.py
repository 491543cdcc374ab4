"""Polariton scattering rates in the variational frame, Purcell formulas and
the light-matter coupling implied by a cavity mode volume."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as sc

from .bath import BathSpec, gauss_legendre, spectral_density
from .errors import DomainError, NumericalError
from .system import SystemParams
from .units import ps_to_mev
from .varpol import VariationalSolution

__all__ = [
    "RateBreakdown",
    "ModeVolumeParams",
    "variational_bath_correlations",
    "half_range_transform",
    "epsilon_contributions",
    "eps_zz_quadrature",
    "differential_polariton_rate",
    "purcell_quantities",
    "coupling_from_purcell_rate",
    "coupling_from_mode_volume",
]

SIGMAS = (0.1, 0.05, 0.025)


@dataclass(frozen=True)
class RateBreakdown:
    eps_zz: float
    eps_yy: float
    eps_zy: float
    gamma_a: float


@dataclass(frozen=True)
class ModeVolumeParams:
    """Inputs of the mode-volume estimate, SI units.

    ``mode_volume`` is in m^3 unless ``volume_in_lambda3`` is set, in which
    case it is a multiple of ``wavelength**3``.
    """

    dipole: float
    wavelength: float
    epsilon_r: float
    mode_volume: float
    volume_in_lambda3: bool = False

    def __post_init__(self):
        for name in ("dipole", "wavelength", "epsilon_r", "mode_volume"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def volume_m3(self):
        if self.volume_in_lambda3:
            return self.mode_volume * self.wavelength**3
        return self.mode_volume


def _phi(tau, sol):
    nu, w, F = sol.nu_grid, sol.weights, sol.F
    spec = sol.spec
    amp = w * spectral_density(nu, spec) * F**2 / nu**2
    ph = np.multiply.outer(np.asarray(tau, float), nu)
    return (np.cos(ph) * (amp * spec.coth(nu))).sum(-1) - 1j * (np.sin(ph) * amp).sum(-1)


def variational_bath_correlations(tau, sol: VariationalSolution, spec: BathSpec | None = None):
    """Variational-frame bath correlations at ``tau``.

    Returns ``(C_XX, C_YY, C_ZZ, C_YZ, C_ZY, phi)``; the pairs not listed
    vanish identically.
    """
    if spec is not None and spec != sol.spec:
        sol = _with_spec(sol, spec)
    spec = sol.spec
    tau = np.asarray(tau, float)
    nu, w, F = sol.nu_grid, sol.weights, sol.F
    J = spectral_density(nu, spec)
    coth = spec.coth(nu)
    ph = np.multiply.outer(tau, nu)
    c, s = np.cos(ph), np.sin(ph)
    phi = _phi(tau, sol)
    B2 = sol.B_v**2
    C_xx = 0.5 * B2 * (np.exp(phi) + np.exp(-phi) - 2.0)
    C_yy = B2 * np.sinh(phi)
    zz = w * J * (1 - F**2)
    C_zz = (c * (zz * coth)).sum(-1) - 1j * (s * zz).sum(-1)
    yz = w * J / nu * F * (1 - F)
    C_yz = -sol.B_v * (1j * (c * yz).sum(-1) + (s * (yz * coth)).sum(-1))
    return C_xx, C_yy, C_zz, C_yz, -C_yz, phi


def _with_spec(sol, spec):
    return replace(sol, spec=spec)


def half_range_transform(f, omega, kind, tau_max, n_nodes=2000, sigmas=SIGMAS, rtol=0.1):
    """``int_0^inf f(tau) {sin|cos}(omega tau) dtau`` for slowly decaying ``f``.

    The integrand is damped by ``exp(-sigma tau)`` for each ``sigma`` and the
    results are extrapolated quadratically to ``sigma = 0``. The quadratic
    and the two-point linear extrapolations must agree, otherwise the
    sequence is not in its asymptotic regime.
    """
    sig = np.asarray(sigmas, float)
    tau, w = gauss_legendre(n_nodes, 0.0, tau_max)
    trig = np.sin(omega * tau) if kind == "sin" else np.cos(omega * tau)
    base = w * f(tau) * trig
    vals = np.array([np.sum(base * np.exp(-s * tau)) for s in sig])
    extrap = float(np.polyfit(sig, vals, len(sig) - 1)[-1])
    lin = vals[-1] - sig[-1] * (vals[-1] - vals[-2]) / (sig[-1] - sig[-2])
    if abs(extrap - lin) > rtol * abs(extrap) + 1e-3 * np.max(np.abs(vals)):
        raise NumericalError(
            "convergence-factor extrapolation unstable",
            {"sigmas": sig.tolist(), "values": vals.tolist(), "extrapolated": extrap},
        )
    return extrap


def _tau_max(spec):
    return 20.0 / spec.xi


def eps_zz_quadrature(sol: VariationalSolution):
    """``eps_ZZ`` from its time-domain definition, for cross-checking."""

    def im_czz(t):
        return variational_bath_correlations(t, sol)[2].imag

    return -half_range_transform(im_czz, 2 * sol.g_v, "sin", _tau_max(sol.spec))


def epsilon_contributions(
    sol: VariationalSolution,
    spec: BathSpec | None = None,
    p: SystemParams | None = None,
    yy_method: str = "split",
):
    """Three contributions to the differential polariton scattering rate.

    ``eps_zz`` and ``eps_zy`` are evaluated in closed form at ``2 g_v``.
    ``eps_yy`` involves ``sinh(phi)``. With ``yy_method="split"`` the part
    linear in ``phi`` is integrated exactly and only ``sinh(phi) - phi`` goes
    through the damped time quadrature; ``"full"`` transforms ``sinh(phi)``
    directly. Only defined for a vanishing renormalised detuning.
    """
    if spec is not None and spec != sol.spec:
        sol = _with_spec(sol, spec)
    spec = sol.spec
    if abs(sol.delta_v) > 1e-9 * max(1.0, sol.g_v):
        raise DomainError("polariton rates need delta_v = 0 (use resonance mode)")
    g = p.g if p is not None else sol.g
    w0 = 2.0 * sol.g_v
    if w0 == 0 or spec.alpha == 0:
        return RateBreakdown(0.0, 0.0, 0.0, 0.0)
    J = float(spectral_density(w0, spec))
    F = float(sol.F_at(w0))
    eps_zz = 0.5 * np.pi * J * (1 - F**2)
    eps_zy = -np.pi * J * F * (1 - F)
    B2 = sol.B_v**2
    if yy_method == "full":
        linear = 0.0

        def im_cyy(t):
            return B2 * np.sinh(_phi(t, sol)).imag

    elif yy_method == "split":
        linear = -4.0 * g**2 * B2 * (-0.5 * np.pi * J * F**2 / w0**2)

        def im_cyy(t):
            ph = _phi(t, sol)
            return B2 * (np.sinh(ph) - ph).imag

    else:
        raise ValueError(f"unknown yy_method {yy_method!r}")
    eps_yy = linear - 4.0 * g**2 * half_range_transform(im_cyy, w0, "sin", _tau_max(spec))
    return RateBreakdown(eps_zz, eps_yy, eps_zy, eps_zz + eps_yy + eps_zy)


def differential_polariton_rate(sol: VariationalSolution, spec: BathSpec | None = None, p: SystemParams | None = None):
    """Return ``(Gamma_A, eps_ZZ)``: the full differential rate and its dominant term."""
    r = epsilon_contributions(sol, spec, p)
    return r.gamma_a, r.eps_zz


def purcell_quantities(p: SystemParams):
    """``(Gamma, eta_purcell, g_from_Gamma)`` with ``Gamma = 4 g^2 / (kappa + gamma*)``."""
    if not p.kappa > 0:
        raise DomainError("kappa must be positive")
    width = p.kappa + p.gamma_star
    Gamma = 4.0 * p.g**2 / width
    eta = Gamma / (Gamma + p.gamma) if Gamma + p.gamma > 0 else 0.0
    return Gamma, eta, coupling_from_purcell_rate(Gamma, width)


def coupling_from_purcell_rate(Gamma_P, kappa):
    """Invert ``Gamma_P = 4 g^2 / kappa``."""
    if not kappa > 0 or Gamma_P < 0:
        raise DomainError("need kappa > 0 and Gamma_P >= 0")
    return float(np.sqrt(Gamma_P * kappa / 4.0))


def coupling_from_mode_volume(mv: ModeVolumeParams):
    """Return ``(g_ps, hbar_g_meV)`` for a dipole in a cavity of volume V."""
    omega = 2 * np.pi * sc.c / mv.wavelength
    g = np.sqrt(mv.dipole**2 * omega / (2 * sc.hbar * sc.epsilon_0 * mv.epsilon_r * mv.volume_m3))
    g_ps = g * 1e-12
    return float(g_ps), float(ps_to_mev(g_ps))
