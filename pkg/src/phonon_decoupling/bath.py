"""Superohmic phonon bath: spectral density, correlation function, memory kernel.

Conventions
-----------
hbar = k_B = 1, frequencies in ps^-1, times in ps. The spectral density is
normalised so that ``J(nu) = sum_k g_k^2 delta(nu - nu_k)``, which makes

    C(tau) = int_0^inf J(nu) [coth(beta nu / 2) cos(nu tau) - i sin(nu tau)] dnu

and the Franck-Condon factor ``exp(-1/2 int J/nu^2 coth)`` mutually
consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError, NumericalError
from .units import kelvin_to_energy

__all__ = [
    "BathSpec",
    "MemoryKernel",
    "gauss_legendre",
    "spectral_density",
    "bose_occupation",
    "bath_correlation",
    "memory_kernel",
    "memory_steps_for",
    "pure_dephasing_rate",
]


@lru_cache(maxsize=16)
def _leggauss(n):
    x, w = roots_legendre(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n, a, b):
    """Gauss-Legendre nodes and weights mapped onto ``[a, b]``."""
    x, w = _leggauss(int(n))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (b + a), half * w


@dataclass(frozen=True)
class BathSpec:
    """Parameters of the superohmic bath.

    Parameters
    ----------
    alpha : float
        Coupling strength in ps^2.
    xi : float
        Cutoff frequency in ps^-1.
    temperature : float
        Kelvin.
    mu : float
        Virtual phonon scattering strength (ps^2) entering the dephasing rate.
    nu_max : float, optional
        Upper limit of all frequency quadratures, defaults to ``8 xi``.
    n_quad : int
        Number of Gauss-Legendre nodes.
    """

    alpha: float = 0.025
    xi: float = 2.23
    temperature: float = 4.0
    mu: float = 0.023
    nu_max: float | None = None
    n_quad: int = 2000

    def __post_init__(self):
        bad = []
        if not self.alpha >= 0:
            bad.append(f"alpha must be >= 0, got {self.alpha}")
        if not self.xi > 0:
            bad.append(f"xi must be > 0, got {self.xi}")
        if not self.temperature >= 0:
            bad.append(f"temperature must be >= 0, got {self.temperature}")
        if not self.mu >= 0:
            bad.append(f"mu must be >= 0, got {self.mu}")
        if int(self.n_quad) < 2:
            bad.append("n_quad must be at least 2")
        if self.nu_max is None:
            object.__setattr__(self, "nu_max", 8.0 * self.xi if self.xi > 0 else 0.0)
        elif self.xi > 0 and self.nu_max < 5.0 * self.xi:
            bad.append(f"nu_max must be >= 5 xi, got {self.nu_max}")
        if bad:
            raise DomainError("; ".join(bad))

    @property
    def beta(self):
        """Inverse temperature in ps (``inf`` at T = 0)."""
        kt = kelvin_to_energy(self.temperature)
        return np.inf if kt == 0 else 1.0 / kt

    @cached_property
    def nodes(self):
        return gauss_legendre(self.n_quad, 0.0, self.nu_max)

    def coth(self, nu):
        """coth(beta nu / 2), equal to 1 at zero temperature."""
        nu = np.asarray(nu, dtype=float)
        if self.temperature == 0:
            return np.ones_like(nu)
        return 1.0 / np.tanh(0.5 * self.beta * nu)


@dataclass
class MemoryKernel:
    dt: float
    eta: np.ndarray = field(repr=False)

    @property
    def K_mem(self):
        return len(self.eta) - 1


def spectral_density(nu, spec: BathSpec):
    """``J(nu) = alpha nu^3 exp(-(nu/xi)^2)`` in ps^-1."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise DomainError("spectral density is defined for nu >= 0")
    return spec.alpha * nu**3 * np.exp(-((nu / spec.xi) ** 2))


def bose_occupation(nu, temperature):
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise DomainError("Bose occupation needs nu > 0")
    if temperature == 0:
        return np.zeros_like(nu)
    x = nu / kelvin_to_energy(temperature)
    return 1.0 / np.expm1(x)


def _correlation(tau, spec, nu, w):
    J = spectral_density(nu, spec)
    ph = np.multiply.outer(tau, nu)
    return (w * J * (spec.coth(nu) * np.cos(ph) - 1j * np.sin(ph))).sum(-1)


def bath_correlation(tau, spec: BathSpec, rtol=1e-8):
    """Bath correlation function C(tau) in ps^-2.

    Evaluated with the fixed Gauss-Legendre rule of ``spec``; the same
    integral on half as many nodes serves as an error estimate.
    """
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise DomainError("tau must be finite")
    nu, w = spec.nodes
    c = _correlation(tau, spec, nu, w)
    nu2, w2 = gauss_legendre(max(spec.n_quad // 2, 2), 0.0, spec.nu_max)
    c2 = _correlation(tau, spec, nu2, w2)
    scale = abs(_correlation(np.array(0.0), spec, nu, w)) or 1.0
    err = np.max(np.abs(c - c2)) / scale
    if err > rtol:
        raise NumericalError(
            "bath correlation quadrature not converged",
            {"estimated_error": float(err), "n_quad": spec.n_quad},
        )
    return c


def memory_kernel(dt, k_max, spec: BathSpec) -> MemoryKernel:
    """Discretised memory kernel eta_0 ... eta_{k_max}.

    The two time integrations over each pair of steps are done in closed
    form, leaving a single frequency integral per element.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    if int(k_max) < 1:
        raise DomainError("k_max must be >= 1")
    nu, w = spec.nodes
    wJ = w * spectral_density(nu, spec)
    coth = spec.coth(nu)
    x = nu * dt
    # lag 0: triangle t' < t inside one step
    e0 = np.sum(wJ * (coth * (1 - np.cos(x)) - 1j * (x - np.sin(x))) / nu**2)
    box = 4.0 * np.sin(0.5 * x) ** 2 / nu**2
    k = np.arange(1, int(k_max) + 1)
    ph = np.multiply.outer(k * dt, nu)
    ek = (np.cos(ph) * (wJ * box * coth)).sum(1) - 1j * (np.sin(ph) * (wJ * box)).sum(1)
    eta = np.concatenate([[e0], ek])
    if not np.all(np.isfinite(eta)):
        raise NumericalError("non-finite memory kernel", {"dt": dt})
    return MemoryKernel(dt=float(dt), eta=eta)


def memory_steps_for(dt, spec: BathSpec, tol=1e-7, t_cap=40.0):
    """Smallest memory length with |eta_k|/|eta_0| < tol for every longer lag.

    The search is limited to ``t_cap`` ps; at zero temperature the kernel
    tail is algebraic and the cap usually decides.
    """
    kmax = max(int(np.ceil(t_cap / dt)), 1)
    eta = memory_kernel(dt, kmax, spec).eta
    if abs(eta[0]) == 0:
        return 1
    above = np.nonzero(np.abs(eta) / abs(eta[0]) >= tol)[0]
    return int(min(max(above[-1], 1), kmax))


def pure_dephasing_rate(spec: BathSpec):
    """Phonon-induced pure dephasing rate gamma*(T) in ps^-1."""
    if spec.temperature == 0 or spec.alpha == 0 or spec.mu == 0:
        return 0.0
    nu, w = spec.nodes
    half = 0.5 * nu / kelvin_to_energy(spec.temperature)
    # n_B (n_B + 1) = 1 / (4 sinh^2(beta nu / 2))
    with np.errstate(over="ignore"):
        occ = 0.25 / np.sinh(half) ** 2
    integrand = nu**10 * np.exp(-2 * (nu / spec.xi) ** 2) * occ
    return float(spec.alpha**2 * spec.mu / spec.xi**4 * np.sum(w * integrand))
