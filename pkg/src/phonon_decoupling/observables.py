"""Emission spectrum, spectral correlations, indistinguishability, efficiency.

Frequencies are angular, in ps^-1, measured from the bare exciton frequency.
The spectrum is the standard stationary-phase convention

    S(w) = kappa int int exp(-i w (t - t')) <a^dag(t) a(t')> dt dt'

so the bare cavity line sits at ``omega_c - omega_X = -delta``. The
normalisation is fixed by ``int S dw / 2 pi = eta``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.optimize import OptimizeWarning, curve_fit, least_squares
from scipy.signal import find_peaks

from .errors import NumericalError, ResourceError, UsageError
from .ptensor import CorrelationGrid

log = logging.getLogger(__name__)

__all__ = [
    "Spectrum",
    "SidebandResult",
    "emission_spectrum",
    "spectral_correlation_matrix",
    "indistinguishability",
    "indistinguishability_frequency_domain",
    "quantum_efficiency",
    "polariton_asymmetry",
    "find_spectral_features",
    "fit_lines",
    "SpectralFeatures",
    "sideband_fraction",
]

MAX_MATRIX = 6000


@dataclass
class Spectrum:
    omega_grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    norm: float = 0.0

    @property
    def d_omega(self):
        return float(self.omega_grid[1] - self.omega_grid[0])


def _trapezoid_weights(n, dt):
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def _lag_taper(n, fraction=0.1):
    """Hann roll-off over the last ``fraction`` of the lags."""
    h = np.ones(n)
    m = int(round(fraction * n))
    if m > 1:
        h[n - m :] = 0.5 * (1 + np.cos(np.pi * np.arange(1, m + 1) / m))
    return h


def _lag_sums(G, w):
    """``c_m = sum_j w_{j+m} w_j G[j+m, j]``."""
    n = G.shape[0]
    c = np.empty(n, dtype=complex)
    for m in range(n):
        c[m] = np.sum(w[m:] * w[: n - m] * np.diagonal(G, -m))
    return c


def emission_spectrum(grid: CorrelationGrid, kappa, padding=4, taper=True) -> Spectrum:
    """Diagonal of the spectral correlation function on an FFT grid.

    ``padding`` multiplies the transform length; ``taper`` applies a Hann
    roll-off to the last 10% of the delay window.
    """
    G = grid.G
    n = G.shape[0]
    dt = grid.dt
    c = _lag_sums(G, _trapezoid_weights(n, dt))
    if taper:
        c = c * _lag_taper(n)
    c[0] *= 0.5
    L = max(int(padding), 1) * n
    # sum_m c_m exp(-i w tau_m) is a forward DFT
    spec = 2.0 * kappa * np.real(np.fft.fft(c, n=L))
    omega = 2 * np.pi * np.fft.fftfreq(L, d=dt)
    order = np.argsort(omega)
    omega, spec = omega[order], spec[order]
    neg = spec < 0
    if np.any(spec < -1e-10 * spec.max()):
        log.info("clipping %d negative spectrum samples (min %.3e)", neg.sum(), spec.min())
    d_omega = 2 * np.pi / (L * dt)
    norm = float(np.sum(spec) * d_omega)
    spec = np.where(neg, 0.0, spec)
    return Spectrum(omega_grid=omega, values=spec, norm=norm)


def spectral_correlation_matrix(grid: CorrelationGrid, kappa, omega=None, omega_prime=None, taper=True):
    """``S(w, w') = kappa sum_ij w_i w_j exp(-i w t_i + i w' t_j) G[i, j]``.

    Without explicit frequency lists the natural DFT grid of the window is
    used. The same lag taper as :func:`emission_spectrum` is applied, so the
    diagonal reproduces the emission spectrum.
    """
    G = grid.G
    n = G.shape[0]
    dt = grid.dt
    if omega is None:
        omega = np.sort(2 * np.pi * np.fft.fftfreq(n, d=dt))
    if omega_prime is None:
        omega_prime = omega
    omega = np.asarray(omega, float)
    omega_prime = np.asarray(omega_prime, float)
    if max(len(omega), len(omega_prime), n) > MAX_MATRIX:
        raise ResourceError(f"spectral correlation matrix larger than {MAX_MATRIX} per side")
    w = _trapezoid_weights(n, dt)
    Gw = G * np.outer(w, w)
    if taper:
        idx = np.arange(n)
        Gw = Gw * _lag_taper(n)[np.abs(idx[:, None] - idx[None, :])]
    t = dt * np.arange(n)
    Ei = np.exp(-1j * np.outer(omega, t))
    Ej = np.exp(1j * np.outer(t, omega_prime))
    return kappa * (Ei @ Gw @ Ej)


def _check_decayed(pop, tol, what):
    peak = np.max(pop)
    if peak > 0 and pop[-1] > tol * peak:
        raise UsageError(
            f"{what}: population at the end of the window is {pop[-1] / peak:.2e} of its "
            f"maximum (> {tol:g}); increase t_max"
        )


def indistinguishability(grid: CorrelationGrid, kappa=None, decay_tol=1e-4):
    """Photon indistinguishability from the two-time correlation grid.

    Evaluated in the time domain, ``sum |G|^2 / (sum G_ii)^2`` with trapezoid
    weights, which is the Parseval image of the spectral definition. ``kappa``
    cancels and is accepted only for signature symmetry.
    """
    G = grid.G
    pop = np.real(np.diag(G))
    _check_decayed(pop, decay_tol, "indistinguishability")
    w = _trapezoid_weights(G.shape[0], grid.dt)
    num = float(w @ (np.abs(G) ** 2) @ w)
    den = float(w @ pop) ** 2
    I = num / den
    if not 0.0 <= I <= 1.0:
        log.info("indistinguishability %.6f clipped to [0, 1]", I)
        I = min(max(I, 0.0), 1.0)
    return I


def indistinguishability_frequency_domain(grid: CorrelationGrid, kappa=1.0):
    """Same quantity from the discretised spectral correlation matrix (validation only)."""
    n = grid.G.shape[0]
    if n > MAX_MATRIX:
        raise ResourceError("grid too large for the frequency-domain check")
    S = spectral_correlation_matrix(grid, kappa, taper=False)
    d_omega = 2 * np.pi / (n * grid.dt)
    total = np.real(np.trace(S)) * d_omega
    return float(np.sum(np.abs(S) ** 2) * d_omega**2 / total**2)


def quantum_efficiency(populations, kappa, dt, decay_tol=1e-3):
    """``eta = kappa int <a^dag a> dt`` with the trapezoid rule."""
    pop = np.real(np.asarray(populations))
    _check_decayed(pop, decay_tol, "quantum_efficiency")
    eta = float(kappa * np.sum(_trapezoid_weights(len(pop), dt) * pop))
    if eta > 1 + 1e-3 or eta < -1e-3:
        log.warning("efficiency %.6f outside [0, 1]", eta)
    return min(max(eta, 0.0), 1.0)


def _parabolic_peak(x, y, i):
    if i <= 0 or i >= len(y) - 1:
        return x[i], y[i]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2 * y1 + y2
    if den == 0:
        return x[i], y1
    s = 0.5 * (y0 - y2) / den
    return x[i] + s * (x[1] - x[0]), y1 - 0.25 * (y0 - y2) * s


def polariton_asymmetry(spectrum: Spectrum, sol, prominence=0.05):
    """``A = (S_- - S_+) / (S_- + S_+)`` from the two polariton peak heights.

    The expected polariton positions follow from the variational solution.
    Returns ``None`` when two distinct peaks cannot be resolved.
    """
    x, y = spectrum.omega_grid, spectrum.values
    peaks, _ = find_peaks(y, prominence=prominence * y.max())
    if len(peaks) < 2:
        return None
    centre = 0.5 * (sol.R_v - sol.delta)
    half = 0.5 * sol.eta_v
    lower = peaks[np.argmin(np.abs(x[peaks] - (centre - half)))]
    upper = peaks[np.argmin(np.abs(x[peaks] - (centre + half)))]
    if lower == upper:
        return None
    _, s_lo = _parabolic_peak(x, y, lower)
    _, s_hi = _parabolic_peak(x, y, upper)
    return float((s_lo - s_hi) / (s_lo + s_hi))


@dataclass
class SpectralFeatures:
    """Sharp lines and the separate sideband lobes left after removing them.

    ``sidebands`` holds the weight-centre frequency of each lobe and
    ``sideband_weights`` its integrated weight.
    """

    lines: np.ndarray
    line_widths: np.ndarray
    sidebands: np.ndarray
    sideband_weights: np.ndarray

    @property
    def count(self):
        return len(self.lines) + len(self.sidebands)


def _half_width(x, y, i):
    half = 0.5 * y[i]
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < len(y) - 1 and y[hi] > half:
        hi += 1
    return max(0.5 * (x[hi] - x[lo]), x[1] - x[0])


def _pole_model(params, x):
    amp = np.zeros_like(x, dtype=complex)
    for a, b, x0, hw in params.reshape(-1, 4):
        amp += (a + 1j * b) / (x - x0 + 1j * abs(hw))
    return np.abs(amp) ** 2


def fit_lines(spectrum: Spectrum, prominence=0.05, window=3.0):
    """Fit the sharp lines as one coherent sum of complex poles.

    Emission from several bright states of one emitter interferes, so the
    lines are modelled as ``|sum_k c_k / (w - w_k + i h_k)|^2`` rather than a
    sum of Lorentzians. Returns ``(params, model)`` with ``params`` of shape
    ``(n_lines, 4)`` holding ``Re c, Im c, w_k, h_k``.
    """
    x, y = spectrum.omega_grid, spectrum.values
    peaks, _ = find_peaks(y, prominence=prominence * y.max())
    if len(peaks) == 0:
        peaks = np.array([int(np.argmax(y))])
    win = np.zeros_like(x, dtype=bool)
    p0 = []
    for i in peaks:
        hw = _half_width(x, y, i)
        win |= np.abs(x - x[i]) <= window * hw
        p0 += [np.sqrt(y[i]) * hw, 0.0, x[i], hw]
    res = least_squares(lambda q: _pole_model(q, x[win]) - y[win], np.array(p0), x_scale="jac")
    if not res.success:
        raise NumericalError("line fit failed", {"message": res.message})
    params = res.x.reshape(-1, 4)
    params[:, 3] = np.abs(params[:, 3])
    return params, _pole_model(res.x, x)


def find_spectral_features(
    spectrum: Spectrum, prominence=0.05, exclusion=6.0, smooth=0.25, level=0.1, min_weight=1e-3
):
    """Lines and spectrally separate phonon sidebands.

    The lines are removed with :func:`fit_lines`. Within ``exclusion`` half
    widths of a line the residual is replaced by a straight bridge between
    its values at the two ends, so a sideband hugging a line stays in one
    piece. After Gaussian smoothing over ``smooth`` ps^-1 every connected
    stretch where the residual exceeds ``level`` times its maximum is one
    sideband lobe. Two lobes are therefore resolved only if the sideband
    weight between them drops below that level. Lobes holding less than
    ``min_weight`` of the total spectral weight are ignored.
    """
    x, y = spectrum.omega_grid, spectrum.values
    dx = x[1] - x[0]
    params, model = fit_lines(spectrum, prominence)
    resid = np.clip(y - model, 0.0, None)
    keep = np.ones_like(x, dtype=bool)
    for _, _, x0, hw in params:
        keep &= np.abs(x - x0) > exclusion * hw
    if keep.sum() < 2:
        raise UsageError("line exclusion zones cover the whole spectrum")
    resid = np.interp(x, x[keep], resid[keep])
    if smooth > 0:
        resid = gaussian_filter1d(resid, smooth / dx, mode="nearest")
    above = resid > level * resid.max() if resid.max() > 0 else np.zeros_like(x, dtype=bool)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], above.astype(int), [0]])))
    total = y.sum() * dx
    centres, weights = [], []
    for a, b in zip(edges[::2], edges[1::2]):
        wgt = resid[a:b].sum() * dx
        if wgt < min_weight * total:
            continue
        centres.append(float(np.sum(x[a:b] * resid[a:b]) * dx / wgt))
        weights.append(float(wgt))
    order = np.argsort(params[:, 2])
    return SpectralFeatures(params[order, 2], 2 * params[order, 3], np.array(centres), np.array(weights))


@dataclass
class SidebandResult:
    fraction: float
    red_fraction: float
    line_centre: float
    line_width: float


def _lorentz_bg(x, a, x0, hw, b0, b1, b2):
    return a * hw**2 / ((x - x0) ** 2 + hw**2) + b0 + b1 * (x - x0) + b2 * (x - x0) ** 2


def sideband_fraction(spectrum: Spectrum, linewidth, window_factor=3.0):
    """Phonon-sideband share of the total emission.

    The zero-phonon line is fitted over ``+- window_factor * linewidth`` by a
    Lorentzian on a quadratic background; its full analytic area is taken as
    the line weight so that the Lorentzian wings outside the window are not
    counted as sideband. ``linewidth`` is the expected FWHM.
    """
    x, y = spectrum.omega_grid, spectrum.values
    total = float(np.sum(y) * spectrum.d_omega)
    i0 = int(np.argmax(y))
    x0 = x[i0]
    win = np.abs(x - x0) <= window_factor * linewidth
    if win.sum() < 7:
        raise UsageError("sideband window contains too few frequency samples")
    others, _ = find_peaks(y, prominence=0.05 * y.max())
    others = others[others != i0]
    if len(others) and np.min(np.abs(x[others] - x0)) < window_factor * linewidth:
        raise UsageError("sideband window overlaps a neighbouring peak")
    p0 = [y[i0], x0, 0.5 * linewidth, 0.0, 0.0, 0.0]
    try:
        with warnings.catch_warnings():
            # an exact fit leaves the covariance undefined, which is harmless here
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_lorentz_bg, x[win], y[win], p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise NumericalError("zero-phonon line fit failed") from exc
    a, xc, hw = popt[0], popt[1], abs(popt[2])
    line = np.pi * a * hw
    frac = 1.0 - line / total
    if not 0.0 <= frac <= 1.0:
        # usually a window too short for the line: the taper broadens it
        log.warning("sideband fraction %.4f clipped to [0, 1]", frac)
    # sideband spectrum: what the line does not explain, never negative
    resid = np.clip(y - a * hw**2 / ((x - xc) ** 2 + hw**2), 0.0, None)
    red = float(np.sum(resid[x < xc]))
    blue = float(np.sum(resid[x > xc]))
    red_frac = red / (red + blue) if red + blue > 0 else 0.5
    return SidebandResult(float(min(max(frac, 0.0), 1.0)), red_frac, float(xc), float(2 * hw))
