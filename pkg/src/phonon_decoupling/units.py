"""Unit conversions. Internally hbar = k_B = 1 with times in ps."""

from scipy import constants as _c

#: k_B / hbar in ps^-1 per kelvin
KB_PS_PER_K = _c.k / _c.hbar * 1e-12
#: 1 meV expressed as an angular frequency in ps^-1
PS_INV_PER_MEV = 1e-3 * _c.e / _c.hbar * 1e-12


def mev_to_ps(x):
    return x * PS_INV_PER_MEV


def ps_to_mev(x):
    return x / PS_INV_PER_MEV


def kelvin_to_energy(temperature):
    """Thermal energy k_B T in ps^-1."""
    return KB_PS_PER_K * temperature
