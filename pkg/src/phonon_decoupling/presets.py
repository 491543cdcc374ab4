"""Light-matter coupling and phonon cutoff of representative emitter platforms."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .units import mev_to_ps, ps_to_mev

__all__ = ["MaterialPreset", "PRESETS", "list_presets", "get_preset", "regime_map"]


@dataclass(frozen=True)
class MaterialPreset:
    """Energies in meV; ``source`` names the kind of structure."""

    name: str
    hbar_g_meV: float
    hbar_xi_meV: float
    source: str

    def __post_init__(self):
        if not (self.hbar_g_meV > 0 and self.hbar_xi_meV > 0):
            raise DomainError(f"preset {self.name!r} needs positive energies")

    @property
    def g(self):
        return mev_to_ps(self.hbar_g_meV)

    @property
    def xi(self):
        return mev_to_ps(self.hbar_xi_meV)

    @property
    def decoupled(self):
        """Polariton splitting beyond the phonon cutoff, ``2 g > xi``."""
        return 2 * self.hbar_g_meV > self.hbar_xi_meV

    def round_trip(self):
        return ps_to_mev(self.g), ps_to_mev(self.xi)


PRESETS = (
    MaterialPreset("WS2", 93.0, 53.0, "transition metal dichalcogenide monolayer"),
    MaterialPreset("WSe2", 70.0, 50.0, "transition metal dichalcogenide monolayer"),
    MaterialPreset("methylene blue", 305.0, 213.0, "single molecule"),
    MaterialPreset("QD tunable microcavity", 0.018, 3.0, "quantum dot, measured"),
    MaterialPreset("QD photonic crystal", 0.113, 0.84, "quantum dot, measured"),
    MaterialPreset("QD bowtie", 2.0, 2.23, "quantum dot in dielectric bowtie cavity, predicted"),
    MaterialPreset("NV photonic crystal", 0.005, 65.0, "NV centre, measured"),
    MaterialPreset("NV nanobeam", 0.010, 65.0, "NV centre, predicted"),
)


def list_presets():
    return list(PRESETS)


def get_preset(name):
    key = name.strip().lower()
    for p in PRESETS:
        if p.name.lower() == key:
            return p
    raise KeyError(f"unknown preset {name!r}; choose from {[p.name for p in PRESETS]}")


def regime_map(presets=PRESETS):
    """Rows of ``(name, 2 hbar g, hbar xi, decoupled)`` in meV."""
    return [(p.name, 2 * p.hbar_g_meV, p.hbar_xi_meV, p.decoupled) for p in presets]
