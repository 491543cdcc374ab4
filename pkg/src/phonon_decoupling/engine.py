"""One-call simulation: memory kernel, process tensor, populations and grid."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec, memory_kernel, memory_steps_for
from .errors import DomainError
from .ptensor import (
    CorrelationGrid,
    ProcessTensor,
    build_process_tensor,
    propagate_populations,
    two_time_correlation_grid,
)
from .system import A_OP, SystemParams, initial_state

log = logging.getLogger(__name__)

__all__ = ["EngineOptions", "SimulationResult", "simulate", "photon_population"]


@dataclass(frozen=True)
class EngineOptions:
    """Discretisation of a run.

    ``memory_tolerance`` sets the kernel truncation ``|eta_k|/|eta_0|``.
    ``t_max`` is in ps and rounded to a whole number of steps.
    """

    dt: float = 0.05
    t_max: float = 40.0
    svd_cutoff: float = 1e-8
    memory_tolerance: float = 1e-7
    max_bond: int = 400

    def __post_init__(self):
        bad = []
        if not self.dt > 0:
            bad.append("dt must be > 0")
        if not self.t_max > self.dt:
            bad.append("t_max must exceed dt")
        if not 0 <= self.svd_cutoff < 1:
            bad.append("svd_cutoff must be in [0, 1)")
        if not 0 < self.memory_tolerance < 1:
            bad.append("memory_tolerance must be in (0, 1)")
        if bad:
            raise DomainError("; ".join(bad))

    @property
    def steps(self):
        return max(int(round(self.t_max / self.dt)), 1)


@dataclass
class SimulationResult:
    options: EngineOptions
    params: SystemParams
    spec: BathSpec
    states: np.ndarray = field(repr=False)
    grid: CorrelationGrid | None = field(default=None, repr=False)
    process_tensor: ProcessTensor | None = field(default=None, repr=False)

    @property
    def times(self):
        return self.options.dt * np.arange(len(self.states))

    @property
    def photon_population(self):
        return photon_population(self.states)

    @property
    def max_bond(self):
        return 0 if self.process_tensor is None else int(max(self.process_tensor.bonds))


def photon_population(states):
    """``<a^dag a>`` from a stack of density matrices."""
    n = A_OP.conj().T @ A_OP
    return np.real(np.einsum("ij,tji->t", n, states))


def simulate(spec: BathSpec, p: SystemParams, options: EngineOptions = EngineOptions(), grid=True, pt=None):
    """Propagate the initial exciton and optionally build the correlation grid.

    A prebuilt process tensor may be passed in; it must match ``options.dt``.
    """
    n = options.steps
    if pt is None:
        K = memory_steps_for(options.dt, spec, options.memory_tolerance)
        kernel = memory_kernel(options.dt, K, spec)
        pt = build_process_tensor(kernel, steps=n, svd_cutoff=options.svd_cutoff, max_bond=options.max_bond)
        log.info("process tensor dt=%g K=%d bond=%d", options.dt, pt.memory_steps, pt.bond_dimension)
    rho0 = initial_state()
    states = propagate_populations(pt, p, rho0, steps=n, dt=options.dt)
    G = two_time_correlation_grid(pt, p, rho0, steps=n, dt=options.dt) if grid else None
    return SimulationResult(options, p, spec, states, G, pt)
