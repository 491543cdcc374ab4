"""Three-level exciton-cavity system in the frame rotating at the exciton.

Basis ordering is ``[|0,0>, |1,0>, |0,X>]`` (photon number, exciton).
Density matrices are vectorised row-major, ``vec(rho)[3*s + r] = rho[s, r]``,
so that ``vec(A rho B) = kron(A, B.T) vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError

DIM = 3
#: eigenvalues of |X><X| for each basis state
LAMBDA = np.array([0, 0, 1])

A_OP = np.zeros((3, 3), dtype=complex)
A_OP[0, 1] = 1.0  # a|1,0> = |0,0>
SIGMA_OP = np.zeros((3, 3), dtype=complex)
SIGMA_OP[0, 2] = 1.0  # |0,0><0,X|
X_PROJ = np.diag([0.0, 0.0, 1.0]).astype(complex)
IDENTITY = np.eye(3, dtype=complex)


@dataclass(frozen=True)
class Basis:
    states: tuple = ("|0,0>", "|1,0>", "|0,X>")
    lam: tuple = (0, 0, 1)

    def __post_init__(self):
        if len(self.states) != 3 or len(self.lam) != 3:
            raise DomainError("basis must be three dimensional")
        if any(v not in (0, 1) for v in self.lam):
            raise DomainError("lambda values must be 0 or 1")

    def pair_index(self):
        """Map Liouville index 3*s + r onto the (lambda_s, lambda_r) class 0..3."""
        lam = np.asarray(self.lam)
        return (2 * lam[:, None] + lam[None, :]).ravel()


@dataclass(frozen=True)
class SystemParams:
    """Exciton-cavity parameters in ps^-1.

    ``delta = omega_X - omega_c``. The dephasing rate enters the
    Liouvillian as ``2 gamma_star D[|X><X|]``.
    """

    delta: float = 0.0
    g: float = 1.0
    kappa: float = 0.5
    gamma: float = 0.01
    gamma_star: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "gamma_star"):
            v = getattr(self, name)
            if not v >= 0:
                raise DomainError(f"{name} must be >= 0, got {v}")


def build_system_hamiltonian(p: SystemParams):
    H = np.zeros((3, 3), dtype=complex)
    H[1, 1] = -p.delta
    H[1, 2] = H[2, 1] = p.g
    return H


def spre(A):
    return np.kron(A, IDENTITY)


def spost(B):
    return np.kron(IDENTITY, B.T)


def dissipator(L):
    LdL = L.conj().T @ L
    return np.kron(L, L.conj()) - 0.5 * spre(LdL) - 0.5 * spost(LdL)


def build_liouvillian(p: SystemParams):
    H = build_system_hamiltonian(p)
    L = -1j * (spre(H) - spost(H))
    L = L + p.kappa * dissipator(A_OP) + p.gamma * dissipator(SIGMA_OP)
    L = L + 2.0 * p.gamma_star * dissipator(X_PROJ)
    return L


def half_step_propagator(p: SystemParams, dt):
    """exp(L dt / 2)."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    return expm(build_liouvillian(p) * (0.5 * dt))


def initial_state():
    rho = np.zeros((3, 3), dtype=complex)
    rho[2, 2] = 1.0
    return rho


def vec(rho):
    return np.asarray(rho).reshape(-1)


def unvec(v):
    return np.asarray(v).reshape(3, 3)


def expect_vector(op):
    """Row vector ``c`` with ``c @ vec(rho) = Tr[op rho]``."""
    return np.asarray(op).T.reshape(-1)
