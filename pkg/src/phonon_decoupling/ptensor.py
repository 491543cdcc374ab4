"""Compressed influence functional and its contraction with the system.

The influence functional of a stationary Gaussian bath is shift invariant,
so it is stored as a single repeated core ``A[a, alpha, b]`` of an infinite
matrix product state plus two boundary vectors. ``alpha`` runs over the four
classes ``(lambda_s, lambda_r)`` of a Liouville index. Padding the past and
the future with the class ``(0, 0)`` leaves the functional unchanged because
those influence entries are exactly one, which is what makes the boundary
vectors exact.

The core is assembled lag by lag, longest lag first. Every lag adds a row of
influence tensors joined by a diagonal line that carries the earlier index
forward in time; after each row the bond is truncated in the canonical form
of the uniform state.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs

from .bath import BathSpec, MemoryKernel
from .errors import NumericalError, ResourceError, UsageError
from .system import A_OP, Basis, SystemParams, expect_vector, half_step_propagator, spre

log = logging.getLogger(__name__)

# lambda values of the four pair classes 00, 01, 10, 11
_LS = np.array([0, 0, 1, 1])
_LR = np.array([0, 1, 0, 1])

DEFAULT_MAX_BOND = 400


@dataclass
class ProcessTensor:
    """Uniform tensor-train encoding of the influence functional.

    ``cores`` holds the single repeated core; ``bonds`` lists the bond
    dimension after each build row (longest lag first).
    """

    dt: float
    steps: int
    memory_steps: int
    svd_cutoff: float
    core: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    bonds: list = field(default_factory=list)

    @property
    def cores(self):
        return [self.core]

    @property
    def bond_dimension(self):
        return self.core.shape[0]


@dataclass
class CorrelationGrid:
    """``G[i, j] = <a^dag(t_i) a(t_j)>`` on ``t_i = i dt``, Hermitian completed."""

    dt: float
    t_max: float
    G: np.ndarray = field(repr=False)

    @property
    def times(self):
        return self.dt * np.arange(self.G.shape[0])

    @property
    def populations(self):
        return np.real(np.diag(self.G))


def pair_tensor(eta_k):
    """Influence tensor of one lag on the four lambda classes, ``b[alpha_i, alpha_j]``."""
    d = (_LS - _LR)[:, None]
    return np.exp(-d * (eta_k * _LS[None, :] - np.conj(eta_k) * _LR[None, :]))


def influence_tensors(kernel: MemoryKernel, basis: Basis = Basis()):
    """Full 9x9 influence tensors ``b_k[(s_i, r_i), (s_j, r_j)]`` for k = 0..K_mem."""
    idx = basis.pair_index()
    return [pair_tensor(e)[np.ix_(idx, idx)] for e in kernel.eta]


# ---------------------------------------------------------------- truncation


def _fix_signs(u, vh):
    """Make the largest-magnitude entry of every left singular vector positive real."""
    rows = np.argmax(np.abs(u), axis=0)
    ph = u[rows, np.arange(u.shape[1])]
    ph = ph / np.abs(ph)
    return u * ph.conj()[None, :], vh * ph[:, None]


def _dominant(apply, D, guess):
    """Dominant eigenpair of a linear map on D x D matrices."""
    n = D * D
    if n <= 256:
        E = np.empty((n, n), dtype=complex)
        basis = np.eye(n, dtype=complex)
        for i in range(n):
            E[:, i] = apply(basis[i])
        w, v = np.linalg.eig(E)
        i = int(np.argmax(np.abs(w)))
        return w[i], v[:, i]
    op = LinearOperator((n, n), matvec=apply, dtype=complex)
    try:
        w, v = eigs(op, k=1, which="LM", v0=guess, tol=1e-14, maxiter=20 * n)
    except ArpackNoConvergence as exc:
        raise NumericalError("transfer-operator eigensolver did not converge", {"D": D}) from exc
    return w[0], v[:, 0]


def _fixed_points(A):
    D, p, _ = A.shape
    Af = A.reshape(D, p * D)
    Ar = A.reshape(D * p, D)

    def left(x):
        t = (x.reshape(D, D) @ Af).reshape(D * p, D)
        return (Ar.conj().T @ t).ravel()

    def right(y):
        t = (Ar @ y.reshape(D, D)).reshape(D, p * D)
        return (t @ Af.conj().T).ravel()

    guess = np.eye(D, dtype=complex).ravel()
    lam, x = _dominant(left, D, guess)
    _, y = _dominant(right, D, guess)
    X = x.reshape(D, D)
    Y = y.reshape(D, D)
    X = X / np.trace(X)
    Y = Y / np.trace(Y)
    return lam.real, 0.5 * (X + X.conj().T), 0.5 * (Y + Y.conj().T)


def _qr_pos(M):
    q, r = np.linalg.qr(M)
    d = np.diag(r)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1.0)
    return q * ph[None, :], r * ph.conj()[:, None]


def _polish_left(A, L, tol=1e-14, maxiter=40):
    """Refine ``L`` with ``L A = A_L L`` (``A_L`` left isometric) by QR sweeps.

    Working with ``L`` instead of ``L^dag L`` keeps the gauge accurate to
    machine precision; the eigenvector only serves as a starting point.
    Sweeps stop once the change no longer shrinks: the remaining motion lives
    in near-null directions that the truncation discards anyway.
    """
    D, p, _ = A.shape
    L = L / np.linalg.norm(L)
    best = np.inf
    stalls = 0
    for _ in range(maxiter):
        M = (L @ A.reshape(D, p * D)).reshape(L.shape[0] * p, D)
        _, R = _qr_pos(M)
        R = R / np.linalg.norm(R)
        change = np.linalg.norm(R - L) if R.shape == L.shape else np.inf
        L = R
        if change < tol:
            break
        if change < 0.5 * best:
            best, stalls = change, 0
        else:
            stalls += 1
            if stalls >= 3:
                break
    return L


def _gauge_matrix(X):
    s, U = np.linalg.eigh(X)
    s = np.clip(s, 0.0, None)
    return np.sqrt(s)[:, None] * U.conj().T


def truncate_uniform(A, cutoff):
    """Truncate the bond of a uniform MPS with core ``A[a, p, b]``.

    Singular values of the canonical bond below ``cutoff`` times the largest
    are discarded. Returns the new core.
    """
    lam, X, Y = _fixed_points(A)
    A = A / np.sqrt(abs(lam))
    L = _polish_left(A, _gauge_matrix(X))
    # right gauge: the left gauge of the mirrored core
    Rt = _polish_left(np.transpose(A, (2, 1, 0)), _gauge_matrix(Y.T))
    R = Rt.T
    u, S, vh = np.linalg.svd(L @ R)
    keep = max(1, int(np.sum(S > cutoff * S[0])))
    u, vh = _fix_signs(u[:, :keep], vh[:keep])
    S = S[:keep]
    Pl = (u.conj().T @ L) / np.sqrt(S)[:, None]
    Pr = (R @ vh.conj().T) / np.sqrt(S)[None, :]
    D, p, _ = A.shape
    out = (Pl @ A.reshape(D, p * D)).reshape(keep * p, D) @ Pr
    return out.reshape(keep, p, keep)


def _boundaries(A):
    """Normalise ``A`` so that ``A[:, 0, :]`` has unit dominant eigenvalue."""
    M = A[:, 0, :]
    w, vr = np.linalg.eig(M)
    i = int(np.argmax(np.abs(w)))
    lam = w[i]
    wl, vl = np.linalg.eig(M.T)
    j = int(np.argmin(np.abs(wl - lam)))
    r = vr[:, i]
    l = vl[:, j]
    l = l / (l @ r)
    return A / lam, l, r


# ------------------------------------------------------------------- build


def build_process_tensor(
    kernel: MemoryKernel,
    basis: Basis = Basis(),
    steps: int = 1000,
    svd_cutoff: float = 1e-9,
    max_bond: int = DEFAULT_MAX_BOND,
) -> ProcessTensor:
    """Compress the influence functional of ``kernel``.

    Parameters
    ----------
    steps : int
        Default propagation length. The core itself does not depend on it.
    svd_cutoff : float
        Relative singular-value threshold; 0 disables truncation.
    max_bond : int
        Hard cap on the bond dimension.
    """
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if not 0 <= svd_cutoff < 1:
        raise UsageError("svd_cutoff must lie in [0, 1)")
    del basis  # the cores only see lambda classes
    eta = np.asarray(kernel.eta)
    # lags beyond the propagation length are kept: cutting a kernel that is
    # still sizeable makes the influence functional much harder to compress
    K = int(kernel.K_mem)
    bonds = []
    eye4 = np.eye(4)

    def check(D, row):
        if D > max_bond:
            raise ResourceError(
                f"bond dimension {D} exceeds cap {max_bond} at build row for lag {row}"
            )

    if K == 0:
        A = np.diag(pair_tensor(eta[0])).reshape(1, 4, 1).astype(complex)
    else:
        # T[a, alpha, carried, b]
        T = pair_tensor(eta[K]).reshape(1, 4, 4, 1).astype(complex)
        bonds.append(1)
        for k in range(K - 1, 0, -1):
            D = T.shape[0]
            b = pair_tensor(eta[k])
            Tn = np.einsum("axeb,xd,df->aexdbf", T, b, eye4).reshape(4 * D, 16, 4 * D)
            if svd_cutoff > 0:
                Tn = truncate_uniform(Tn, svd_cutoff)
            check(Tn.shape[0], k)
            bonds.append(Tn.shape[0])
            T = Tn.reshape(Tn.shape[0], 4, 4, Tn.shape[0])
        D = T.shape[0]
        b0 = np.diag(pair_tensor(eta[0]))
        A = np.einsum("axeb,x,xf->aexbf", T, b0, eye4).reshape(4 * D, 4, 4 * D)
        if svd_cutoff > 0:
            A = truncate_uniform(A, svd_cutoff)
        check(A.shape[0], 0)
    bonds.append(A.shape[0])
    A, l, r = _boundaries(A)
    log.debug("process tensor built: K=%d bond=%d", K, A.shape[0])
    return ProcessTensor(
        dt=kernel.dt,
        steps=int(steps),
        memory_steps=K,
        svd_cutoff=float(svd_cutoff),
        core=A,
        left=l,
        right=r,
        bonds=bonds,
    )


# ----------------------------------------------------------- contraction


def _check_dt(pt, dt):
    if dt is not None and not np.isclose(dt, pt.dt, rtol=1e-12, atol=0):
        raise UsageError(f"system timestep {dt} does not match process tensor dt {pt.dt}")


def step_matrix(pt: ProcessTensor, p: SystemParams, basis: Basis = Basis()):
    """One-step transfer on the joint (bond, Liouville) vector ``v[b, sigma]``."""
    chi = pt.bond_dimension
    V = half_step_propagator(p, pt.dt)
    Ab = pt.core[:, basis.pair_index(), :]  # a, sigma, b
    Dm = np.zeros((chi, 9, chi, 9), dtype=complex)
    s = np.arange(9)
    Dm[:, s, :, s] = np.transpose(Ab, (1, 2, 0))  # [sigma, b, a]
    Dm = Dm.reshape(9 * chi, 9 * chi)
    Vb = np.kron(np.eye(chi), V)
    return Vb @ Dm @ Vb


def _initial_vector(pt, rho0):
    return np.kron(pt.left, np.asarray(rho0, dtype=complex).reshape(-1))


def _step_operators(pt, p, basis=Basis()):
    """Forward and adjoint application of :func:`step_matrix` without forming it."""
    chi = pt.bond_dimension
    V = half_step_propagator(p, pt.dt)
    Ab = np.ascontiguousarray(pt.core[:, basis.pair_index(), :])  # a, sigma, b
    VT = V.T

    def forward(v):
        w = v.reshape(chi, 9) @ VT
        w = np.einsum("asb,as->bs", Ab, w)
        return (w @ VT).ravel()

    def adjoint(ell):
        w = ell.reshape(chi, 9) @ V
        w = np.einsum("bs,asb->as", w, Ab)
        return (w @ V).ravel()

    return forward, adjoint


def propagate_populations(pt: ProcessTensor, p: SystemParams, rho0, steps=None, dt=None):
    """Density matrices at ``t_n = n dt`` for ``n = 0..steps``."""
    _check_dt(pt, dt)
    n = pt.steps if steps is None else int(steps)
    forward, _ = _step_operators(pt, p)
    v = _initial_vector(pt, rho0)
    chi = pt.bond_dimension
    out = np.empty((n + 1, 3, 3), dtype=complex)
    for i in range(n + 1):
        out[i] = (pt.right @ v.reshape(chi, 9)).reshape(3, 3)
        v = forward(v)
    return out


def two_time_correlation_grid(pt: ProcessTensor, p: SystemParams, rho0, steps=None, dt=None):
    """Two-time photon correlation ``<a^dag(t_i) a(t_j)>`` for all ``i >= j``.

    The state after inserting ``a`` at ``t_j`` and the readout of ``a^dag``
    propagated back from ``t_i`` are both cached, so the whole lower triangle
    is a single matrix product.
    """
    _check_dt(pt, dt)
    n = pt.steps if steps is None else int(steps)
    chi = pt.bond_dimension
    forward, adjoint = _step_operators(pt, p)
    SaT = spre(A_OP).T
    N = n + 1
    W = np.empty((9 * chi, N), dtype=complex)
    v = _initial_vector(pt, rho0)
    for j in range(N):
        W[:, j] = (v.reshape(chi, 9) @ SaT).ravel()
        v = forward(v)
    Lm = np.empty((N, 9 * chi), dtype=complex)
    ell = np.kron(pt.right, expect_vector(A_OP.conj().T))
    for m in range(N):
        Lm[m] = ell
        ell = adjoint(ell)
    P = Lm @ W  # P[m, j] = G[j + m, j]
    del Lm, W
    i, j = np.tril_indices(N)
    G = np.zeros((N, N), dtype=complex)
    G[i, j] = P[i - j, j]
    del P
    G[j, i] = np.conj(G[i, j])
    d = np.arange(N)
    G[d, d] = G[d, d].real
    return CorrelationGrid(dt=pt.dt, t_max=pt.dt * n, G=G)


# ------------------------------------------------------------------ cache

_MAGIC = b"PDPT"
_VERSION = 1


def cache_key(spec: BathSpec, dt, steps, svd_cutoff, memory_steps=None):
    payload = json.dumps(
        {
            "alpha": spec.alpha,
            "xi": spec.xi,
            "T": spec.temperature,
            "nu_max": spec.nu_max,
            "n_quad": spec.n_quad,
            "dt": float(dt),
            "steps": int(steps),
            "cutoff": float(svd_cutoff),
            "memory": memory_steps,
            "version": _VERSION,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def save_process_tensor(pt: ProcessTensor, path):
    """Binary layout: magic, version, JSON header, then arrays as
    ``ndim, dims..., raw little-endian complex128``."""
    meta = json.dumps(
        {
            "dt": pt.dt,
            "steps": pt.steps,
            "memory_steps": pt.memory_steps,
            "svd_cutoff": pt.svd_cutoff,
            "bonds": [int(b) for b in pt.bonds],
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(meta)))
        fh.write(meta)
        arrays = (pt.core, pt.left, pt.right)
        fh.write(struct.pack("<I", len(arrays)))
        for a in arrays:
            a = np.ascontiguousarray(a, dtype="<c16")
            fh.write(struct.pack("<I", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
            fh.write(a.tobytes())


def load_process_tensor(path) -> ProcessTensor:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise UsageError(f"{path} is not a process-tensor cache file")
        version, nmeta = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise UsageError(f"unsupported cache version {version}")
        meta = json.loads(fh.read(nmeta))
        (count,) = struct.unpack("<I", fh.read(4))
        arrays = []
        for _ in range(count):
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            nbytes = 16 * int(np.prod(shape))
            arrays.append(np.frombuffer(fh.read(nbytes), dtype="<c16").reshape(shape).copy())
    core, left, right = arrays
    return ProcessTensor(core=core, left=left, right=right, **meta)
