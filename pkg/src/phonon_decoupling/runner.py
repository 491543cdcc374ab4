"""Execution of run configurations: single points, sweeps and convergence ladders."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import eigvals

from .bath import pure_dephasing_rate
from .config import RunConfig, resolve_points
from .engine import EngineOptions, simulate
from .errors import PhononDecouplingError, UsageError
from .observables import (
    emission_spectrum,
    find_spectral_features,
    indistinguishability,
    polariton_asymmetry,
    quantum_efficiency,
)
from .presets import regime_map
from .rates import epsilon_contributions, purcell_quantities
from .system import SystemParams, build_liouvillian
from .varpol import solve_variational_displacement

log = logging.getLogger(__name__)

__all__ = [
    "WORKERS_ENV",
    "PointResult",
    "RunOutcome",
    "system_for",
    "auto_t_max",
    "run_point",
    "convergence_ladder",
    "execute",
]

WORKERS_ENV = "PHONON_DECOUPLING_WORKERS"
MAX_AUTO_STEPS = 2000
DECAY_TARGET = 1e-4
DYNAMIC_TASKS = ("spectrum", "indistinguishability", "efficiency", "sweep")


@dataclass
class PointResult:
    """Scalars of one run plus optional curves for CSV output."""

    scalars: dict
    curves: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class RunOutcome:
    status: int
    files: list
    manifest: dict


def system_for(cfg: RunConfig):
    """``(SystemParams, VariationalSolution)`` with resonance and dephasing resolved."""
    spec = cfg.bath
    gs = pure_dephasing_rate(spec) if cfg.gamma_star is None else cfg.gamma_star
    p = SystemParams(delta=0.0, g=cfg.g, kappa=cfg.kappa, gamma=cfg.gamma, gamma_star=gs)
    resonance = cfg.delta is None
    sol = solve_variational_displacement(spec, p, resonance_mode=resonance)
    delta = sol.delta if resonance else cfg.delta
    return replace(p, delta=delta), sol


def auto_t_max(p: SystemParams, target=DECAY_TARGET):
    """Time for the photon population to fall to ``target``.

    The slowest Liouvillian rate belongs to a coherence with the ground state,
    which decays at half the rate of the matching population.
    """
    ev = eigvals(build_liouvillian(p))
    rates = -ev.real
    rates = rates[rates > 1e-12]
    if len(rates) == 0:
        raise UsageError("no decay channel: the photon never leaves the cavity")
    return float(0.6 * np.log(1.0 / target) / rates.min())


def _dynamics(cfg: RunConfig, p: SystemParams):
    eng = cfg.engine
    explicit = eng.t_max is not None
    t_max = eng.t_max if explicit else min(auto_t_max(p), MAX_AUTO_STEPS * eng.dt)
    while True:
        opts = EngineOptions(dt=eng.dt, t_max=t_max, svd_cutoff=eng.svd_cutoff, memory_tolerance=eng.memory_tolerance)
        res = simulate(cfg.bath, p, opts)
        pop = res.photon_population
        tail = pop[-1] / pop.max() if pop.max() > 0 else 0.0
        if explicit or tail < DECAY_TARGET or opts.steps >= MAX_AUTO_STEPS:
            return res, tail
        t_max = min(2 * t_max, MAX_AUTO_STEPS * eng.dt)


def run_point(cfg: RunConfig) -> PointResult:
    """Evaluate the task of a single-point configuration."""
    task = cfg.task
    if task == "regime-map":
        rows = regime_map()
        return PointResult(
            {"decoupled": sum(r[3] for r in rows), "presets": len(rows)},
            {"regime_map": (("preset", "two_g_meV", "xi_meV", "decoupled"), rows)},
        )
    p, sol = system_for(cfg)
    base = {"g": cfg.g, "kappa": p.kappa, "delta": p.delta, "gamma_star": p.gamma_star, "B_v": sol.B_v, "R_v": sol.R_v}
    if task == "varpol":
        base.update(g_v=sol.g_v, eta_v=sol.eta_v, free_energy=sol.free_energy, iterations=sol.iterations)
        return PointResult(base, {"displacement": (("nu_ps_inv", "F"), list(zip(sol.nu_grid, sol.F)))})
    if task == "rates":
        r = epsilon_contributions(sol)
        Gamma, eta_p, _ = purcell_quantities(p)
        base.update(eps_zz=r.eps_zz, eps_yy=r.eps_yy, eps_zy=r.eps_zy, gamma_a=r.gamma_a, purcell_rate=Gamma, eta_purcell=eta_p)
        return PointResult(base)

    res, tail = _dynamics(cfg, p)
    dt = cfg.engine.dt
    pop = res.photon_population
    exc = np.real(res.states[:, 2, 2])
    eta = quantum_efficiency(pop, p.kappa, dt)
    I = indistinguishability(res.grid)
    base.update(eta=eta, indistinguishability=I, t_max=res.times[-1])
    diag = {"max_bond": res.max_bond, "memory_steps": res.process_tensor.memory_steps, "tail": float(tail)}
    curves = {}
    if task in ("efficiency", "spectrum", "indistinguishability"):
        curves["populations"] = (("t_ps", "photon", "exciton"), list(zip(res.times, pop, exc)))
    if cfg.output.grid:
        t = res.times
        i, j = np.tril_indices(len(t))
        G = res.grid.G[i, j]
        curves["grid"] = (("t1_ps", "t2_ps", "re", "im"), list(zip(t[i], t[j], G.real, G.imag)))
    if task == "spectrum":
        S = emission_spectrum(res.grid, p.kappa)
        base["spectrum_norm_over_2pi"] = S.norm / (2 * np.pi)
        A = polariton_asymmetry(S, sol)
        base["asymmetry"] = "not applicable" if A is None else A
        feats = find_spectral_features(S)
        base["features"] = feats.count
        curves["spectrum"] = (("omega_ps_inv", "S"), list(zip(S.omega_grid, S.values)))
    return PointResult(base, curves, diag)


def _observable(cfg, result):
    if cfg.task == "efficiency":
        return result.scalars["eta"]
    return result.scalars["indistinguishability"]


def convergence_ladder(cfg: RunConfig, rtol=1e-3, max_levels=4):
    """Halve ``dt`` and tighten the SVD cutoff tenfold until the task
    observable moves by less than ``rtol``. Returns ``(result, ladder)``."""
    ladder = []
    prev = None
    level = cfg
    result = None
    for k in range(max_levels):
        if k:
            eng = level.engine
            level = replace(level, engine=replace(eng, dt=eng.dt / 2, svd_cutoff=eng.svd_cutoff / 10))
        result = run_point(level)
        value = _observable(level, result)
        entry = {
            "dt": level.engine.dt,
            "svd_cutoff": level.engine.svd_cutoff,
            "value": value,
            "max_bond": result.diagnostics.get("max_bond"),
        }
        if prev is not None:
            entry["relative_change"] = abs(value - prev) / abs(prev)
        ladder.append(entry)
        if prev is not None and entry["relative_change"] < rtol:
            break
        prev = value
    result.diagnostics["converged"] = len(ladder) > 1 and ladder[-1].get("relative_change", 1.0) < rtol
    return result, ladder


def _safe_point(args):
    cfg, converge = args
    try:
        if converge and cfg.task in DYNAMIC_TASKS:
            result, ladder = convergence_ladder(cfg)
            result.diagnostics["ladder"] = ladder
            return result
        return run_point(cfg)
    except (PhononDecouplingError, MemoryError, ValueError, RuntimeError) as exc:
        log.warning("point failed: %s", exc)
        return PointResult({}, error=f"{type(exc).__name__}: {exc}")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _version():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from . import __version__

    return __version__


def default_workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def execute(cfg: RunConfig, out_dir=None, workers=None, converge=False) -> RunOutcome:
    """Run ``cfg`` and write its outputs.

    Exit status: 0 when every point succeeded, 3 when a sweep lost some
    points. A failing single-point run raises.
    """
    out = Path(out_dir if out_dir is not None else cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    points = resolve_points(cfg)
    workers = default_workers() if workers is None else max(int(workers), 1)
    jobs = [(pt, converge) for pt in points]
    if cfg.sweep is None:
        try:
            if converge and cfg.task in DYNAMIC_TASKS:
                result, ladder = convergence_ladder(points[0])
                result.diagnostics["ladder"] = ladder
            else:
                result = run_point(points[0])
        except PhononDecouplingError:
            raise
        results = [result]
    elif workers == 1 or len(jobs) == 1:
        results = [_safe_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_safe_point, jobs))

    files = []
    fmts = cfg.output.formats
    if cfg.sweep is None:
        r = results[0]
        if "csv" in fmts:
            for name, (header, rows) in r.curves.items():
                path = out / f"{name}.csv"
                _write_csv(path, header, rows)
                files.append(path)
        if "json" in fmts:
            path = out / "summary.json"
            _write_json(path, r.scalars)
            files.append(path)
    else:
        columns = sorted({k for r in results for k in r.scalars})
        if "csv" in fmts:
            path = out / "sweep.csv"
            rows = [
                [v, "ok" if r.error is None else "failed"] + [r.scalars.get(c, "") for c in columns]
                for v, r in zip(cfg.sweep.values, results)
            ]
            _write_csv(path, ["sweep_value", "status"] + columns, rows)
            files.append(path)
        if "json" in fmts:
            path = out / "summary.json"
            payload = {
                "variable": cfg.sweep.variable,
                "points": [
                    {"sweep_value": v, "error": r.error, **r.scalars} for v, r in zip(cfg.sweep.values, results)
                ],
            }
            _write_json(path, payload)
            files.append(path)

    failed = [i for i, r in enumerate(results) if r.error is not None]
    bonds = [r.diagnostics["max_bond"] for r in results if "max_bond" in r.diagnostics]
    manifest = {
        "version": _version(),
        "task": cfg.task,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "points": len(results),
        "failed_points": [
            {"index": i, "sweep_value": cfg.sweep.values[i] if cfg.sweep else None, "error": results[i].error}
            for i in failed
        ],
        "bond_dimension": {"min": min(bonds), "max": max(bonds), "mean": float(np.mean(bonds))} if bonds else None,
        "diagnostics": [r.diagnostics for r in results],
        "files": {p.name: _sha256(p) for p in files},
    }
    mpath = out / "manifest.json"
    _write_json(mpath, manifest)
    return RunOutcome(status=3 if failed else 0, files=files + [mpath], manifest=manifest)
