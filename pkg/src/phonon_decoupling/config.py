"""Run configuration: a sectioned key-value file parsed with configparser.

Frequencies may carry a ``meV`` suffix (``g = 2.0 meV``) and are converted to
ps^-1 on load. Example::

    [task]
    name = spectrum

    [bath]
    temperature = 4

    [system]
    g = 10
    kappa = 0.5

    [engine]
    dt = 0.05
    t_max = 40
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bath import BathSpec
from .errors import DomainError, ValidationError
from .units import mev_to_ps

__all__ = [
    "TASKS",
    "EngineConfig",
    "SweepConfig",
    "OutputConfig",
    "RunConfig",
    "parse_and_validate",
    "parse_text",
    "resolve_points",
    "echo",
]

TASKS = ("spectrum", "indistinguishability", "efficiency", "varpol", "rates", "sweep", "regime-map")
SWEEP_VARIABLES = ("g", "kappa", "gamma", "delta", "temperature", "alpha", "xi")
FORMATS = ("csv", "json")

_KNOWN = {
    "task": {"name"},
    "bath": {"alpha", "xi", "temperature", "mu"},
    "system": {"delta", "g", "kappa", "gamma", "gamma_star"},
    "engine": {"dt", "t_max", "steps", "svd_cutoff", "memory_tolerance"},
    "sweep": {"variable", "values", "pin_kappa_to_4g"},
    "output": {"directory", "formats", "grid"},
}
# fields whose absence is an error for every task except regime-map
_REQUIRED = (("task", "name"), ("bath", "temperature"), ("system", "g"), ("system", "kappa"))
_FREQUENCY_KEYS = {"xi", "delta", "g", "kappa", "gamma", "gamma_star"}
_MEV = re.compile(r"^\s*([-+0-9.eE]+)\s*meV\s*$")


@dataclass(frozen=True)
class EngineConfig:
    dt: float = 0.05
    t_max: float | None = None
    svd_cutoff: float = 1e-8
    memory_tolerance: float = 1e-7


@dataclass(frozen=True)
class SweepConfig:
    variable: str
    values: tuple
    pin_kappa_to_4g: bool = False


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    formats: tuple = FORMATS
    grid: bool = False


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description.

    ``delta`` is ``None`` when the cavity is placed on the polaron-shifted
    exciton, and ``gamma_star`` is ``None`` when it follows from the bath.
    """

    task: str
    bath: BathSpec
    g: float
    kappa: float
    gamma: float = 0.01
    delta: float | None = None
    gamma_star: float | None = None
    engine: EngineConfig = field(default_factory=EngineConfig)
    sweep: SweepConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)
    conversions: tuple = ()

    def to_dict(self):
        d = asdict(self)
        d["bath"] = {k: v for k, v in asdict(self.bath).items() if k in ("alpha", "xi", "temperature", "mu")}
        d.pop("conversions")
        return d

    def config_hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(payload.encode()).hexdigest()


def _number(raw, key, problems, conversions):
    m = _MEV.match(raw)
    try:
        if m:
            if key not in _FREQUENCY_KEYS:
                problems.append(f"{key}: meV units only apply to frequencies")
                return None
            value = mev_to_ps(float(m.group(1)))
            conversions.append(f"{key} = {m.group(1)} meV -> {value:.6g} ps^-1")
            return value
        return float(raw)
    except ValueError:
        problems.append(f"{key}: cannot parse {raw!r} as a number")
        return None


def _values(raw, problems, conversions):
    raw = raw.strip()
    m = re.match(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$", raw)
    if m:
        try:
            return tuple(float(v) for v in np.linspace(float(m.group(1)), float(m.group(2)), int(m.group(3))))
        except ValueError:
            problems.append(f"values: bad linspace {raw!r}")
            return ()
    out = []
    for item in raw.split(","):
        v = _number(item.strip(), "values", problems, conversions) if item.strip() else None
        if v is not None:
            out.append(v)
    return tuple(out)


def parse_text(text, source="<string>") -> RunConfig:
    """Parse configuration text; raises :class:`ValidationError` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None)
    problems = []
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ValidationError([f"malformed configuration: {exc}"]) from exc
    for section in cp.sections():
        if section not in _KNOWN:
            problems.append(f"unknown section [{section}]")
            continue
        for key in cp[section]:
            if key not in _KNOWN[section]:
                problems.append(f"unknown key {section}.{key}")

    def get(section, key):
        return cp.get(section, key, fallback=None) if cp.has_section(section) else None

    task = get("task", "name")
    task = task.strip() if task is not None else None
    if task is not None and task not in TASKS:
        problems.append(f"task.name must be one of {', '.join(TASKS)}; got {task!r}")
    required = _REQUIRED if task != "regime-map" else (("task", "name"),)
    for section, key in required:
        if get(section, key) is None:
            problems.append(f"missing required field {section}.{key}")

    conversions = []
    vals = {}
    for section, keys in _KNOWN.items():
        if section in ("task", "sweep", "output"):
            continue
        for key in sorted(keys):
            raw = get(section, key)
            if raw is None:
                continue
            if key == "delta" and raw.strip().lower() == "resonance":
                vals[key] = None
                continue
            if key == "gamma_star" and raw.strip().lower() == "auto":
                vals[key] = None
                continue
            v = _number(raw, key, problems, conversions)
            if v is not None:
                vals[key] = v

    for key in ("alpha", "temperature", "mu", "gamma", "gamma_star", "g"):
        if vals.get(key) is not None and vals[key] < 0:
            problems.append(f"{key} must be >= 0, got {vals[key]}")
    for key in ("xi", "kappa", "dt", "t_max", "steps", "svd_cutoff", "memory_tolerance"):
        if vals.get(key) is not None and not vals[key] > 0:
            problems.append(f"{key} must be > 0, got {vals[key]}")
    if vals.get("t_max") is not None and vals.get("steps") is not None:
        problems.append("give either engine.t_max or engine.steps, not both")

    sweep = None
    if cp.has_section("sweep"):
        variable = (get("sweep", "variable") or "").strip()
        values = _values(get("sweep", "values") or "", problems, conversions)
        pin = get("sweep", "pin_kappa_to_4g")
        pin_flag = False
        if pin is not None:
            try:
                pin_flag = cp.getboolean("sweep", "pin_kappa_to_4g")
            except ValueError:
                problems.append(f"sweep.pin_kappa_to_4g must be a boolean, got {pin!r}")
        if variable not in SWEEP_VARIABLES:
            problems.append(f"sweep.variable must be one of {', '.join(SWEEP_VARIABLES)}; got {variable!r}")
        if len(values) < 2:
            problems.append("sweep.values needs at least 2 values")
        if pin_flag and variable == "kappa":
            problems.append("pin_kappa_to_4g conflicts with sweeping kappa")
        sweep = SweepConfig(variable, values, pin_flag)
    elif task == "sweep":
        problems.append("task sweep needs a [sweep] section with variable and values")

    formats = FORMATS
    raw = get("output", "formats")
    if raw is not None:
        formats = tuple(f.strip().lower() for f in raw.split(",") if f.strip())
        bad = [f for f in formats if f not in FORMATS]
        if bad or not formats:
            problems.append(f"output.formats must be a subset of {', '.join(FORMATS)}")
    write_grid = False
    if get("output", "grid") is not None:
        try:
            write_grid = cp.getboolean("output", "grid")
        except ValueError:
            problems.append(f"output.grid must be a boolean, got {get('output', 'grid')!r}")
    output = OutputConfig(directory=(get("output", "directory") or "results").strip(), formats=formats, grid=write_grid)

    bath = None
    try:
        bath = BathSpec(
            alpha=vals.get("alpha", 0.025),
            xi=vals.get("xi", 2.23),
            temperature=vals.get("temperature", 4.0),
            mu=vals.get("mu", 0.023),
        )
    except DomainError as exc:
        problems.append(str(exc))

    if problems:
        raise ValidationError(problems)

    t_max = vals.get("t_max")
    if vals.get("steps") is not None:
        t_max = vals["steps"] * vals.get("dt", EngineConfig.dt)
    engine = EngineConfig(
        dt=vals.get("dt", EngineConfig.dt),
        t_max=t_max,
        svd_cutoff=vals.get("svd_cutoff", EngineConfig.svd_cutoff),
        memory_tolerance=vals.get("memory_tolerance", EngineConfig.memory_tolerance),
    )
    kappa = vals.get("kappa", 0.5)
    g = vals.get("g", 0.0)
    if sweep is not None and sweep.pin_kappa_to_4g:
        kappa = 4.0 * g
    return RunConfig(
        task=task,
        bath=bath,
        g=g,
        kappa=kappa,
        gamma=vals.get("gamma", 0.01),
        delta=vals.get("delta"),
        gamma_star=vals.get("gamma_star"),
        engine=engine,
        sweep=sweep,
        output=output,
        conversions=tuple(conversions),
    )


def parse_and_validate(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError([f"cannot read {path}: {exc}"]) from exc
    return parse_text(text, source=str(path))


def resolve_points(cfg: RunConfig):
    """One single-point config per sweep value, in sweep order.

    With ``pin_kappa_to_4g`` every point gets ``kappa = 4 g`` exactly.
    """
    if cfg.sweep is None:
        return [cfg]
    out = []
    for v in cfg.sweep.values:
        point = cfg
        if cfg.sweep.variable in ("temperature", "alpha", "xi"):
            point = replace(point, bath=replace(cfg.bath, **{cfg.sweep.variable: v}))
        else:
            point = replace(point, **{cfg.sweep.variable: v})
        if cfg.sweep.pin_kappa_to_4g:
            point = replace(point, kappa=4.0 * point.g)
        out.append(replace(point, sweep=None))
    return out


def echo(cfg: RunConfig):
    """Human-readable dump of the resolved configuration in ps units."""
    b = cfg.bath
    lines = [
        f"task        = {cfg.task}",
        f"alpha       = {b.alpha:g} ps^2",
        f"xi          = {b.xi:g} ps^-1",
        f"temperature = {b.temperature:g} K",
        f"mu          = {b.mu:g} ps^2",
        f"g           = {cfg.g:g} ps^-1",
        f"kappa       = {cfg.kappa:g} ps^-1",
        f"gamma       = {cfg.gamma:g} ps^-1",
        "delta       = " + ("resonance (-R_v)" if cfg.delta is None else f"{cfg.delta:g} ps^-1"),
        "gamma_star  = " + ("from bath" if cfg.gamma_star is None else f"{cfg.gamma_star:g} ps^-1"),
        f"dt          = {cfg.engine.dt:g} ps",
        "t_max       = " + ("auto" if cfg.engine.t_max is None else f"{cfg.engine.t_max:g} ps"),
        f"svd_cutoff  = {cfg.engine.svd_cutoff:g}",
    ]
    if cfg.sweep is not None:
        s = cfg.sweep
        lines.append(f"sweep       = {s.variable} over {len(s.values)} values" + (", kappa = 4 g" if s.pin_kappa_to_4g else ""))
    lines += [f"converted   : {c}" for c in cfg.conversions]
    return "\n".join(lines)
