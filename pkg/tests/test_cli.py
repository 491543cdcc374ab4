import csv
import hashlib
import json

import numpy as np
import pytest

from phonon_decoupling.bath import BathSpec
from phonon_decoupling.cli import EXIT_ERROR, EXIT_OK, EXIT_PARTIAL, EXIT_VALIDATION, main
from phonon_decoupling.config import parse_text
from phonon_decoupling.presets import PRESETS, get_preset, list_presets, regime_map
from phonon_decoupling.runner import WORKERS_ENV, auto_t_max, default_workers, execute
from phonon_decoupling.system import SystemParams

# ------------------------------------------------------------------- presets


def test_presets_match_the_table():
    rows = {p.name: (p.hbar_g_meV, p.hbar_xi_meV) for p in list_presets()}
    assert len(rows) == 8
    assert rows["methylene blue"] == (305.0, 213.0)
    assert rows["WS2"] == (93.0, 53.0)
    assert rows["QD bowtie"] == (2.0, 2.23)
    assert get_preset("Methylene Blue") is get_preset("methylene blue")
    with pytest.raises(KeyError):
        get_preset("graphene")


@pytest.mark.parametrize("preset", PRESETS, ids=lambda p: p.name)
def test_presets_round_trip_through_ps_units(preset):
    g, xi = preset.round_trip()
    assert g == pytest.approx(preset.hbar_g_meV, abs=1e-10)
    assert xi == pytest.approx(preset.hbar_xi_meV, abs=1e-10)


def test_regime_classification():
    flags = {name: dec for name, _, _, dec in regime_map()}
    assert flags["WS2"] and flags["WSe2"] and flags["methylene blue"] and flags["QD bowtie"]
    assert not flags["NV photonic crystal"] and not flags["NV nanobeam"]
    assert not flags["QD tunable microcavity"] and not flags["QD photonic crystal"]


def test_presets_command(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "methylene blue" in out and out.count("\n") == 9


# ---------------------------------------------------------------- validation


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


RATES_SWEEP = """
[task]
name = rates
[bath]
temperature = 4
[system]
g = 1
kappa = 0.5
[sweep]
variable = g
values = {values}
"""

DYNAMIC = """
[task]
name = {task}
[bath]
temperature = 4
[system]
g = 0.4
kappa = 2
[engine]
dt = 0.1
svd_cutoff = 1e-5
"""


def test_validate_command_echoes(tmp_path, capsys):
    assert main(["validate", _write(tmp_path, RATES_SWEEP.format(values="1, 2"))]) == EXIT_OK
    assert "sweep       = g over 2 values" in capsys.readouterr().out


def test_validation_failure_exit_code(tmp_path, capsys):
    assert main(["validate", _write(tmp_path, "")]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "task.name" in err and "system.kappa" in err
    assert main(["run", _write(tmp_path, "[task]\nname = nope\n")]) == EXIT_VALIDATION


# ---------------------------------------------------------------------- runs


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_regime_map_run_and_manifest(tmp_path):
    out = tmp_path / "out"
    assert main(["run", _write(tmp_path, "[task]\nname = regime-map\n"), "--out", str(out)]) == EXIT_OK
    rows = _read_csv(out / "regime_map.csv")
    assert rows[0] == ["preset", "two_g_meV", "xi_meV", "decoupled"]
    assert len(rows) == 9
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["files"]) == {"regime_map.csv", "summary.json"}
    for name, digest in manifest["files"].items():
        assert _sha(out / name) == digest
    assert len(manifest["config_hash"]) == 64 and manifest["version"]


def test_rates_sweep_peaks_near_the_spectral_density_maximum(tmp_path):
    cfg = parse_text(RATES_SWEEP.format(values="linspace(0.2, 4, 20)"))
    outcome = execute(cfg, out_dir=tmp_path, workers=2)
    assert outcome.status == 0
    rows = _read_csv(tmp_path / "sweep.csv")
    header = rows[0]
    g = np.array([float(r[0]) for r in rows[1:]])
    gamma = np.array([float(r[header.index("gamma_a")]) for r in rows[1:]])
    g_v = g * np.array([float(r[header.index("B_v")]) for r in rows[1:]])
    nu_peak = BathSpec().xi * np.sqrt(1.5)
    assert abs(2 * g_v[np.argmax(gamma)] - nu_peak) < 2 * (g[1] - g[0]) * 2


def test_sweeps_are_deterministic_and_order_independent(tmp_path):
    forward = parse_text(RATES_SWEEP.format(values="0.5, 1.0, 1.5, 2.0"))
    backward = parse_text(RATES_SWEEP.format(values="2.0, 1.5, 1.0, 0.5"))
    execute(forward, out_dir=tmp_path / "a", workers=2)
    execute(forward, out_dir=tmp_path / "b", workers=2)
    execute(backward, out_dir=tmp_path / "c", workers=1)
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    a = _read_csv(tmp_path / "a" / "sweep.csv")
    c = _read_csv(tmp_path / "c" / "sweep.csv")
    assert a[0] == c[0]
    assert a[1:] == c[1:][::-1]


def test_varpol_sweep_reproduces_rising_renormalisation(tmp_path):
    cfg = parse_text(RATES_SWEEP.replace("rates", "varpol").format(values="linspace(0, 12, 7)"))
    execute(cfg, out_dir=tmp_path, workers=1)
    rows = _read_csv(tmp_path / "sweep.csv")
    B = [float(r[rows[0].index("B_v")]) for r in rows[1:]]
    assert np.all(np.diff(B) > 0) and B[-1] > 0.99


def test_failed_point_does_not_abort_the_sweep(tmp_path, capsys):
    text = RATES_SWEEP.format(values="0, 0.025").replace("variable = g", "variable = alpha")
    text = text.replace("kappa = 0.5", "kappa = 0.5\ndelta = 0")
    assert main(["run", _write(tmp_path, text), "--out", str(tmp_path / "o"), "--workers", "1"]) == EXIT_PARTIAL
    rows = _read_csv(tmp_path / "o" / "sweep.csv")
    assert [r[1] for r in rows[1:]] == ["ok", "failed"]
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert [f["sweep_value"] for f in manifest["failed_points"]] == [0.025]


def test_single_point_engine_error_exit_code(tmp_path, capsys):
    text = RATES_SWEEP.format(values="1, 2").split("[sweep]")[0].replace("kappa = 0.5", "kappa = 0.5\ndelta = 0.5")
    assert main(["run", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "delta_v" in capsys.readouterr().err


def test_dynamic_run_writes_curves_and_consistent_scalars(tmp_path):
    text = DYNAMIC.format(task="spectrum") + "[output]\ngrid = true\n"
    assert main(["run", _write(tmp_path, text), "--out", str(tmp_path / "o"), "--seedless"]) == EXIT_OK
    out = tmp_path / "o"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["spectrum_norm_over_2pi"] == pytest.approx(summary["eta"], rel=1e-2)
    assert 0 < summary["indistinguishability"] <= 1
    assert _read_csv(out / "spectrum.csv")[0] == ["omega_ps_inv", "S"]
    assert _read_csv(out / "populations.csv")[0] == ["t_ps", "photon", "exciton"]
    grid = _read_csv(out / "grid.csv")
    assert grid[0] == ["t1_ps", "t2_ps", "re", "im"]
    n = len(_read_csv(out / "populations.csv")) - 1
    assert len(grid) - 1 == n * (n + 1) // 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["bond_dimension"]["max"] >= 1
    assert set(manifest["files"]) == {"spectrum.csv", "populations.csv", "grid.csv", "summary.json"}


def test_convergence_mode_records_the_ladder(tmp_path):
    cfg = parse_text(DYNAMIC.format(task="efficiency"))
    outcome = execute(cfg, out_dir=tmp_path, converge=True)
    ladder = outcome.manifest["diagnostics"][0]["ladder"]
    assert len(ladder) >= 2
    assert ladder[1]["dt"] == ladder[0]["dt"] / 2
    assert ladder[1]["svd_cutoff"] == pytest.approx(ladder[0]["svd_cutoff"] / 10)
    if outcome.manifest["diagnostics"][0]["converged"]:
        assert ladder[-1]["relative_change"] < 1e-3


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert default_workers() == 3
    monkeypatch.delenv(WORKERS_ENV)
    assert default_workers() >= 1


def test_automatic_window_reaches_the_decay_target():
    p = SystemParams(g=0.4, kappa=2.0, gamma=0.01)
    t = auto_t_max(p)
    assert 5 < t < 200
