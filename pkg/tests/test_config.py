import pytest
from hypothesis import given
from hypothesis import strategies as st

from phonon_decoupling.config import echo, parse_and_validate, parse_text, resolve_points
from phonon_decoupling.errors import ValidationError
from phonon_decoupling.units import mev_to_ps

MINIMAL = """
[task]
name = spectrum

[bath]
temperature = 4

[system]
g = 10
kappa = 0.5
"""


def test_minimal_config_gets_the_reference_parameters():
    cfg = parse_text(MINIMAL)
    assert cfg.bath.alpha == 0.025 and cfg.bath.xi == 2.23
    assert cfg.kappa == 0.5 and cfg.gamma == 0.01
    assert cfg.delta is None and cfg.gamma_star is None
    text = echo(cfg)
    for line in ("alpha       = 0.025 ps^2", "xi          = 2.23 ps^-1", "kappa       = 0.5 ps^-1", "gamma       = 0.01 ps^-1"):
        assert line in text


def test_empty_file_names_every_required_field(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("")
    with pytest.raises(ValidationError) as info:
        parse_and_validate(path)
    joined = "\n".join(info.value.problems)
    for field in ("task.name", "bath.temperature", "system.g", "system.kappa"):
        assert field in joined


def test_unreadable_file_is_a_validation_error(tmp_path):
    with pytest.raises(ValidationError, match="cannot read"):
        parse_and_validate(tmp_path / "missing.ini")


def test_every_problem_is_reported_at_once():
    text = MINIMAL + "\n[engine]\ndt = -1\nfoo = 2\n[extra]\nx = 1\n"
    text = text.replace("kappa = 0.5", "kappa = abc")
    with pytest.raises(ValidationError) as info:
        parse_text(text)
    problems = info.value.problems
    assert any("dt must be > 0" in p for p in problems)
    assert any("unknown key engine.foo" in p for p in problems)
    assert any("unknown section [extra]" in p for p in problems)
    assert any("kappa: cannot parse" in p for p in problems)


def test_unknown_task_is_rejected():
    with pytest.raises(ValidationError, match="task.name"):
        parse_text(MINIMAL.replace("spectrum", "dance"))


def test_millielectronvolt_values_are_converted_and_echoed():
    cfg = parse_text(MINIMAL.replace("g = 10", "g = 2.0 meV"))
    assert cfg.g == pytest.approx(2.0 * 1.5193, rel=1e-4)
    assert cfg.g == mev_to_ps(2.0)
    assert "g = 2.0 meV ->" in echo(cfg)
    with pytest.raises(ValidationError, match="meV"):
        parse_text(MINIMAL + "\n[engine]\ndt = 1 meV\n")


def test_keywords_for_resonance_and_bath_dephasing():
    cfg = parse_text(MINIMAL.replace("kappa = 0.5", "kappa = 0.5\ndelta = resonance\ngamma_star = auto"))
    assert cfg.delta is None and cfg.gamma_star is None
    cfg = parse_text(MINIMAL.replace("kappa = 0.5", "kappa = 0.5\ndelta = -0.1\ngamma_star = 0.002"))
    assert cfg.delta == -0.1 and cfg.gamma_star == 0.002


def test_steps_or_t_max():
    cfg = parse_text(MINIMAL + "\n[engine]\ndt = 0.1\nsteps = 50\n")
    assert cfg.engine.t_max == pytest.approx(5.0)
    with pytest.raises(ValidationError, match="not both"):
        parse_text(MINIMAL + "\n[engine]\nsteps = 50\nt_max = 3\n")


@given(g=st.lists(st.floats(0.01, 20), min_size=2, max_size=8))
def test_pinned_sweep_has_kappa_four_g_everywhere(g):
    values = ", ".join(repr(v) for v in g)
    cfg = parse_text(MINIMAL + f"\n[sweep]\nvariable = g\nvalues = {values}\npin_kappa_to_4g = true\n")
    points = resolve_points(cfg)
    assert [p.g for p in points] == list(cfg.sweep.values)
    assert all(p.kappa == 4.0 * p.g for p in points)
    assert all(p.sweep is None for p in points)


def test_sweep_values_from_linspace_and_bath_variables():
    cfg = parse_text(MINIMAL + "\n[sweep]\nvariable = temperature\nvalues = linspace(0, 150, 4)\n")
    points = resolve_points(cfg)
    assert [p.bath.temperature for p in points] == [0.0, 50.0, 100.0, 150.0]
    assert all(p.g == 10.0 for p in points)


@pytest.mark.parametrize(
    "sweep, message",
    [
        ("variable = g\nvalues = 1", "at least 2"),
        ("variable = colour\nvalues = 1, 2", "sweep.variable"),
        ("variable = kappa\nvalues = 1, 2\npin_kappa_to_4g = true", "conflicts"),
        ("variable = g\nvalues = 1, 2\npin_kappa_to_4g = maybe", "boolean"),
    ],
)
def test_bad_sweeps(sweep, message):
    with pytest.raises(ValidationError, match=message):
        parse_text(MINIMAL + "\n[sweep]\n" + sweep + "\n")


def test_sweep_task_needs_a_sweep_section():
    with pytest.raises(ValidationError, match="sweep"):
        parse_text(MINIMAL.replace("spectrum", "sweep"))


def test_regime_map_needs_only_the_task():
    cfg = parse_text("[task]\nname = regime-map\n")
    assert cfg.task == "regime-map"


def test_output_section():
    cfg = parse_text(MINIMAL + "\n[output]\ndirectory = out\nformats = json\ngrid = yes\n")
    assert cfg.output.directory == "out" and cfg.output.formats == ("json",) and cfg.output.grid
    with pytest.raises(ValidationError, match="formats"):
        parse_text(MINIMAL + "\n[output]\nformats = xml\n")


def test_config_hash_tracks_content():
    a = parse_text(MINIMAL)
    assert a.config_hash() == parse_text(MINIMAL).config_hash()
    assert a.config_hash() != parse_text(MINIMAL.replace("g = 10", "g = 9")).config_hash()
    assert len(a.config_hash()) == 64
