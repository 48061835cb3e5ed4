"""
Tests for experiment config files, presets and command-line overrides
"""

import dataclasses

import numpy as np
import pytest

from higgs_solver.config import RuntimeConfig
from higgs_solver.core.field import Geometry, Precision
from higgs_solver.core.integrator import StopReason, run_simulation
from higgs_solver.experiment import (
    ConfigParseError,
    ConfigValidationError,
    dump_config,
    load_config,
)
from higgs_solver.handlers.common import describe, resolve_experiment
from higgs_solver.presets import PRESET_NAMES, preset_mapping
from higgs_solver.utils import ValidationError

CUSTOM = """\
mu2: 9
lambda: 2
t_end: 1.0
n: 32
initial:
  phi0:
    - weight: 1.0
      bumps:
        - {center: [CENTER], radius: 0.3}
"""


@pytest.fixture
def runtime():
    """Runtime settings with a small default resolution"""
    return RuntimeConfig(default_n=64, output_root="runs")


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_every_preset_loads(name):
    """All seven presets validate at a modest resolution"""
    config = load_config(f"preset: {name}\n", default_n=64)
    assert config.preset == name
    assert config.n == 64
    assert config.scaling == 5.0
    assert config.description


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_every_preset_runs_ten_steps(name):
    """Each preset takes ten steps at N = 64 and stays finite"""
    config = load_config(f"preset: {name}\n", default_n=64)
    params = config.params()
    params = dataclasses.replace(params, t_end=10 * params.dt)
    result = run_simulation(config.initial, params, config.grid())

    assert result.stop_reason is StopReason.COMPLETED
    assert result.steps == 10
    assert np.isfinite(result.final_state.data).all()


def test_preset_values():
    """example3 carries the bubble data and its output times"""
    config = load_config("preset: example3\n", default_n=64)
    assert (config.mu2, config.lam, config.t_end) == (9.0, 2.0, 1.0)
    assert config.line_times == (0.21, 0.22, 0.23, 0.4)
    assert config.volume_times == (0.4,)
    assert [t.weight for t in config.initial.phi1_terms] == [-5.0]
    assert config.params().dt == pytest.approx(1.0 / (64 * 20))


def test_preset_mapping_is_a_copy():
    """Editing a returned mapping leaves the preset alone"""
    mapping = preset_mapping("example1")
    mapping["line_times"].append(99.0)
    assert 99.0 not in preset_mapping("example1")["line_times"]
    with pytest.raises(KeyError):
        preset_mapping("example8")


def test_file_keys_override_the_preset():
    """A shorter t_end drops the later preset output times"""
    config = load_config("preset: example3\nt_end: 0.3\nn: 32\n")
    assert config.t_end == 0.3
    assert config.n == 32
    assert config.line_times == (0.21, 0.22, 0.23)
    assert config.volume_times == ()


def test_radial_geometry_converts_centered_data():
    """Cube bumps at the center become radial bumps"""
    config = load_config("preset: example3\ngeometry: radial1d\n", default_n=64)
    assert config.geometry is Geometry.RADIAL1D
    assert config.volume_times == ()
    assert all(t.dimension == 1 for t in config.initial.terms())


def test_custom_config_without_preset():
    """Explicit keys alone describe an experiment"""
    config = load_config(CUSTOM.replace("CENTER", "0.5, 0.5, 0.5"))
    assert config.preset is None
    assert config.n == 32
    assert config.initial.phi1_terms == ()
    assert config.precision is Precision.DOUBLE
    # YAML 1.1 reads 1e6 as a string
    assert load_config("preset: example1\nblowup_threshold: 1e6\n").blowup_threshold == 1e6


def test_error_names_key_line_and_column():
    """Invalid values are reported with their position"""
    with pytest.raises(ConfigValidationError) as excinfo:
        load_config("preset: example1\nn: 64\nmu2: nine\n")
    error = excinfo.value
    assert error.key_path == "mu2"
    assert (error.line, error.column) == (3, 6)
    assert "line 3, column 6" in str(error)


def test_error_in_nested_bump():
    """A bump reaching the boundary is reported at its list entry"""
    with pytest.raises(ConfigValidationError) as excinfo:
        load_config(CUSTOM.replace("CENTER", "0.2, 0.5, 0.5"))
    assert excinfo.value.key_path == "initial.phi0[0].bumps[0]"
    assert excinfo.value.line == 9


@pytest.mark.parametrize(
    "text, key_path",
    [
        ("foo: 1\n", "foo"),
        ("mu2: 9\n", "lambda"),
        ("preset: example1\nn: 8\n", "n"),
        ("preset: example1\nline_times: [5.0]\n", "line_times"),
        ("preset: example1\nline_times: [0.5, -0.5]\n", "line_times[1]"),
        ("preset: example1\ndt: -1\n", "dt"),
        ("preset: example1\nprecision: quad\n", "precision"),
        ("preset: example9\n", "preset"),
        ("preset: example7\nn: 9\n", "initial"),
        ("preset: example3\ngeometry: radial1d\nvolume_times: [0.4]\n", "volume_times"),
    ],
)
def test_invalid_configs(text, key_path):
    """Each invalid key is named in the error"""
    with pytest.raises(ConfigValidationError) as excinfo:
        load_config(text, default_n=64)
    assert excinfo.value.key_path == key_path


def test_parse_errors():
    """Broken YAML and non-mapping documents are parse errors"""
    with pytest.raises(ConfigParseError) as excinfo:
        load_config("mu2: [1, 2\n")
    assert excinfo.value.line is not None

    with pytest.raises(ConfigParseError):
        load_config("- 1\n- 2\n")


def test_dump_and_reload():
    """Dumped configs load back equal"""
    config = load_config("preset: example7\nn: 48\nprecision: single\n")
    assert load_config(dump_config(config)) == config


def test_overrides_through_resolve(runtime):
    """Command-line overrides pass the same validation as file keys"""
    experiment = resolve_experiment({"preset": "example3", "n": 32, "t_end": 0.3}, runtime)
    assert experiment.n == 32
    assert experiment.line_times == (0.21, 0.22, 0.23)

    radial = resolve_experiment({"preset": "example3", "geometry": "radial1d"}, runtime)
    assert radial.geometry is Geometry.RADIAL1D
    assert radial.n == 64

    with pytest.raises(ConfigValidationError):
        resolve_experiment({"preset": "example3", "n": 4}, runtime)
    with pytest.raises(ValidationError):
        resolve_experiment({}, runtime)


def test_config_file_and_preset_are_exclusive(tmp_path, runtime):
    """A file and a preset cannot both be given"""
    path = tmp_path / "experiment.yaml"
    path.write_text("preset: example1\n")
    assert resolve_experiment({"config_path": str(path)}, runtime).preset == "example1"

    with pytest.raises(ValidationError):
        resolve_experiment({"config_path": str(path), "preset": "example2"}, runtime)
    with pytest.raises(ValidationError):
        resolve_experiment({"config_path": str(tmp_path / "missing.yaml")}, runtime)


def test_describe():
    """One-line experiment summary"""
    config = load_config("preset: example2\n", default_n=64)
    assert describe(config) == (
        "example2: geometry=cube3d N=64 L=5 mu2=1 lambda=-1 t_end=16 precision=double"
    )


def test_runtime_config_from_env(monkeypatch):
    """Environment variables set the runtime configuration"""
    monkeypatch.setenv("HIGGS_DEFAULT_N", "48")
    monkeypatch.setenv("HIGGS_LOG_FORMAT", "JSON")
    monkeypatch.setenv("HIGGS_VOLUME_BINARY", "true")
    config = RuntimeConfig.from_env()
    assert config.default_n == 48
    assert config.log_format == "json"
    assert config.volume_binary
