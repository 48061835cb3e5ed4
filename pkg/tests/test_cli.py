"""
Tests for the command-line surface and its exit codes
"""

import io
import os
import sys

import pytest
import structlog

from higgs_solver.cli import build_parser, configure_logging, main
from higgs_solver.config import RuntimeConfig
from higgs_solver.experiment import load_config
from higgs_solver.formats import load_checkpoint, read_series_csv


@pytest.fixture(autouse=True)
def small_runs(monkeypatch, tmp_path):
    """Small default resolution and an isolated output root"""
    monkeypatch.setenv("HIGGS_DEFAULT_N", "32")
    monkeypatch.setenv("HIGGS_OUTPUT_ROOT", str(tmp_path / "runs"))
    monkeypatch.setenv("HIGGS_LOG_LEVEL", "WARNING")


def test_parser_commands():
    """Every command parses with its options"""
    parser = build_parser()
    args = parser.parse_args(["run", "--preset", "example3", "--n", "64", "--t-end", "0.5"])
    assert (args.command, args.preset, args.n, args.t_end) == ("run", "example3", 64, 0.5)

    args = parser.parse_args(["duffing", "--lambda", "2", "--trajectory", "1", "0"])
    assert getattr(args, "lambda") == 2.0
    assert args.trajectory == [1.0, 0.0]

    args = parser.parse_args(["resume", "runs/example3", "--t-end", "2"])
    assert (args.run_dir, args.t_end) == ("runs/example3", 2.0)


def test_logging_follows_the_current_stderr(monkeypatch):
    """Log lines go to sys.stderr as it is at write time, not at setup"""
    configure_logging(RuntimeConfig(log_level="INFO"))

    first = io.StringIO()
    monkeypatch.setattr(sys, "stderr", first)
    structlog.get_logger("higgs_solver.test").info("first_event")

    second = io.StringIO()
    monkeypatch.setattr(sys, "stderr", second)
    first.close()
    structlog.get_logger("higgs_solver.test").info("second_event")

    assert "second_event" in second.getvalue()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["simulate"],
        ["run", "--preset", "example9"],
        ["run", "--preset", "example1", "--config", "x.yaml"],
        ["run", "--n", "many"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    """Malformed command lines exit with 1"""
    assert main(argv) == 1
    assert "❌" in capsys.readouterr().err


def test_presets_listing(capsys):
    """All presets are listed with their parameters"""
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "📋 7 presets:" in out
    assert "example2: geometry=cube3d N=32 L=5 mu2=1 lambda=-1" in out
    assert "two bubbles merging" in out


def test_presets_show_is_loadable(capsys):
    """--show prints config text that loads back"""
    assert main(["presets", "--show", "example3"]) == 0
    config = load_config(capsys.readouterr().out)
    assert config.preset == "example3"
    assert config.n == 32


def test_duffing_equilibria(capsys):
    """mu2 = 9, lambda = 2 has stable points at +-2.1213"""
    assert main(["duffing", "--mu2", "9", "--lambda", "2", "--equilibria"]) == 0
    out = capsys.readouterr().out
    assert "stable 2.1213, -2.1213; unstable 0.0000" in out


def test_duffing_trajectory_and_portrait(tmp_path, capsys):
    """Trajectories are labeled and portraits are written"""
    portrait = str(tmp_path / "portrait.csv")
    argv = [
        "duffing",
        "--trajectory", "1", "0",
        "--portrait", portrait,
        "--samples", "5",
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "Trajectory from (1, 0): stable_pos" in out
    assert "Equilibria" not in out
    assert len(read_series_csv(portrait)) == 25


def test_duffing_predicate(capsys):
    """The bubble condition holds for example3 and fails for example5"""
    assert main(["duffing", "--predicate", "example3"]) == 0
    assert "holds on all" in capsys.readouterr().out

    assert main(["duffing", "--predicate", "example5"]) == 0
    assert "fails at node (16, 16, 16)" in capsys.readouterr().out


def test_invalid_duffing_parameters_exit_1(capsys):
    """Parameters without two stable points are an error"""
    assert main(["duffing", "--mu2", "-1"]) == 1
    assert "❌ Error executing duffing" in capsys.readouterr().err


def test_run_and_resume(tmp_path, capsys):
    """A short run writes its outputs; resuming continues the series"""
    out_dir = tmp_path / "example1"
    config = tmp_path / "short.yaml"
    config.write_text(
        "preset: example1\n"
        "n: 16\n"
        "t_end: 0.05\n"
        "checkpoint_every: 1\n"
        f"output_dir: {out_dir}\n"
    )

    assert main(["run", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert "✅ Run completed at t = 0.05" in out
    for name in ("config.yaml", "diagnostics.csv", "monitors.csv", "checkpoint.bin"):
        assert (out_dir / name).exists()
    rows = read_series_csv(str(out_dir / "diagnostics.csv"))
    assert [float(row["t"]) for row in rows] == pytest.approx([0.0, 0.05])
    assert load_checkpoint(str(out_dir / "checkpoint.bin")).t == pytest.approx(0.05)

    assert main(["resume", str(out_dir), "--t-end", "0.1"]) == 0
    out = capsys.readouterr().out
    assert "Resumed from t = 0.05" in out
    assert "✅ Run completed at t = 0.1" in out
    rows = read_series_csv(str(out_dir / "diagnostics.csv"))
    assert float(rows[-1]["t"]) == pytest.approx(0.1)
    assert load_checkpoint(str(out_dir / "checkpoint.bin")).t == pytest.approx(0.1)
    assert load_config((out_dir / "config.yaml").read_text()).t_end == 0.1


def test_resume_needs_a_later_end_time(tmp_path, capsys):
    """A checkpoint at t_end has nothing left to run"""
    out_dir = tmp_path / "done"
    argv = ["run", "--preset", "example1", "--n", "16", "--t-end", "0.025"]
    config = tmp_path / "c.yaml"
    config.write_text("preset: example1\nn: 16\nt_end: 0.025\ncheckpoint_every: 1\n")
    assert main(argv + ["--output-dir", str(tmp_path / "plain")]) == 0
    assert main(["run", "--config", str(config), "--output-dir", str(out_dir)]) == 0
    capsys.readouterr()

    assert main(["resume", str(out_dir)]) == 1
    assert "not before t_end" in capsys.readouterr().err
    assert main(["resume", str(tmp_path / "plain")]) == 1


def test_lines_are_written_at_their_times(tmp_path):
    """Line and volume snapshots land in their subdirectories"""
    out_dir = tmp_path / "snap"
    config = tmp_path / "snap.yaml"
    config.write_text(
        "preset: example3\n"
        "n: 16\n"
        "t_end: 0.05\n"
        "line_times: [0.025]\n"
        "volume_times: [0.05]\n"
        "lines: [midline_x, main_diagonal]\n"
    )
    assert main(["run", "--config", str(config), "--output-dir", str(out_dir)]) == 0
    assert sorted(os.listdir(out_dir / "lines")) == [
        "main_diagonal_t0.0250.csv",
        "midline_x_t0.0250.csv",
    ]
    assert os.listdir(out_dir / "volumes") == ["phi_t0.0500.vtk"]


def test_radial_blow_up_exits_2(tmp_path, capsys):
    """The tachyonic example blows up after its dispersive phase and keeps its last finite state"""
    out_dir = tmp_path / "example2"
    argv = ["radial", "--preset", "example2", "--n", "32", "--output-dir", str(out_dir)]
    assert main(argv) == 2
    out = capsys.readouterr().out
    assert "❌ Solver stop: blow_up" in out

    state = load_checkpoint(str(out_dir / "radial" / "stop_state.bin"))
    assert state.blown_up
    assert 3.5 < state.t < 16.0


def test_radial_against_cube(tmp_path, capsys):
    """--compare-3d reports the mid-line discrepancy"""
    argv = [
        "radial", "--preset", "example1", "--n", "16", "--t-end", "0.05",
        "--output-dir", str(tmp_path / "r"), "--compare-3d",
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "Mid-line vs radial max difference at t = 0.05" in out
    assert (tmp_path / "r" / "cube" / "diagnostics.csv").exists()
    assert (tmp_path / "r" / "radial" / "diagnostics.csv").exists()


def test_grid_convergence_study(tmp_path, capsys):
    """Each resolution is compared against the reference"""
    argv = [
        "compare", "--resolutions", "12", "16", "--reference", "24",
        "--time", "0.05", "--output-dir", str(tmp_path),
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "N=12 vs N=24: max|diff|" in out
    assert "Differences strictly decrease with N" in out
    assert sorted(os.listdir(tmp_path / "compare")) == [
        "midline_x_n12_vs_n24.csv",
        "midline_x_n16_vs_n24.csv",
    ]

    assert main(["compare", "--resolutions", "24", "--reference", "16"]) == 1


def test_precision_study(tmp_path, capsys):
    """Single and double runs are compared at one resolution"""
    argv = [
        "compare", "--precision-study", "--n", "16", "--time", "0.05",
        "--output-dir", str(tmp_path),
    ]
    assert main(argv) == 0
    assert "single vs double: max|diff|" in capsys.readouterr().out
    assert (tmp_path / "compare" / "midline_x_n16_single_vs_double.csv").exists()
