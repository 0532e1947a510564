import configparser

import numpy as np
import pytest

import viscobeam as vb
from viscobeam import cli
from viscobeam.config import (DEFAULT_SCENARIO, ConfigError, load_run_config,
                              load_sweep_config)


def write_config(tmp_path, name="run.ini", **edits):
    cp = configparser.ConfigParser()
    cp.read_string(DEFAULT_SCENARIO)
    for section_key, value in edits.items():
        section, key = section_key.split("/", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value)
    path = tmp_path / name
    with open(path, "w") as fh:
        cp.write(fh)
    return str(path)


# ---------------------------------------------------------------------------
# config parsing

def test_default_scenario_roundtrip(tmp_path):
    path = write_config(tmp_path)
    cfg = load_run_config(path)
    ref = vb.default_run_config()
    assert cfg.n_modes == ref.n_modes == 8
    assert cfg.dt == ref.dt == 5e-4
    assert cfg.t_end == 20.0 and cfg.sample_stride == 10
    assert cfg.xi == "auto"
    assert cfg.spec.mu2 == 0.4 and cfg.spec.tau == 0.5


def test_malformed_kernel_section(tmp_path):
    path = write_config(tmp_path, **{"kernel/kernel": "mystery"})
    with pytest.raises(ConfigError, match="kernel"):
        load_run_config(path)


def test_missing_required_key(tmp_path):
    cp = configparser.ConfigParser()
    cp.read_string(DEFAULT_SCENARIO)
    cp.remove_option("problem", "mu1")
    path = tmp_path / "broken.ini"
    with open(path, "w") as fh:
        cp.write(fh)
    with pytest.raises(ConfigError, match=r"mu1.*\[problem\]|\[problem\].*mu1"):
        load_run_config(str(path))


def test_bad_value_reports_section_and_key(tmp_path):
    path = write_config(tmp_path, **{"problem/mu2": "fast"})
    with pytest.raises(ConfigError, match="mu2"):
        load_run_config(path)


def test_unreadable_path():
    with pytest.raises(ConfigError):
        load_run_config("/nonexistent/nowhere.ini")


def test_sweep_config_axes_sorted(tmp_path):
    path = write_config(tmp_path, **{"sweep/problem.tau": "0.4 0.6",
                                     "sweep/problem.mu2": "0.0 0.2",
                                     "sweep/jobs": "2"})
    sweep = load_sweep_config(path)
    assert [a for a, _ in sweep.axes] == ["problem.mu2", "problem.tau"]
    assert sweep.jobs == 2


def test_sweep_rejects_unknown_axis(tmp_path):
    path = write_config(tmp_path, **{"sweep/problem.length": "1 2"})
    with pytest.raises(ConfigError, match="problem.length"):
        load_sweep_config(path)


# ---------------------------------------------------------------------------
# CLI

def test_validate_default_exits_zero(tmp_path, capsys):
    path = write_config(tmp_path)
    code = cli.main(["validate", "--config", path])
    out = capsys.readouterr().out
    assert code == 0
    assert "overall: pass" in out
    assert "feedback-weight window" in out


def test_validate_gain_violation_nonzero(tmp_path, capsys):
    path = write_config(tmp_path, **{"problem/mu2": "2.0"})
    code = cli.main(["validate", "--config", path])
    captured = capsys.readouterr()
    assert code == 1
    assert "alpha2*mu2 <= alpha1*mu1" in captured.out + captured.err


def test_validate_parse_error_exit_two(tmp_path, capsys):
    path = write_config(tmp_path, **{"kernel/kernel": "mystery"})
    code = cli.main(["validate", "--config", path])
    assert code == 2
    assert "kernel" in capsys.readouterr().err


def test_run_writes_outputs(tmp_path, capsys):
    path = write_config(tmp_path, **{"numerics/t_end": "0.2",
                                     "numerics/dt": "0.01",
                                     "numerics/sample_stride": "2"})
    out = tmp_path / "out"
    code = cli.main(["run", "--config", path, "--out", str(out),
                     "--seed-free"])
    assert code == 0
    summary = (out / "summary.txt").read_text()
    assert "xi = 0.5" in summary
    assert "max_identity_residual" in summary
    traj = np.loadtxt(out / "trajectory.tsv")
    assert traj.shape[0] == 11
    assert "seed-free check passed" in capsys.readouterr().out


def test_run_zero_horizon_single_row(tmp_path):
    path = write_config(tmp_path, **{"numerics/t_end": "0.0"})
    out = tmp_path / "out0"
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 0
    summary = (out / "summary.txt").read_text()
    assert "not applicable" in summary
    data = np.loadtxt(out / "trajectory.tsv")
    assert data.ndim == 1  # exactly one row


def test_run_force_flags_monotonicity(tmp_path):
    path = write_config(tmp_path, **{"problem/mu2": "2.0",
                                     "numerics/t_end": "0.2",
                                     "numerics/dt": "0.01"})
    out = tmp_path / "outf"
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 1
    assert not (out / "summary.txt").exists()
    assert cli.main(["run", "--config", path, "--out", str(out),
                     "--force"]) == 0
    summary = (out / "summary.txt").read_text()
    assert "monotonicity not guaranteed" in summary


def test_run_determinism_bit_identical(tmp_path):
    path = write_config(tmp_path, **{"numerics/t_end": "0.1",
                                     "numerics/dt": "0.005"})
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    assert cli.main(["run", "--config", path, "--out", str(out1)]) == 0
    assert cli.main(["run", "--config", path, "--out", str(out2)]) == 0
    assert ((out1 / "trajectory.tsv").read_bytes()
            == (out2 / "trajectory.tsv").read_bytes())
    assert ((out1 / "summary.txt").read_bytes()
            == (out2 / "summary.txt").read_bytes())


def sweep_file(tmp_path, axes, t_end="1.5", name="sweep.ini"):
    edits = {"numerics/t_end": t_end, "numerics/dt": "0.01",
             "numerics/sample_stride": "5", "lyapunov/t0": "0.5"}
    edits.update(axes)
    return write_config(tmp_path, name=name, **edits)


def test_sweep_rows_and_gain_flags(tmp_path):
    path = sweep_file(tmp_path, {"sweep/problem.mu2": "0.0 0.3 1.2"})
    out = tmp_path / "sw"
    code = cli.main(["sweep", "--config", path, "--out", str(out)])
    assert code == 0
    lines = (out / "sweep.tsv").read_text().splitlines()
    assert lines[0].startswith("#")
    rows = [ln.split("\t") for ln in lines[1:]]
    assert [r[0] for r in rows] == ["0", "0.29999999999999999", "1.2"]
    # the 1.2 > mu1 point fails the gain condition and is skipped sans --force
    assert rows[0][3] == "pass" and rows[2][3] == "fail"
    assert rows[2][4] == "assumption-violating"
    assert rows[2][5].startswith("skipped")
    assert float(rows[0][1]) > 0.0 and float(rows[1][1]) > 0.0


def test_sweep_force_runs_flagged_point(tmp_path):
    path = sweep_file(tmp_path, {"sweep/problem.mu2": "1.2",
                                 "lyapunov/xi": "0.1"}, t_end="1.0")
    out = tmp_path / "swf"
    assert cli.main(["sweep", "--config", path, "--out", str(out),
                     "--force"]) == 0
    row = (out / "sweep.tsv").read_text().splitlines()[1].split("\t")
    assert row[4] == "assumption-violating"
    assert row[5] == "ok"
    float(row[1])  # fitted rate recorded whatever its sign


def test_sweep_empty_axes_single_point(tmp_path):
    path = sweep_file(tmp_path, {})
    out = tmp_path / "sw1"
    assert cli.main(["sweep", "--config", path, "--out", str(out)]) == 0
    lines = (out / "sweep.tsv").read_text().splitlines()
    assert len(lines) == 2


def test_sweep_parallel_matches_serial(tmp_path):
    path = sweep_file(tmp_path, {"sweep/problem.mu2": "0.0 0.3"},
                      t_end="1.0")
    out_s, out_p = tmp_path / "ser", tmp_path / "par"
    assert cli.main(["sweep", "--config", path, "--out", str(out_s)]) == 0
    assert cli.main(["sweep", "--config", path, "--out", str(out_p),
                     "--jobs", "2"]) == 0
    assert ((out_s / "sweep.tsv").read_bytes()
            == (out_p / "sweep.tsv").read_bytes())
