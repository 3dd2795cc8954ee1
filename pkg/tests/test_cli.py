import csv
import io
import subprocess
import sys

import pytest

from forchfem import cli
from forchfem.analysis import CSV_HEADER
from forchfem.config import ConfigError, RunConfiguration, from_dict, load_config
from forchfem.properties import PropertyResult


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_solve_csv(tmp_path, capsys):
    cfg = write(tmp_path, 'case = "example2"\nmesh_sizes = [4]\nq_list = [4.0]\n')
    assert cli.main(["solve", "--config", cfg]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:3] == ["step", "t", "iterations"] and "lq_norm_4" in rows[0]
    assert len(rows) == 1 + 5  # initial + 4 steps
    assert rows[-1][-2] and not rows[-2][-2]
    assert float(rows[-1][-2]) < 0.05


def test_solve_markdown_to_file(tmp_path, capsys):
    out = tmp_path / "o.md"
    cfg = write(tmp_path, 'case = "steady_linear"\norder = 1\n')
    assert cli.main(["solve", "--config", cfg, "--N", "2", "--format", "markdown", "--output", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# steady_linear, N=2, r=1") and "L2 error at T" in text
    assert "l2_error=" in capsys.readouterr().out


def test_converge_csv(tmp_path):
    out = tmp_path / "t.csv"
    cfg = write(tmp_path, f'mesh_sizes = [2, 4]\n[output]\npath = "{out}"\n')
    assert cli.main(["converge", "--config", cfg]) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == CSV_HEADER
    assert rows[1][4] == "" and float(rows[2][4]) > 0.5


def test_converge_single_size_blank_rates(tmp_path, capsys):
    cfg = write(tmp_path, "mesh_sizes = [2]\n")
    assert cli.main(["converge", "--config", cfg, "--format", "markdown"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and out[2].split("|")[3].strip() == "-"


def test_converge_parallel_matches_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg = write(tmp_path, "mesh_sizes = [2, 4]\n")
    assert cli.main(["converge", "--config", cfg, "--output", str(a)]) == 0
    assert cli.main(["converge", "--config", cfg, "--output", str(b), "--jobs", "2"]) == 0
    assert a.read_text() == b.read_text()


def test_verify(capsys):
    assert cli.main(["verify", "--seed", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1] == "10/10 properties passed"
    assert all(line.startswith("PASS") for line in out[:-1])


def test_verify_failure_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "run_property_suite", lambda law, seed: [PropertyResult("root", False, "bad")])
    assert cli.main(["verify"]) == 1
    assert capsys.readouterr().out.startswith("FAIL")


@pytest.mark.parametrize("args, text", [
    (["verify", "--law", "0:0,1:1"], None),
    (["verify", "--law", "zero"], None),
    (["solve"], "mesh_sizes = [2, 4]\n"),
    (["solve"], "case = 'nope'\n"),
    (["solve"], "[time]\ndt = -1\n"),
    (["converge"], "mesh_sizes = [2, 6]\n"),
    (["solve", "--N", "2"], "case = 'example1'\n[law]\nterms = [[0, 1], [2, 1]]\n"),
    (["solve"], "T = = 1\n"),
])
def test_config_errors_exit_2(tmp_path, capsys, args, text):
    if text is not None:
        args = args + ["--config", write(tmp_path, text)]
    assert cli.main(args) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(capsys):
    assert cli.main(["solve", "--config", "/nonexistent.toml"]) == 2


def test_nonconvergence_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, "mesh_sizes = [4]\n[solver]\nmax_nonlinear_iters = 1\nnonlinear_tol = 1e-14\n")
    assert cli.main(["solve", "--config", cfg]) == 3
    assert "solver error (step 1)" in capsys.readouterr().err


def test_config_messages_name_field():
    with pytest.raises(ConfigError, match=r"^time\.dt: must be positive"):
        from_dict({"time": {"dt": 0}})
    with pytest.raises(ConfigError, match=r"^solver\.linearization"):
        from_dict({"solver": {"linearization": "bfgs"}})
    with pytest.raises(ConfigError, match=r"^order"):
        from_dict({"order": 3})


def test_config_defaults_and_dt_policy(tmp_path):
    assert load_config(write(tmp_path, "")) == RunConfiguration()
    cfg = from_dict({"time": {"dt": 0.125}})
    assert cfg.dt_policy == "fixed" and cfg.dt_for(64) == 0.125
    assert RunConfiguration().dt_for(16) == 1 / 16


def test_entry_point():
    r = subprocess.run([sys.executable, "-m", "forchfem.cli", "verify", "--law", "0:1,1:1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "10/10" in r.stdout
