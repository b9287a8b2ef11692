import json

import numpy as np
import pytest

from sosdim.cli import main
from sosdim.dataio import write_csv
from sosdim.generators import gen_setting


@pytest.fixture
def data_csv(tmp_path):
    x, _, _ = gen_setting(1, 400, np.random.default_rng(3))
    path = tmp_path / "x.csv"
    write_csv(path, x, [f"x{i}" for i in range(1, 6)])
    return path


def test_test_command(data_csv, tmp_path, capsys):
    out = tmp_path / "t.json"
    code = main(["test", str(data_csv), "--d", "2", "--method", "amuse", "--R", "30",
                 "--seed", "4", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["d"] == 2 and report["R"] == 30 and report["method"] == "amuse"
    assert "p-value" in capsys.readouterr().out


def test_test_stdout_tsv(data_csv, capsys):
    assert main(["test", str(data_csv), "--d", "1", "--method", "amuse", "--R", "10",
                 "--format", "tsv"]) == 0
    assert capsys.readouterr().out.startswith("d\tmethod")


def test_estimate_prints_d_hat_last(data_csv, tmp_path, capsys):
    report = tmp_path / "e.json"
    code = main(["estimate", str(data_csv), "--method", "amuse", "--R", "30",
                 "--strategy", "parametric", "--estimator", "bisect", "--out", str(report)])
    assert code == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == "2"
    assert json.loads(report.read_text())["estimator"] == "divide-conquer"


def test_separate(data_csv, tmp_path):
    out, rep = tmp_path / "s.csv", tmp_path / "sol.json"
    assert main(["separate", str(data_csv), "--lags", "1..4", "--out", str(out),
                 "--report", str(rep)]) == 0
    sources = np.loadtxt(out, delimiter=",", skiprows=1)
    assert sources.shape == (400, 5)
    assert json.loads(rep.read_text())["lags"] == [1, 2, 3, 4]


def test_simulate(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[study]\nT = 200\nmethods = amuse\nstrategies = np3\nR = 10\n"
                   "repetitions = 3\nhypotheses = 2\n")
    out = tmp_path / "t.tsv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "setting\tT\tstrategy\tAMUSE(1):H0,2"
    assert lines[1].startswith("1\t200\tnon-parametric III\t")


def test_env_override(data_csv, monkeypatch, capsys):
    monkeypatch.setenv("SOSDIM_R", "7")
    monkeypatch.setenv("SOSDIM_METHOD", "amuse")
    assert main(["test", str(data_csv), "--d", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["R"] == 7


def test_exit_codes(data_csv, tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n4,5\n")
    assert main(["test", str(bad), "--d", "1"]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["test", str(data_csv), "--d", "5", "--R", "5"]) == 2
    assert main(["test", str(data_csv), "--d", "1", "--method", "amuse", "--lags", "1,2"]) == 2
    assert main(["test", str(tmp_path / "missing.csv"), "--d", "1"]) == 4
    assert main(["test", str(data_csv), "--d", "1", "--R", "5", "--method", "amuse",
                 "--out", str(tmp_path / "no" / "r.json")]) == 4

    x = np.random.default_rng(0).standard_normal((50, 1))
    singular = tmp_path / "sing.csv"
    write_csv(singular, np.column_stack([x, x]))
    assert main(["separate", str(singular)]) == 3


def test_bad_flag_values(data_csv):
    with pytest.raises(SystemExit):
        main(["test", str(data_csv), "--d", "1", "--strategy", "np9"])
    with pytest.raises(SystemExit):
        main(["test", str(data_csv), "--d", "1", "--lags", "3..1"])
