import numpy as np
import pytest

from cgsmooth.cli import int_range, main
from cgsmooth.errors import BreakdownError
from cgsmooth.signal_core import read_signal_csv


def test_generate(tmp_path, capsys):
    assert main(["generate", "--length", "500", "--seed", "3", "--out", str(tmp_path)]) == 0
    clean = read_signal_csv(tmp_path / "clean.csv")
    noisy = read_signal_csv(tmp_path / "noisy.csv")
    assert len(clean) == len(noisy) == 500
    assert "500 samples" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["denoise", "--filter", "xx"],
    ["denoise", "--method", "power"],
    ["denoise", "--bogus"],
    ["denoise", "--kmax", "two"],
    ["denoise", "--guidance", "file:/no/such.csv"],
    ["denoise", "--freeze", "never"],
    ["sweep", "--kmax", "5:3"],
    [],
])
def test_usage_errors(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)] if argv else argv) == 1
    assert capsys.readouterr().err


def test_help():
    assert main(["--help"]) == 0


def test_denoise_and_determinism(tmp_path):
    argv = ["denoise", "--filter", "gf", "--method", "cg-restart", "--kmax", "5", "--lmax", "5", "--length", "800"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    for name in ("clean", "noisy", "denoised", "error", "log"):
        assert (tmp_path / "a" / f"{name}.csv").read_bytes() == (tmp_path / "b" / f"{name}.csv").read_bytes()
    assert "applications=25" in (tmp_path / "a" / "report.txt").read_text()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nsigma-d = 0.4\nmethod=cg\nkmax=4\nlength=300\n")
    assert main(["denoise", "--config", str(cfg), "--kmax", "7", "--out", str(tmp_path / "r")]) == 0
    text = (tmp_path / "r" / "report.txt").read_text()
    assert "param_sigma_d=0.4\n" in text and "applications=7\n" in text


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour=red\n")
    assert main(["denoise", "--config", str(bad)]) == 1
    bad.write_text("kmax\n")
    assert main(["denoise", "--config", str(bad)]) == 1
    assert main(["denoise", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_breakdown_exit_code(monkeypatch, tmp_path):
    import cgsmooth.bench as bench

    def broken(x0, g, params, k_max, log=None, **kw):
        log.record(0, 1, x0.samples)
        raise BreakdownError("forced", iterate=x0, log=log, applications=1)

    monkeypatch.setattr(bench, "pcg_truncated", broken)
    assert main(["denoise", "--method", "cg", "--length", "200", "--out", str(tmp_path)]) == 2
    assert (tmp_path / "denoised.csv").exists() and (tmp_path / "report.json").exists()


def test_sweep(tmp_path, capsys):
    assert main(["sweep", "--filter", "gf", "--lmax", "2:4", "--kmax", "3,5", "--length", "600", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 1 + 6
    assert "6 cells" in capsys.readouterr().out


def test_suite_and_plot(tmp_path, capsys):
    assert main(["suite", "--length", "1000", "--out", str(tmp_path)]) == 0
    assert "bf_self" in capsys.readouterr().out
    assert main(["plot", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "plot.py").read_text()
    assert text.count("def run_") == 8


def test_int_range():
    assert int_range("3:5") == [3, 4, 5]
    assert int_range("7") == [7]
    assert int_range("2,9") == [2, 9]


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "cgsmooth", "denoise", "--filter", "nope"],
                         capture_output=True, text=True)
    assert res.returncode == 1 and "filter" in res.stderr
