import math
import subprocess
import sys

import numpy as np
import pytest

from mirrorloc import csvio
from mirrorloc.cli import main
from mirrorloc.config import KEYS, load_config
from mirrorloc.experiments import CONFIG_ECHO

SMALL = ["tau_end=15.707963267948966", "n_members=200", "x_min=-30", "x_max=30",
         "min_points=512", "p_max=20", "average_periods=5", "samples_per_period=2"]


def run(experiment, out, *sets, config=None):
    argv = [experiment] + ([str(config)] if config else [])
    for s in (f"output_dir={out}",) + sets:
        argv += ["--set", s]
    return main(argv)


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def assert_csv_format(path):
    raw = path.read_bytes()
    assert b"\r" not in raw
    header, data = csvio.read_columns(path)
    assert all(h and h == h.strip() for h in header)
    lines = raw.decode().splitlines()
    for line in lines[1:4]:
        for cell in line.split(","):
            v = float(cell)
            if v != 0 and math.isfinite(v):
                assert float("%.17g" % v) == v and cell == "%.17g" % v
    return header, data


# --- poincare ----------------------------------------------------------------------------

def test_poincare_defaults(tmp_path):
    assert run("poincare", tmp_path, "n_periods=3") == 0
    csvs = sorted(tmp_path.glob("poincare_*.csv"))
    assert len(csvs) == 4
    for path in csvs:
        header, data = assert_csv_format(path)
        assert header == ["tau", "x", "p"]
        assert len(data) == 500 * 3
        assert np.allclose(np.unique(data[:, 0]), np.arange(1, 4) * math.pi / 2, rtol=1e-15)
    assert [p.name for p in csvs] == [
        "poincare_01_lam_eff_3.3333.csv", "poincare_02_lam_eff_6.6667.csv",
        "poincare_03_lam_eff_13.4615.csv", "poincare_04_lam_eff_40.3846.csv"]
    assert (tmp_path / CONFIG_ECHO).exists()


def test_poincare_zero_periods(tmp_path):
    assert run("poincare", tmp_path, "n_periods=0") == 0
    for path in tmp_path.glob("poincare_*.csv"):
        assert path.read_text() == "tau,x,p\n"


def test_poincare_metre_list(tmp_path):
    assert run("poincare", tmp_path, "n_periods=1", "n_initial_conditions=3",
               "lam_eff_m_list=1.05e-5") == 0
    assert [p.name for p in tmp_path.glob("poincare_*.csv")] == ["poincare_01_lam_eff_13.4615.csv"]


@pytest.mark.parametrize("bad", ["no_such_key=1", "n_points=1000", "seed=abc", "hbar=0",
                                 "dt_classical=1.0", "lam_eff_list=", "experiment=sweep"])
def test_config_errors_exit_2_without_outputs(tmp_path, capsys, bad):
    out = tmp_path / "out"
    assert run("poincare", out, bad) == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_periods = 2\nthis line has no equals sign\n")
    out = tmp_path / "out"
    assert run("poincare", out, config=cfg) == 2
    assert not out.exists()
    assert "run.cfg:2" in capsys.readouterr().err


def test_unknown_key_is_named(tmp_path, capsys):
    assert run("poincare", tmp_path / "o", "gamma_mm=1") == 2
    assert "gamma_mm" in capsys.readouterr().err


# --- dispersion family -------------------------------------------------------------------

DISPERSION_FILES = {
    "dispersion_classical.csv", "dispersion_quantum.csv",
    "distribution_quantum_x.csv", "distribution_quantum_p.csv",
    "distribution_classical_x.csv", "distribution_classical_p.csv",
}


@pytest.fixture(scope="module")
def dispersion_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("disp")
    assert run("dispersion", out, *SMALL) == 0
    return out


def test_dispersion_artifacts(dispersion_out):
    names = {p.name for p in dispersion_out.iterdir()}
    assert names == DISPERSION_FILES | {CONFIG_ECHO}
    hc, c = assert_csv_format(dispersion_out / "dispersion_classical.csv")
    hq, q = assert_csv_format(dispersion_out / "dispersion_quantum.csv")
    assert hc == ["tau", "dx_classical", "dp_classical"]
    assert hq == ["tau", "dx_quantum", "dp_quantum", "norm", "boundary_density"]
    assert np.array_equal(c[:, 0], q[:, 0])
    assert len(c) == 21
    assert c[-1, 0] == pytest.approx(5 * math.pi)
    for name in DISPERSION_FILES - {"dispersion_classical.csv", "dispersion_quantum.csv"}:
        header, data = assert_csv_format(dispersion_out / name)
        assert header[1] in ("W_x", "W_p")
        widths = np.gradient(data[:, 0])
        assert np.sum(data[:, 1] * widths) == pytest.approx(1.0, abs=1e-6)


def test_dispersion_rerun_is_byte_identical(dispersion_out, tmp_path):
    assert run("dispersion", tmp_path, *SMALL) == 0
    a, b = files(dispersion_out), files(tmp_path)
    a.pop(CONFIG_ECHO), b.pop(CONFIG_ECHO)
    assert a == b


def test_dispersion_independent_of_workers(dispersion_out, tmp_path):
    assert run("dispersion", tmp_path, *SMALL, "workers=3") == 0
    for name in DISPERSION_FILES:
        assert (tmp_path / name).read_bytes() == (dispersion_out / name).read_bytes()


def test_echo_reproduces_run(dispersion_out, tmp_path):
    echo = dispersion_out / CONFIG_ECHO
    text = echo.read_text()
    assert set(line.split(" = ")[0] for line in text.splitlines()) == set(KEYS)
    out = tmp_path / "again"
    assert main(["dispersion", str(echo), "--set", f"output_dir={out}"]) == 0
    for name in DISPERSION_FILES:
        assert (out / name).read_bytes() == (dispersion_out / name).read_bytes()
    a = load_config(echo, "dispersion")
    b = load_config(out / CONFIG_ECHO, "dispersion")
    assert {k: v for k, v in a.values.items() if k != "output_dir"} == \
           {k: v for k, v in b.values.items() if k != "output_dir"}


def test_time_in_seconds(tmp_path):
    cfg = load_config(None, "dispersion", ["t_end_seconds=0.1315"])
    assert cfg["tau_end"] == pytest.approx(3139.6, rel=1e-4)
    assert load_config(None, "dispersion").settings.tau_end == cfg["tau_end"]


def test_leaking_run_exits_3(tmp_path, caplog):
    out = tmp_path / "leak"
    code = run("dispersion", out, "tau_end=31.41592653589793", "n_members=50", "x_min=-8",
               "x_max=8", "min_points=256", "p_max=10", "average_periods=2")
    assert code == 3
    assert "invalid" in caplog.text
    _, q = csvio.read_columns(out / "dispersion_quantum.csv")
    assert np.max(q[:, 4]) > 1e-6


def test_distributions_only(tmp_path):
    assert run("distributions", tmp_path, *SMALL) == 0
    assert {p.name for p in tmp_path.glob("*.csv")} == {
        n for n in DISPERSION_FILES if n.startswith("distribution_")}


def test_spatiotemporal_maps(tmp_path):
    assert run("spatiotemporal", tmp_path, *SMALL) == 0
    for kind in ("quantum", "classical"):
        for axis in ("x", "p"):
            header, data = assert_csv_format(tmp_path / f"spatiotemporal_{kind}_{axis}.csv")
            assert header == ["tau", axis, "density"]
            assert list(np.unique(data[:, 0])) == [0.0, 5 * math.pi]


# --- sweep -------------------------------------------------------------------------------

SWEEP = SMALL + ["sweep_lam_eff_list=0, 13.46", "hbar_list=0.5, 1"]


def test_sweep_outputs(tmp_path):
    assert run("sweep", tmp_path, *SWEEP) == 0
    raw = (tmp_path / "sweep.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    header = lines[0].split(",")
    for line in lines[1:]:
        cells = line.split(",")
        for cell in cells[:1] + cells[2:]:
            v = float(cell)
            assert math.isnan(v) or cell == "%.17g" % v
    assert header == ["lam_eff", "kind", "dx_final", "dp_final", "break_time_x", "break_time_p",
                      "alpha_fit", "localization_length_p"]
    assert [l.split(",")[1] for l in lines[1:]] == ["classical", "0.5", "1"] * 2
    side = (tmp_path / "sweep_diagnostics.csv").read_text().splitlines()
    assert len(side) == 7
    assert all(",ok," in l for l in side[1:])
    again = tmp_path / "again"
    assert run("sweep", again, *SWEEP) == 0
    assert (again / "sweep.csv").read_bytes() == (tmp_path / "sweep.csv").read_bytes()


def test_default_hbar_set():
    assert load_config(None, "sweep")["hbar_list"] == (0.1, 0.5, 1.0)


def test_empty_sweep_list_exits_2(tmp_path):
    assert run("sweep", tmp_path / "o", "sweep_lam_eff_list=") == 2
    assert not (tmp_path / "o").exists()


def test_sweep_majority_failure_exits_4(tmp_path):
    assert run("sweep", tmp_path, *SWEEP, "x0=26") == 4
    side = (tmp_path / "sweep_diagnostics.csv").read_text()
    assert side.count(",failed,") == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mirrorloc", "poincare", "--set",
                           f"output_dir={tmp_path}", "--set", "n_periods=1", "--set",
                           "n_initial_conditions=5"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(list(tmp_path.glob("poincare_*.csv"))) == 4
    bad = subprocess.run([sys.executable, "-m", "mirrorloc", "poincare", "--set", "bogus=1"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert bad.returncode == 2
