import subprocess
import sys

import pytest

from recoverysim.cli import main
from recoverysim.csvio import read_calibration, read_risk, read_scenarios

SMALL = "scenarios = 600\nfirms = 80\nsteps = 50\nworkers = 1\nseed = 11\n"


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "run.cfg").write_text(SMALL)
    assert main(["simulate", "--config", str(d / "run.cfg"), "--out", str(d / "s.csv")]) == 0
    return d


def test_simulate_rows_and_summary(tmp_path, capsys):
    (tmp_path / "run.cfg").write_text(SMALL)
    assert main(["simulate", "--config", str(tmp_path / "run.cfg"), "--out", str(tmp_path / "a.csv")]) == 0
    out = capsys.readouterr().out
    assert "scenarios: 600" in out and "runtime_s:" in out and "mean_p_d:" in out
    assert len(read_scenarios(tmp_path / "a.csv")) == 600


def test_simulate_rerun_is_byte_identical(run, tmp_path):
    assert main(["simulate", "--config", str(run / "run.cfg"), "--out", str(tmp_path / "b.csv"), "--workers", "2"]) == 0
    assert (tmp_path / "b.csv").read_bytes() == (run / "s.csv").read_bytes()


def test_seed_flag_overrides_config(run, tmp_path):
    assert main(["simulate", "--config", str(run / "run.cfg"), "--out", str(tmp_path / "c.csv"), "--seed", "12"]) == 0
    assert (tmp_path / "c.csv").read_bytes() != (run / "s.csv").read_bytes()


def test_simulate_unreadable_config(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "nope.cfg" in capsys.readouterr().err


def test_simulate_bad_config(tmp_path, capsys):
    (tmp_path / "bad.cfg").write_text("c = 1.5\n")
    assert main(["simulate", "--config", str(tmp_path / "bad.cfg")]) == 1
    assert "'c'" in capsys.readouterr().err


def test_usage_errors_exit_one(run):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["sweep", "--scenarios", str(run / "s.csv"), "--thresholds", "a,b"]) == 1
    assert main(["risk", "--scenarios", str(run / "s.csv"), "--alpha", "1.5"]) == 1
    assert main(["calibrate", "--scenarios", str(run / "s.csv"), "--model", "logit"]) == 1


def test_calibrate_constant(run, tmp_path):
    out = tmp_path / "cal.csv"
    rc = main(["calibrate", "--scenarios", str(run / "s.csv"), "--model", "constant",
               "--lower", "-0.35", "--upper", "0", "--out", str(out)])
    assert rc == 0
    (row,) = read_calibration(out)
    assert 0.0 < row["param1"] < 1.0 and row["window_lower"] == -0.35


def test_calibrate_structural_deterministic(run, tmp_path):
    args = ["calibrate", "--scenarios", str(run / "s.csv"), "--model", "structural", "--lower", "-0.35"]
    assert main(args + ["--out", str(tmp_path / "1.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "2.csv")]) == 0
    assert read_calibration(tmp_path / "1.csv")[0]["param1"] == read_calibration(tmp_path / "2.csv")[0]["param1"]


def test_calibrate_empty_window(run, capsys):
    rc = main(["calibrate", "--scenarios", str(run / "s.csv"), "--model", "probit", "--lower", "0.5", "--upper", "0.6"])
    assert rc == 2
    assert "empty calibration window" in capsys.readouterr().err


def test_risk_with_model_file(run, tmp_path):
    models = tmp_path / "model.csv"
    assert main(["calibrate", "--scenarios", str(run / "s.csv"), "--out", str(tmp_path / "c.csv"),
                 "--model-out", str(models)]) == 0
    assert main(["risk", "--scenarios", str(run / "s.csv"), "--model-file", str(models),
                 "--out", str(tmp_path / "r.csv")]) == 0
    rows = read_risk(tmp_path / "r.csv")
    assert [r["model"] for r in rows] == ["empirical", "constant", "probit", "structural"]
    assert rows[0]["var"] > 0 and rows[0]["etl"] > 0


def test_sweep_cardinality_and_failed_cells(run, tmp_path):
    out = tmp_path / "r.csv"
    rc = main(["sweep", "--scenarios", str(run / "s.csv"), "--thresholds", "-0.3,-0.2,-0.1,-0.004", "--out", str(out)])
    assert rc == 0
    rows = read_risk(out)
    assert len(rows) == 3 * 4 + 1
    cells = {(r["model"], r["lower_threshold"]): r for r in rows[1:]}
    # a window thinner than a bin cannot support a probit line
    assert cells[("probit", -0.004)]["status"] == "calibration_error"
    assert cells[("probit", -0.3)]["status"] == "ok"


def test_sweep_missing_scenarios(tmp_path, capsys):
    assert main(["sweep", "--scenarios", str(tmp_path / "none.csv")]) == 2


def test_figdata(run, tmp_path):
    out = tmp_path / "figs"
    assert main(["figdata", "--scenarios", str(run / "s.csv"), "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["fig1_b_vs_xm.csv", "fig2_loss_vs_pd.csv", "fig3_var_sweep.csv", "fig4_etl_sweep.csv"]
    assert (out / "fig2_loss_vs_pd.csv").read_text().splitlines()[0] == "p_d,mean_loss,structural_fit_loss"
    assert (out / "fig3_var_sweep.csv").read_text().splitlines()[0] == "lower_threshold,constant,probit,structural"
    assert len((out / "fig4_etl_sweep.csv").read_text().splitlines()) == 8


def test_figdata_empty_file(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    assert main(["figdata", "--scenarios", str(tmp_path / "empty.csv"), "--out", str(tmp_path)]) == 2


def test_module_entry_point(run):
    proc = subprocess.run([sys.executable, "-m", "recoverysim", "calibrate", "--scenarios", str(run / "s.csv"),
                           "--model", "constant", "--out", str(run / "m.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("constant:")
