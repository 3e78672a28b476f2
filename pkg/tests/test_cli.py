import json
import subprocess
import sys

import pytest

from qbm import QuadratureFailure, cli
from qbm.compare import CSV_SCHEMA

P = ["--gamma", "0.05", "--lambda", "20", "--temp", "5"]


def _data(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def test_stationary_values(tmp_path, capsys):
    assert cli.run(["stationary", *P, "--out", str(tmp_path), "--no-timestamp"]) == 0
    out = tmp_path / "stationary_wr1_g0.05_L20_T5.csv"
    text = out.read_text()
    assert text.splitlines()[0] == f"# schema={CSV_SCHEMA}"
    assert "generated=" not in text
    rows = {r.split(",")[0]: r.split(",") for r in _data(out)[1:]}
    assert float(rows["ExactClosed"][1]) == pytest.approx(5.00412802802896, rel=1e-12)
    assert float(rows["BornMarkov"][2]) == pytest.approx(5.033288973376, rel=1e-12)
    assert float(rows["BornNonMarkov"][2]) == pytest.approx(2.52831637569119, rel=1e-12)
    assert "ExactClosed" in capsys.readouterr().out


def test_global_flags_on_either_side(tmp_path):
    assert cli.run(["--out", str(tmp_path / "a"), "stationary", *P]) == 0
    assert cli.run(["stationary", *P, "--out", str(tmp_path / "b")]) == 0
    assert any((tmp_path / "a").iterdir()) and any((tmp_path / "b").iterdir())


def test_sweep_is_deterministic(tmp_path):
    args = ["sweep", "--gamma", "0.001", "--lambdas", "10,100", "--temps", "1,5", "--no-timestamp"]
    assert cli.run([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.run([*args, "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a = sorted((tmp_path / "a").glob("*.csv"))
    b = sorted((tmp_path / "b").glob("*.csv"))
    assert len(a) == 1 and a[0].read_bytes() == b[0].read_bytes()


def test_figures_writes_both_gammas(tmp_path):
    assert cli.run(["figures", "--lambdas", "10,100", "--temps", "1", "--out", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.glob("*.json"))
    assert len(names) == 2
    assert names[0].startswith("ratios_gamma0.001_") and names[1].startswith("ratios_gamma0.005_")


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[common]\ngamma = 0.05\nlam = 20\ntemp = 5\n[transient]\nt_max = 2\nn_points = 5\n")
    assert cli.run(["transient", "--config", str(cfg), "--method", "markov", "--out", str(tmp_path)]) == 0
    out = next(tmp_path.glob("transient_markov_*.csv"))
    assert len(_data(out)) == 6
    # flags override the file
    assert cli.run(["transient", "--config", str(cfg), "--t-max", "1", "--n-points", "3",
                    "--method", "nonmarkov", "--out", str(tmp_path)]) == 0
    assert len(_data(next(tmp_path.glob("transient_nonmarkov_*.csv")))) == 4


@pytest.mark.parametrize("text", ["[common]\nbogus = 1\n", "[nonsense]\nx = 1\n", "not an ini"])
def test_bad_config_exit_2(tmp_path, text, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert cli.run(["stationary", *P, "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["stationary", "--gamma", "0.05", "--lambda", "20"],
    ["stationary", "--gamma", "3", "--lambda", "20", "--temp", "1"],
    ["stationary", "--omega", "1", "--gamma", "0.1", "--lambda", "20", "--temp", "1"],
    ["stationary", "--bogus"],
    ["validity", "--preset", "nope"],
])
def test_config_errors_exit_2(argv, tmp_path):
    assert cli.run([*argv, "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise QuadratureFailure("forced")
    monkeypatch.setattr(cli.exact, "stationary_closed", boom)
    assert cli.run(["stationary", *P, "--out", str(tmp_path)]) == 3
    assert "exact_hl.stationary_closed" in capsys.readouterr().err


def test_validity_preset(tmp_path):
    assert cli.run(["validity", "--preset", "teufel", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "validity_teufel.json").read_text())
    assert doc["q_factor"] == 1e5


def test_interaction(tmp_path):
    assert cli.run(["interaction", *P, "--out", str(tmp_path)]) == 0
    doc = json.loads(next(tmp_path.glob("interaction_*.json")).read_text())
    fl = doc["energy_flow"]
    assert abs(sum(fl.values())) < 1e-12 * abs(fl["delta_e_system"])
    assert doc["interaction_energy"] < 0


def test_oracle_small(tmp_path):
    argv = ["oracle", "--gamma", "0.2", "--lambda", "20", "--temp", "1", "--n-modes", "800",
            "--t-max", "60", "--window", "40,60", "--n-points", "101", "--out", str(tmp_path)]
    assert cli.run(argv) == 0
    doc = json.loads(next(tmp_path.glob("oracle_*_N800.json")).read_text())
    assert abs(doc["q2_rel_diff_vs_exact"]) < 0.01
    assert cli.run([*argv[:-2], "--t-max", "1e4", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qbm.cli", "validity", "--preset", "norte",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert "\"q_factor\": 100000000.0" in r.stdout
