import csv
import io
import json
import subprocess
import sys

import pytest

from accperc.cli import main

FACTORIAL = '{"kind":"factorial"}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--growth", FACTORIAL, "--depth", "6", "--trials", "2000", "--seed", "7")
    assert code == 0
    assert out.splitlines()[0] == "level,n_trials,n_survived,p_hat,stderr,frac_capped"
    table = rows(out)
    assert len(table) == 7 and table[0]["p_hat"] == "1"
    for r in table:
        n = int(r["level"])
        assert float(r["p_hat"]) <= 1 / (n + 1) + 3 * float(r["stderr"])


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", "--growth", FACTORIAL, "--depth", "3", "--trials", "50", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["trials"] == 50 and len(data["levels"]) == 4
    assert data["config"]["growth"] == {"kind": "factorial"}


def test_floats_have_17_significant_digits(capsys):
    _, out, _ = run(capsys, "simulate", "--growth", FACTORIAL, "--depth", "2", "--trials", "3")
    p = rows(out)[1]["p_hat"]
    assert float(p) in (0.0, 1 / 3, 2 / 3, 1.0)
    if float(p) not in (0.0, 1.0):
        assert len(p.replace("0.", "", 1).lstrip("0")) == 17


@pytest.mark.parametrize("argv", [
    ["simulate", "--growth", FACTORIAL, "--depth", "3", "--trials", "0"],
    ["simulate", "--growth", '{"kind":"nope"}', "--depth", "3"],
    ["simulate", "--growth", FACTORIAL, "--trials", "5"],
    ["phase", "--alphas", "", "--depth", "5"],
    ["exact", "--growth", '{"kind":"explicit","children":[1,1]}', "--depth", "5"],
    ["records", "--alphas", "linear_ceil:2", "--editions", "3"],
    ["varyenv", "check", "--env", '{"kind":"explicit","a":[0.5,0.2]}'],
])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and "error" in err


def test_capacity_error_exits_3(capsys):
    code, _, err = run(capsys, "exact", "--growth", '{"kind":"linear_ceil","alpha":2}', "--depth", "7",
                       "--method", "polynomial")
    assert code == 3 and "quadrature" in err


def test_exact_path(capsys):
    code, out, _ = run(capsys, "exact", "--growth", '{"kind":"explicit","children":[1,1,1,1,1]}',
                       "--depth", "5", "--root", "random")
    data = json.loads(out)
    assert code == 0
    assert data["exact"] == "1/720" and data["value"] == pytest.approx(1 / 720, rel=1e-15)
    assert set(data) == {"config", "n", "method", "value", "error_estimate", "exact"}


def test_records(capsys):
    code, out, _ = run(capsys, "records", "--alphas", "uniform", "--editions", "3", "--exact")
    assert code == 0
    assert out.splitlines()[0] == "N,alpha_spec,trials,hits,p_hat,stderr,exact_value"
    assert float(rows(out)[2]["exact_value"]) == pytest.approx(1 / 6, rel=1e-15)
    code, out, _ = run(capsys, "records", "--coupling", "2", "--editions", "4")
    assert code == 0 and all(r["holds"] for r in json.loads(out))


def test_varyenv(capsys):
    code, out, _ = run(capsys, "varyenv", "check", "--d", "2", "--env", '{"kind":"geometric","beta":3.0}', "--n", "4")
    assert code == 0 and json.loads(out)["holds"] is True
    code, out, _ = run(capsys, "varyenv", "chain", "--env", '{"kind":"explicit","a":[0,0.5]}', "--n", "1")
    data = json.loads(out)
    assert data["exact"] == 0.75 and data["product"] == 0.5
    code, out, _ = run(capsys, "varyenv", "simulate", "--env", '{"kind":"harmonic"}', "--depth", "4", "--trials", "20")
    assert code == 0 and out.startswith("level,")


def test_bpve(capsys):
    code, out, _ = run(capsys, "bpve", "check", "--growth", '{"kind":"linear_ceil","alpha":2.0}', "--n", "8")
    data = json.loads(out)
    assert code == 0 and data["holds"] and set(data) >= {"n", "mu_by_generation", "holds"}
    code, out, _ = run(capsys, "bpve", "survive", "--n", "2", "--generations", "3", "--trials", "30")
    assert out.splitlines()[0] == "generation,n_alive_trials,fraction" and len(out.splitlines()) == 5
    code, out, _ = run(capsys, "bpve", "mean", "--n", "2", "--trials", "200")
    assert json.loads(out)["mu_exact"] == "4/3"
    code, out, _ = run(capsys, "bpve", "growth-rate", "--alphas", "1,1,1,1")
    assert json.loads(out)["holds"] is False


def test_phase(capsys):
    code, out, _ = run(capsys, "phase", "--alphas", "0.5,1,3", "--depth", "8", "--checkpoints", "4,8",
                       "--trials", "300")
    assert code == 0 and out.splitlines()[0] == "alpha,depth,p_hat,stderr"
    assert [(r["alpha"], r["depth"]) for r in rows(out)] == [
        ("0.5", "4"), ("0.5", "8"), ("1", "4"), ("1", "8"), ("3", "4"), ("3", "8")]


def test_phase_alpha_one_equals_factorial_simulation(capsys):
    _, phase, _ = run(capsys, "phase", "--alphas", "1", "--depth", "10", "--trials", "500", "--seed", "4")
    _, sim, _ = run(capsys, "simulate", "--growth", FACTORIAL, "--depth", "10", "--trials", "500", "--seed", "4")
    p, s = rows(phase)[0], rows(sim)[10]
    assert (p["p_hat"], p["stderr"]) == (s["p_hat"], s["stderr"])


def test_byte_identical_files_and_threads(tmp_path, capsys):
    argv = ["simulate", "--growth", '{"kind":"linear_ceil","alpha":2.0}', "--depth", "10",
            "--trials", "300", "--seed", "9", "--cap", "1000"]
    paths = []
    for k, threads in enumerate(("1", "1", "4")):
        path = tmp_path / f"out{k}.csv"
        assert main(argv + ["--threads", threads, "--out", str(path)]) == 0
        paths.append(path.read_bytes())
    assert capsys.readouterr().out == ""
    assert paths[0] == paths[1] == paths[2]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "accperc", "exact", "--growth", FACTORIAL, "--depth", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    # int_0^1 (2/3 - x + x^3/3) dx
    assert json.loads(proc.stdout)["exact"] == "1/4"
