import csv
import io
import json
import math
import subprocess
import sys

import pytest

from multislice_lab.cli import main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compute_bounds_main_interval(capsys):
    code, out, _ = run(["compute", "--profile", "1,3", "--bounds"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == "1"
    main_iv = rep["results"]["bounds"]["intervals"]["main"]
    assert main_iv["lower"] == pytest.approx(math.log(4))
    assert main_iv["upper"] == pytest.approx(8.0)
    assert main_iv["kind"] == "closed_form"


def test_compute_lsc_two_states(capsys, tmp_path):
    witness = tmp_path / "w.csv"
    code, out, _ = run(["compute", "--profile", "1,1", "--lsc", "--budget-restarts", "8",
                        "--witness-out", str(witness)], capsys)
    assert code == 0
    rec = json.loads(out)["results"]["lsc"]
    assert rec["value"] == pytest.approx(2.0, abs=1e-3)
    assert rec["kind"] == "variational_lower_bound"
    assert len(witness.read_text().splitlines()) == 3


@pytest.mark.parametrize("args", [
    ["compute", "--profile", "3", "--lsc"],
    ["compute", "--profile", "0,2", "--lsc"],
    ["compute", "--profile", "1,2"],
    ["compute", "--profile", "1,2", "--lsc", "--graph", "star"],
    ["compute", "--profile", "1,2", "--lsc", "--graph", "cycle", "--bogus"],
    ["verify", "--profile", "0,2"],
    ["verify", "--only", "nonsense"],
])
def test_config_errors_exit_2(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 2
    assert err


def test_degenerate_message(capsys):
    _, _, err = run(["compute", "--profile", "3", "--lsc"], capsys)
    assert "single color" in err


@pytest.mark.parametrize("args, cap", [
    (["compute", "--profile", "6,6", "--poincare", "--cap-states", "100"], "state cap 100"),
    (["compute", "--profile", "2,2,1", "--iota"], "cap of 24"),
    (["compute", "--profile", "4,4", "--comparison"], "site cap 7"),
])
def test_cap_violations_exit_3(args, cap, capsys):
    code, _, err = run(args, capsys)
    assert code == 3
    assert cap in err


def test_compute_is_deterministic(tmp_path, capsys):
    args = ["compute", "--profile", "2,1,1", "--lsc", "--mlsc", "--poincare", "--budget-restarts", "4",
            "--max-iter", "300", "--seed", "7"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "seconds" not in a.read_text()


def test_every_number_has_a_kind(capsys, tmp_path):
    curve = tmp_path / "tv.csv"
    code, out, _ = run(["compute", "--profile", "2,2", "--graph", "cycle", "--all",
                        "--budget-restarts", "2", "--max-iter", "200", "--curve-out", str(curve)], capsys)
    assert code == 0
    res = json.loads(out)["results"]
    assert set(res) == {"poincare", "lsc", "mlsc", "iota", "comparison", "bounds", "mixing"}
    for name, rec in res.items():
        if name == "bounds":
            assert all("kind" in iv for iv in rec["intervals"].values())
        else:
            assert rec["kind"]
    assert res["poincare"]["kind"] == "exact_spectral"
    colored = res["bounds"]["intervals"]["colored"]
    assert colored["lower"] <= res["lsc"]["value"] <= colored["upper"]
    assert curve.read_text().startswith("time,tv")


def test_compute_csv(capsys):
    code, out, _ = run(["compute", "--profile", "1,2", "--bounds", "--poincare", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["section"] for r in rows} == {"bounds", "poincare"}
    assert all(r["kind"] for r in rows)


def test_edge_list_graph(capsys, tmp_path):
    path = tmp_path / "path4.txt"
    path.write_text("n 4\n1 2 1\n2 3 1\n3 4 1\n")
    code, out, _ = run(["compute", "--profile", "2,2", "--poincare", "--graph", f"@{path}"], capsys)
    assert code == 0
    # path on 4 sites with unit rates: gap 2 - 2 cos(pi/4)
    tau = json.loads(out)["results"]["poincare"]["value"]
    assert tau == pytest.approx(1 / (2 - 2 * math.cos(math.pi / 4)), rel=1e-10)


def test_verify_only(capsys, tmp_path):
    summary = tmp_path / "summary.json"
    code, out, _ = run(["verify", "--only", "chain-rule", "--out", str(summary)], capsys)
    assert code == 0
    assert "[PASS] chain-rule" in out
    assert "recursion" not in out
    data = json.loads(summary.read_text())
    assert [c["name"] for c in data["checks"]] == ["chain-rule"]
    assert data["checks"][0]["seconds"] >= 0


def test_verify_failure_exit_1(capsys, monkeypatch):
    from multislice_lab import verify

    monkeypatch.setitem(verify.CHECKS, "recursion",
                        lambda: verify.CheckResult("recursion", False, "forced failure"))
    code, out, err = run(["verify", "--only", "recursion,aldous"], capsys)
    assert code == 1
    assert "[FAIL] recursion" in out and "[PASS] aldous" in out
    assert "recursion" in err


def test_verify_single_profile(capsys):
    code, out, _ = run(["verify", "--profile", "2,2", "--only", "sandwich,chain-rule"], capsys)
    assert code == 0
    assert "1 profiles" in out


def test_sweep_small_family(capsys):
    code, out, _ = run(["sweep", "--n-max", "6", "--budget-restarts", "2", "--max-iter", "300"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 23  # partitions of 2..6 with at least two parts
    for r in rows:
        assert r["status"] == "ok"
        assert float(r["main_lower"]) - 1e-6 <= float(r["lsc"]) <= float(r["main_upper"]) + 1e-9
        assert r["in_main_interval"] == "True"
        assert abs(float(r["tau_rel"]) - 1.0) <= 1e-9


def test_sweep_empty_family(capsys):
    code, out, _ = run(["sweep", "--n-max", "1"], capsys)
    assert code == 0
    assert out.strip().splitlines() == [out.strip()]
    assert out.startswith("profile,n,L")


def test_sweep_records_cap_violations(capsys):
    code, out, _ = run(["sweep", "--n-min", "5", "--n-max", "5", "--l-max", "2", "--no-lsc",
                        "--cap-states", "6"], capsys)
    assert code == 0
    rows = {r["profile"]: r for r in csv.DictReader(io.StringIO(out))}
    assert rows["4,1"]["status"] == "ok"
    assert rows["3,2"]["status"] == "cap:cap_states"
    assert rows["3,2"]["main_upper"]


def test_sweep_json(capsys):
    code, out, _ = run(["sweep", "--n-max", "3", "--no-lsc", "--format", "json"], capsys)
    data = json.loads(out)
    assert data["schema"] == "1" and len(data["rows"]) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "multislice_lab", "compute", "--profile", "1,2",
                           "--bounds"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["profile"] == [1, 2]
