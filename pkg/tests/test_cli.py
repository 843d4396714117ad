import csv
import io
import json

import pytest

from lambda_memory.cli import main, parse_complex, parse_polarization


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_rb_json(capsys):
    code, out, _ = run(capsys, "analyze", "--jb", "1", "--jc", "1", "--ja", "2", "--drive", "pi", "--initial", "m=0", "--format", "json")
    assert code == 0
    r = json.loads(out)
    assert r["faithful"] is True
    assert r["w"] == [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]
    assert set(r) >= {"scheme", "polarizations", "counts", "w", "faithful", "worst_case_prob", "stored_state", "leak_weight"}
    assert [s["m"] for s in r["stored_state"]] == ["-2", "-1", "0", "1", "2"]


def test_analyze_six_sevenths(capsys):
    code, out, _ = run(capsys, "analyze", "--jb", "2", "--jc", "3", "--ja", "4", "--format", "json")
    r = json.loads(out)
    assert code == 0 and not r["faithful"]
    assert r["worst_case_prob"] == pytest.approx(6 / 7, abs=1e-11)


def test_analyze_low_j_mixed(capsys):
    code, out, _ = run(capsys, "analyze", "--jb", "0", "--ja", "1", "--jc", "1", "--initial", "mixed", "--format", "json")
    r = json.loads(out)
    # with J_b = 0 the "mixed" state is the single sublevel, so it is pure
    assert code == 0 and r["faithful"] and r["stored_state"] is not None
    code, out, _ = run(capsys, "analyze", "--jb", "1/2", "--ja", "3/2", "--jc", "3/2", "--initial", "mixed", "--format", "json")
    r = json.loads(out)
    assert code == 0 and r["faithful"] and r["stored_state"] is None


def test_json_is_deterministic_and_round_trips(capsys, tmp_path):
    args = ["analyze", "--drive", "x", "--xi1", "0.6", "--xi2", "0.8i", "--format", "json"]
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    out = tmp_path / "r.json"
    assert main(args + ["--out", str(out)]) == 0
    assert out.read_text() == first
    assert json.dumps(json.loads(first), indent=2) + "\n" == first


def test_text_output(capsys):
    code, out, _ = run(capsys, "analyze")
    assert code == 0
    assert "faithful       true" in out
    assert "m=1: -1" in out


def test_scan_rb_single_faithful(capsys):
    code, out, _ = run(capsys, "scan", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["scheme", "drive", "initial", "w11", "w22", "|w12|", "faithful", "worst_case"]
    assert [r["initial"] for r in rows if r["faithful"] == "true"] == ["m=0"]


def test_scan_two_drives(capsys):
    code, out, _ = run(capsys, "scan", "--drive", "pi", "--drive", "x", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    faithful = {(r["drive"], r["initial"]) for r in rows if r["faithful"] == "true"}
    assert faithful == {("pi", "m=0"), ("x", "m=0")}


def test_invalid_configs_exit_2(capsys, tmp_path):
    assert run(capsys, "analyze", "--ja", "1", "--jb", "1", "--jc", "3")[0] == 2
    assert run(capsys, "analyze", "--drive", "diagonal")[0] == 2
    assert run(capsys, "analyze", "--initial", "m=5")[0] == 2
    assert run(capsys, "analyze", "--xi1", "0", "--xi2", "0")[0] == 2
    assert run(capsys, "analyze", "--drive", "pi", "--drive", "x")[0] == 2
    assert run(capsys, "analyze", "--l1", "sigma+", "--l2", "sigma+")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "simulate", "--dt", "1.0")[0] == 2


def test_density_file(capsys, tmp_path):
    good = tmp_path / "rho.json"
    good.write_text(json.dumps([[[0, 0], [0, 0], [0, 0]], [[0, 0], [1, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]]))
    code, out, _ = run(capsys, "analyze", "--initial", str(good), "--format", "json")
    assert code == 0 and json.loads(out)["faithful"]

    bad = tmp_path / "bad.json"
    bad.write_text("[[1, 0]")
    code, _, err = run(capsys, "analyze", "--initial", str(bad))
    assert code == 2 and "invalid JSON" in err

    nonpsd = tmp_path / "neg.json"
    nonpsd.write_text(json.dumps([[[2, 0], [0, 0], [0, 0]], [[0, 0], [-1, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]]))
    code, _, err = run(capsys, "analyze", "--initial", str(nonpsd))
    assert code == 2 and "positive semidefinite" in err

    code, _, err = run(capsys, "analyze", "--initial", str(tmp_path / "missing.json"))
    assert code == 2


def test_tolerance_env(capsys, monkeypatch):
    monkeypatch.setenv("LAMBDA_MEMORY_TOL", "0.2")
    _, out, _ = run(capsys, "analyze", "--jb", "2", "--jc", "3", "--ja", "4", "--format", "json")
    assert json.loads(out)["faithful"] is True


def test_simulate_zero_fields_flat(capsys):
    code, out, _ = run(capsys, "simulate", "--omega-a", "0", "--omega-b", "0", "--t1", "5", "--samples", "4", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["t", "trace", "pop_a", "pop_b", "pop_c", "fidelity_to_adiabatic"]
    assert {r["pop_b"] for r in rows} == {"1"}
    assert {r["fidelity_to_adiabatic"] for r in rows} == {"1"}


def test_simulate_json(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--t1", "50", "--samples", "5", "--format", "json")
    r = json.loads(out)
    assert code == 0
    assert len(r["trajectory"]) == 6
    assert 0 < r["fidelity"] <= 1
    path = tmp_path / "traj.csv"
    assert main(["simulate", "--t1", "20", "--samples", "2", "--out", str(path)]) == 0
    assert path.read_text().startswith("t,trace,pop_a")


def test_parsers():
    assert parse_complex("1+2i") == 1 + 2j
    assert parse_polarization("0,1,0").components[1] == 1
    with pytest.raises(ValueError):
        parse_polarization("1,0")
    with pytest.raises(ValueError):
        parse_complex("one")
