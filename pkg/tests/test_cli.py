import csv
import io
import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from fimkit import cli, fim, stats, tables, validation
from fimkit.core import TimeGrid
from fimkit.paths import Ensemble, Model


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(path):
    with open(path, "rb") as f:
        raw = f.read()
    return raw, list(csv.reader(io.StringIO(raw.decode("utf-8"))))


def test_bad_hurst_exits_2(capsys):
    code, _, err = run(["simulate", "--h", "1.2"], capsys)
    assert code == 2
    assert "Hurst exponent must lie in (0,1)" in err
    assert err.count("\n") == 1


@pytest.mark.parametrize("argv", [
    ["simulate", "--model", "bm"],
    ["simulate", "--paths", "0"],
    ["simulate", "--seed", "-1"],
    ["simulate", "--model", "dlp", "--scheme", "exact"],
    ["simulate", "--format", "xml"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_simulate_csv_and_sidecar(tmp_path, capsys):
    out = str(tmp_path / "fim.csv")
    code, _, _ = run(["simulate", "--model", "fim", "--h", "0.75", "--steps", "16", "--paths", "3",
                      "--seed", "7", "--out", out], capsys)
    assert code == 0
    raw, rows = read_csv(out)
    assert b"\r" not in raw
    assert rows[0] == ["path_id", "t", "x"]
    assert len(rows) == 1 + 3 * 17
    xs = [r[2] for r in rows[1:] if r[2] != "0"]
    # 17 significant digits: parsing and reprinting is the identity
    assert all(format(float(v), ".17g") == v for v in xs)
    meta = json.load(open(out + ".meta.json"))
    assert meta["schema_version"] == "1.0"
    assert meta["model"] == "fim" and meta["h"] == 0.75 and meta["seed"] == 7
    assert meta["scheme"]["name"] == "em" and meta["scheme"]["bootstrap"] is True
    assert meta["library_version"]


def test_simulate_json(tmp_path, capsys):
    out = str(tmp_path / "fbm.json")
    assert run(["simulate", "--model", "fbm", "--h", "0.3", "--steps", "8", "--paths", "2",
                "--format", "json", "--out", out], capsys)[0] == 0
    doc = json.load(open(out))
    assert doc["schema_version"] == "1.0"
    assert len(doc["paths"]) == 2 and len(doc["times"]) == 9
    assert doc["metadata"]["scheme"]["name"] == "circulant"


def test_simulate_is_deterministic(tmp_path, capsys):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    base = ["simulate", "--model", "fim", "--h", "0.75", "--t-max", "1", "--steps", "1024",
            "--paths", "100", "--seed", "7"]
    run(base + ["--out", a], capsys)
    run(base + ["--out", b], capsys)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_simulate_fbm_half_recovers_linear_msd(tmp_path, capsys):
    out = str(tmp_path / "bm.csv")
    run(["simulate", "--model", "fbm", "--h", "0.5", "--steps", "64", "--paths", "4000",
         "--seed", "3", "--out", out], capsys)
    _, rows = read_csv(out)
    data = np.array(rows[1:], dtype=float)
    paths = data[:, 2].reshape(4000, 65)
    e = Ensemble(Model.FBM, 0.5, TimeGrid.uniform(1.0, 64), paths, 3)
    assert stats.fit_msd(e).epsilon == pytest.approx(1.0, abs=0.05)


def test_simulate_exact_scheme_and_floor_flags(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert run(["simulate", "--model", "fim", "--scheme", "exact", "--h", "0.3", "--steps", "4",
                "--paths", "2", "--out", out], capsys)[0] == 0
    assert run(["simulate", "--model", "dlp", "--h", "0.3", "--steps", "4", "--paths", "2",
                "--floor", "0.01", "--no-bootstrap", "--out", out], capsys)[0] == 0
    meta = json.load(open(out + ".meta.json"))
    assert meta["scheme"]["floor"] == 0.01 and meta["scheme"]["bootstrap"] is False


def test_unknown_quantity_lists_valid_names(capsys):
    code, _, err = run(["analytic", "density_bm"], capsys)
    assert code == 2
    for q in tables.QUANTITIES:
        assert q in err


@pytest.mark.parametrize("q", tables.QUANTITIES)
def test_every_quantity_renders(q, tmp_path, capsys):
    out = str(tmp_path / f"{q}.csv")
    assert run(["analytic", q, "--h", "0.3", "--t-points", "3", "--points", "11", "--out", out],
               capsys)[0] == 0
    _, rows = read_csv(out)
    assert rows[0][-1] == q and len(rows) > 2
    assert all(len(r) == len(rows[0]) for r in rows)


def test_density_fim_at_half_is_standard_normal(capsys):
    code, out, _ = run(["analytic", "density_fim", "--h", "0.5", "--points", "41"], capsys)
    rows = np.array(list(csv.reader(io.StringIO(out)))[1:], dtype=float)
    assert np.allclose(rows[:, 2], np.exp(-rows[:, 1] ** 2 / 2) / math.sqrt(2 * math.pi), rtol=1e-13)


def test_cv_fim_curve_is_monotone(capsys):
    _, out, _ = run(["analytic", "cv_fim"], capsys)
    rows = np.array(list(csv.reader(io.StringIO(out)))[1:], dtype=float)
    assert len(rows) == 99 and np.all(np.diff(rows[:, 1]) > 0)
    assert rows[0, 1] < 0.01 and rows[-1, 1] > 0.98


def test_kl_fim_matches_closed_form(tmp_path, capsys):
    run(["analytic", "kl_fim", "kl_fbm", "--h", "0.75", "--t-max", "8", "--t-points", "8",
         "--format", "json", "--out", str(tmp_path)], capsys)
    doc = json.load(open(tmp_path / "kl_fim.json"))
    assert doc["schema_version"] == "1.0" and doc["columns"] == ["t", "kl_fim"]
    for t, v in doc["rows"]:
        assert v == fim.fim_kl(0.75, t)
    assert (tmp_path / "kl_fbm.json").exists()


def test_heat_map_triples(capsys):
    _, out, _ = run(["analytic", "density_fbm", "--h", "0.3", "--t-points", "4", "--points", "5"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["t", "x", "density_fbm"] and len(rows) == 1 + 4 * 5


def test_several_quantities_need_directory(capsys):
    assert run(["analytic", "kl_fim", "kl_fbm"], capsys)[0] == 2


def _compare(h, capsys, paths="4000"):
    code, out, _ = run(["compare", "--h", str(h), "--paths", paths, "--seed", "1", "--format", "json"],
                       capsys)
    assert code == 0
    return json.loads(out)


def test_compare_subdiffusive(capsys):
    rep = _compare(0.25, capsys)
    assert rep["schema_version"] == "1.0"
    assert list(rep["tails"]["verdicts"].values()) == ["lighter"] * 3
    assert rep["divergences"]["fim_vs_bm_constant"] == 1.5
    fimrow = rep["properties"]["models"]["fim"]
    assert not fimrow["gaussian"]["value"] and not fimrow["stationary_increments"]["value"]
    assert fimrow["uncorrelated_increments"]["value"]
    assert not rep["properties"]["models"]["fbm"]["uncorrelated_increments"]["value"]


def test_compare_superdiffusive(capsys):
    rep = _compare(0.75, capsys)
    assert list(rep["tails"]["verdicts"].values()) == ["heavier"] * 3
    assert rep["divergences"]["fim_vs_bm_constant"] == 0.5
    assert rep["divergences"]["limits"] == {"fbm_vs_bm": "inf", "fim_vs_bm": 0.5, "fim_vs_fbm": 0.0}


def test_compare_at_half_all_models_alike(capsys):
    rep = _compare(0.5, capsys)
    rows = [{k: v["value"] for k, v in m.items()} for m in rep["properties"]["models"].values()]
    assert rows[0] == rows[1] == rows[2] == {
        "gaussian": True, "stationary_increments": True, "uncorrelated_increments": True}


def test_compare_rejects_csv(capsys):
    assert run(["compare", "--h", "0.3"], capsys)[0] == 2


def test_validate_subset_report(tmp_path, capsys):
    out = str(tmp_path / "r.json")
    code, _, _ = run(["validate", "--criteria", "1", "3", "4", "--format", "json", "--out", out], capsys)
    assert code == 0
    doc = json.load(open(out))
    schema = json.loads(resources.files("fimkit").joinpath("report.schema.json").read_text())
    jsonschema.validate(doc, schema)
    assert doc["passed"] and set(doc["criteria"]) == {"1", "3", "4"}


def test_validate_corrupted_tolerance_fails(monkeypatch, capsys):
    monkeypatch.setitem(validation.TOLERANCES, "kl_abs", -1.0)
    code, _, err = run(["validate", "--criteria", "3", "--format", "json"], capsys)
    assert code == 1
    assert "FAILED criterion 3: kl_fbm_h0.25_t0.5" in err


def test_validate_rejects_unknown_criterion(capsys):
    assert run(["validate", "--criteria", "13"], capsys)[0] == 2


def test_io_failure_exits_nonzero(tmp_path, capsys):
    code, _, err = run(["analytic", "kl_fim", "--out", str(tmp_path / "missing" / "x.csv")], capsys)
    assert code == 2 and "I/O error" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "fimkit", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("fimkit ")
