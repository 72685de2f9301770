from __future__ import annotations

import csv
import json

import pytest

from worldprice.cli import main, parse_grid, parse_value
from worldprice.panel import panel_to_csv
from worldprice.scenarios import gen_interaction, gen_minimal_simpson


@pytest.fixture
def simpson_csv(tmp_path):
    path = tmp_path / "simpson.csv"
    path.write_text(panel_to_csv(gen_minimal_simpson()))
    return path


def run(*argv):
    return main([str(a) for a in argv] + ["-q"])


def read_prices(path):
    with open(path) as fh:
        return {r["product_id"]: float(r["world_price"]) for r in csv.DictReader(fh)}


def test_blend_naive_and_fe(tmp_path, simpson_csv):
    assert run("blend", simpson_csv, "--operator", "naive", "-o", tmp_path / "n.csv") == 0
    assert read_prices(tmp_path / "n.csv") == {"A": 9.4, "B": 6.6}
    assert run("blend", simpson_csv, "--operator", "fe", "-o", tmp_path / "f.csv") == 0
    prices = read_prices(tmp_path / "f.csv")
    assert abs(prices["A"] - 7) <= 1e-9 and abs(prices["B"] - 9) <= 1e-9
    report = json.loads((tmp_path / "f.json").read_text())
    assert report["manifest"]["command"] == "blend"
    assert report["fe_fit"]["alpha"]["A"] == pytest.approx(7)
    assert report["cdr"] <= 1e-9


def test_blend_convex_exit_codes(tmp_path, simpson_csv):
    out = tmp_path / "c.csv"
    assert run("blend", simpson_csv, "--operator", "convex", "--cost-target", 2300, "-o", out) == 3
    assert not out.exists()
    assert run("blend", simpson_csv, "--operator", "convex", "--cost-target", 2300, "--fallback", "boundary", "-o", out) == 0
    assert json.loads(out.with_suffix(".json").read_text())["feasibility"] == {"kind": "BoundaryProjected", "c_clipped": 2200.0}


def test_blend_with_baseline(tmp_path, simpson_csv):
    base = tmp_path / "w.csv"
    base.write_text("campus_id,weight\nE,0.5\nC,0.5\n")
    assert run("blend", simpson_csv, "--operator", "convex", "--baseline", base, "-o", tmp_path / "c.csv") == 0
    assert read_prices(tmp_path / "c.csv") == pytest.approx({"A": 7.0, "B": 9.0})
    bad = tmp_path / "bad.json"
    bad.write_text('{"E": 0.5, "X": 0.5}')
    assert run("blend", simpson_csv, "--operator", "convex", "--baseline", bad, "-o", tmp_path / "c.csv") == 2


def test_blend_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("product_id,campus_id,price,quantity\nA,E,1,1\nA,E,2,1\n")
    assert run("blend", bad, "-o", tmp_path / "o.csv") == 2
    assert "bad.csv:3:" in capsys.readouterr().err
    assert run("blend", tmp_path / "missing.csv", "-o", tmp_path / "o.csv") == 2
    disc = tmp_path / "disc.csv"
    disc.write_text("product_id,campus_id,price,quantity\nA,E,1,1\nA,F,2,1\nB,G,1,1\nB,H,3,1\n")
    assert run("blend", disc, "--operator", "fe", "-o", tmp_path / "o.csv") == 4
    assert run("blend", disc, "--operator", "bogus", "-o", tmp_path / "o.csv") == 2


def test_diagnose(tmp_path, simpson_csv):
    run("blend", simpson_csv, "--operator", "naive", "-o", tmp_path / "n.csv")
    run("blend", simpson_csv, "--operator", "fe", "-o", tmp_path / "f.csv")
    assert run("diagnose", simpson_csv, tmp_path / "n.csv", "-o", tmp_path / "dn.json") == 0
    assert json.loads((tmp_path / "dn.json").read_text())["ovr"] == 1.0
    assert run("diagnose", simpson_csv, tmp_path / "f.json", "-o", tmp_path / "df.json") == 0
    rep = json.loads((tmp_path / "df.json").read_text())
    assert rep["ovr"] == 0.0 and rep["cdr"] <= 1e-9
    other = tmp_path / "other.csv"
    other.write_text("product_id,world_price,operator\nX,1.0,Naive\nY,2.0,Naive\n")
    assert run("diagnose", simpson_csv, other, "-o", tmp_path / "dx.json") == 2


def test_select(tmp_path, simpson_csv):
    assert run("select", simpson_csv, "-o", tmp_path / "s.json") == 0
    rec = json.loads((tmp_path / "s.json").read_text())
    assert rec["operator"] == "FE"
    assert rec["manifest"]["params"]["rms_max"] == pytest.approx(0.4)
    inter = tmp_path / "inter.csv"
    inter.write_text(panel_to_csv(gen_interaction(0.5)))
    assert run("select", inter, "--rms-max", 0.01, "-o", tmp_path / "s2.json") == 0
    assert json.loads((tmp_path / "s2.json").read_text())["operator"] == "ConvexWeights"


def test_simulate(tmp_path):
    assert run("simulate", "minimal-simpson", "-d", tmp_path / "s") == 0
    assert (tmp_path / "s" / "panel.csv").read_text() == panel_to_csv(gen_minimal_simpson())
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert summary["system_cost"] == 1600 and summary["dominance_pair_count"] == 1

    assert run("simulate", "aidc", "--seed", 7, "-d", tmp_path / "a") == 0
    rows = list(csv.DictReader(open(tmp_path / "a" / "panel.csv")))
    assert len({r["product_id"] for r in rows}) == 6 and len({r["campus_id"] for r in rows}) == 10
    assert all(0.5 <= float(r["price"]) <= 1.5 for r in rows)

    assert run("simulate", "mix-extremity", "--set", "eta=0.5", "-d", tmp_path / "m") == 0
    qty = [float(r["quantity"]) for r in csv.DictReader(open(tmp_path / "m" / "panel.csv"))]
    assert qty == [50, 0, 0, 50, 50, 0, 0, 50]

    assert run("simulate", "dominance", "--preset", "scenario_b", "-d", tmp_path / "d") == 0
    assert run("simulate", "sparsity", "--set", "rho_mask=0.5", "-d", tmp_path / "sp") == 0
    assert json.loads((tmp_path / "sp" / "panel.json").read_text())["cost_target"] > 0
    assert run("simulate", "mix-extremity", "--set", "eta=2", "-d", tmp_path / "x") == 2
    assert run("simulate", "aidc", "--set", "bogus=1", "-d", tmp_path / "x") == 2


def test_sweep_and_config_file(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("# sparsity settings\nreplicates = 3\ngrid = 0,0.3\nseed = 5\n")
    assert run("sweep", "sparsity", "--config", cfg, "-d", tmp_path / "a") == 0
    doc = json.loads((tmp_path / "a" / "sweep.json").read_text())
    assert doc["replicates"] == 3 and doc["grid"] == [0.0, 0.3] and doc["manifest"]["seed"] == 5
    # Flags override the file.
    assert run("sweep", "sparsity", "--config", cfg, "--replicates", 2, "-d", tmp_path / "b") == 0
    assert json.loads((tmp_path / "b" / "sweep.json").read_text())["replicates"] == 2
    assert run("sweep", "mix-extremity", "--grid", "0.5,0.1", "-d", tmp_path / "c") == 2


def test_mix_sweep_csv_crosses_zero_once(tmp_path):
    assert run("sweep", "mix-extremity", "-d", tmp_path) == 0
    rows = [r for r in csv.DictReader(open(tmp_path / "sweep.csv")) if r["operator"] == "naive"]
    gaps = [float(r["ranking_gap"]) for r in rows]
    assert sum(1 for a, b in zip(gaps, gaps[1:]) if a < 0 <= b) == 1


def test_parse_helpers():
    assert parse_value("3") == 3 and parse_value("0.5") == 0.5 and parse_value("true") is True
    assert parse_value("1,2.5") == (1, 2.5) and parse_value("scenario_a") == "scenario_a"
    assert parse_grid("0:1:0.25") == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert parse_grid("0,0.15,0.3") == (0.0, 0.15, 0.3)
