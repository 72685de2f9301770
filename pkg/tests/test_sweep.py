from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest

from worldprice.errors import BadParams
from worldprice.scenarios import ScenarioConfig, run_sweep


def test_mix_extremity_sweep_shape():
    rep = run_sweep(ScenarioConfig("mix-extremity"), np.linspace(0, 1, 11))
    naive = rep.series("naive", "ranking_gap")
    assert all(b > a for a, b in zip(naive, naive[1:]))
    assert max(rep.series("fe", "ranking_gap")) < 0
    assert max(rep.series("convex", "ranking_gap")) < 0
    assert len(rep.per_point) == len(rep.grid)


def test_interaction_sweep_shape():
    rep = run_sweep(ScenarioConfig("interaction", seed=1), [0, 0.1, 0.2, 0.3, 0.4, 0.5], replicates=3)
    rms = rep.point_series("additive_rms")
    assert all(b >= a for a, b in zip(rms, rms[1:]))
    gap = np.array(rep.series("naive", "ranking_gap")) - np.array(rep.series("fe", "ranking_gap"))
    assert (gap > 0).all()


def test_sparsity_sweep_small():
    rep = run_sweep(ScenarioConfig("sparsity", seed=2), [0.0, 0.3, 0.6], replicates=10)
    assert rep.per_point[0]["imputation_rmse"] is None
    assert rep.per_point[0]["operators"]["convex"]["mae_vs_oracle"] <= 1e-10
    for pt in rep.per_point:
        ops = pt["operators"]
        assert ops["fe"]["reversal_rate"] <= ops["naive"]["reversal_rate"]


def test_sweep_validation():
    with pytest.raises(BadParams):
        run_sweep(ScenarioConfig("mix-extremity"), [])
    with pytest.raises(BadParams):
        run_sweep(ScenarioConfig("mix-extremity"), [0.2, 0.1])
    with pytest.raises(BadParams):
        run_sweep(ScenarioConfig("mix-extremity"), [0.1], replicates=0)
    with pytest.raises(BadParams):
        run_sweep(ScenarioConfig("sparsity"), [0.9])
    with pytest.raises(BadParams):
        run_sweep(ScenarioConfig("bogus"), [0.1])
    with pytest.raises(BadParams):
        run_sweep(ScenarioConfig("interaction", params={"nope": 1}), [0.1])


def test_sweep_serializers():
    rep = run_sweep(ScenarioConfig("sparsity", seed=3), [0.0, 0.3], replicates=2)
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert len(rows) == 2 * 3 and rows[0]["operator"] == "naive"
    tidy = list(csv.DictReader(io.StringIO(rep.to_tidy_csv())))
    assert {r["metric"] for r in tidy} >= {"ranking_gap", "reversal_rate", "imputation_rmse", "mae_vs_oracle"}
    obj = json.loads(rep.to_json())
    assert obj["grid"] == [0.0, 0.3] and obj["replicates"] == 2


def test_parallel_matches_serial():
    cfg = ScenarioConfig("sparsity", seed=4)
    a = run_sweep(cfg, [0.0, 0.3, 0.6], replicates=4, workers=1)
    b = run_sweep(cfg, [0.0, 0.3, 0.6], replicates=4, workers=2)
    assert a.to_json() == b.to_json()
