from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from worldprice.diagnostics import (
    additive_rms,
    blended_cost,
    cdr,
    diagnose,
    dominance_pairs,
    imputation_rmse,
    ovr,
    ranking_gap,
    violations,
)
from worldprice.errors import IncompletePanel, NoMaskedCells, UnknownProduct, ZeroSystemCost
from worldprice.operators import WorldPriceVector, convex_blend, fe_blend, fit_two_way_fe, naive_blend
from worldprice.panel import PricePanel, build_panel
from worldprice.scenarios import gen_interaction

from conftest import random_panel
from oracles import dominance_brute


def wpv(prices, ids=("A", "B")):
    return WorldPriceVector("Naive", prices, ids)


def test_simpson_dominance(simpson):
    dom = dominance_pairs(simpson)
    assert len(dom) == 1 and dom.evaluated_on == "CompleteMatrix"
    pair = dom.pairs[0]
    assert (pair.i, pair.k, pair.cheaper, pair.dearer) == (0, 1, 0, 1)


def test_identical_rows_are_not_dominant():
    p = PricePanel(("A", "B"), ("E", "C"), [[3.0, 4.0], [3.0, 4.0]], np.ones((2, 2)))
    assert len(dominance_pairs(p)) == 0


def test_dominance_matches_brute_force():
    rng = np.random.default_rng(30)
    for _ in range(100):
        I, J = rng.integers(2, 9), rng.integers(1, 9)
        prices = rng.integers(0, 4, size=(I, J)).astype(float)  # small ints create ties
        drop = rng.random((I, J)) < 0.2
        drop[:, 0] = False
        prices[drop] = np.nan
        p = PricePanel([f"P{i}" for i in range(I)], [f"C{j}" for j in range(J)], prices, np.where(drop, 0, 1.0))
        got = [(d.i, d.k, d.cheaper) for d in dominance_pairs(p).pairs]
        assert got == dominance_brute(prices)


def test_no_common_campus_excluded():
    p = build_panel([("A", "E", 1, 1), ("B", "C", 2, 1), ("C", "E", 3, 1), ("C", "C", 3, 1)])
    dom = dominance_pairs(p)
    assert dom.no_common_campus == 1 and dom.evaluated_on == "ObservedCellsCommon"
    assert len(dom) == 2


def test_ovr_simpson(simpson):
    dom = dominance_pairs(simpson)
    assert ovr(dom, naive_blend(simpson)) == 1.0
    assert ovr(dom, fe_blend(simpson)[0]) == 0.0
    assert len(violations(dom, naive_blend(simpson))) == 1


def test_ovr_undefined_without_pairs():
    p = PricePanel(("A", "B"), ("E", "C"), [[1.0, 4.0], [2.0, 3.0]], np.ones((2, 2)))
    assert ovr(dominance_pairs(p), wpv([1.0, 2.0])) is None


def test_ovr_ties_are_not_violations(simpson):
    assert ovr(dominance_pairs(simpson), wpv([5.0, 5.0])) == 0.0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 100))
def test_ovr_scale_invariant(seed, scale):
    p = random_panel(np.random.default_rng(seed), 5, 3)
    scaled = PricePanel(p.product_ids, p.campus_ids, p.prices * scale, p.quantities)
    world = naive_blend(p)
    world_scaled = WorldPriceVector("Naive", world.prices * scale, world.product_ids)
    assert [(d.i, d.k, d.cheaper) for d in dominance_pairs(p).pairs] == [
        (d.i, d.k, d.cheaper) for d in dominance_pairs(scaled).pairs
    ]
    assert ovr(dominance_pairs(p), world) == ovr(dominance_pairs(scaled), world_scaled)


def test_convex_never_reverses():
    rng = np.random.default_rng(31)
    for _ in range(100):
        p = random_panel(rng, 5, 4)
        world, _ = convex_blend(p, fallback="boundary")
        assert not violations(dominance_pairs(p), world)


def test_cdr(simpson):
    naive = naive_blend(simpson)
    assert cdr(simpson, naive) <= 1e-10
    assert cdr(simpson, fe_blend(simpson)[0]) <= 1e-9
    doubled = WorldPriceVector("Naive", naive.prices * 2, naive.product_ids)
    assert cdr(simpson, doubled) == pytest.approx(1.0)
    assert blended_cost(simpson, naive) == pytest.approx(1600)
    free = PricePanel(("A",), ("E",), [[0.0]], [[1.0]])
    with pytest.raises(ZeroSystemCost):
        cdr(free, WorldPriceVector("Naive", [0.0], ("A",)))


def test_cdr_naive_random():
    rng = np.random.default_rng(32)
    for _ in range(100):
        p = random_panel(rng, 4, 4, missing=0.3)
        assert cdr(p, naive_blend(p)) <= 1e-10


def test_ranking_gap(simpson):
    assert ranking_gap(naive_blend(simpson), "A", "B") == pytest.approx(2.8)
    assert ranking_gap(fe_blend(simpson)[0], "A", "B") == pytest.approx(-2)
    assert ranking_gap(wpv([3.0, 3.0]), "A", "B") == 0
    w = wpv([1.25, 7.5])
    assert ranking_gap(w, "A", "B") == -ranking_gap(w, "B", "A")
    with pytest.raises(UnknownProduct):
        ranking_gap(w, "A", "Z")


def test_additive_rms():
    assert additive_rms(PricePanel(("A", "B"), ("E", "C"), [[10.0, 4.0], [12.0, 6.0]], np.ones((2, 2)))) <= 1e-10
    values = [additive_rms(gen_interaction(g)) for g in np.arange(0, 0.51, 0.1)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    with pytest.raises(IncompletePanel):
        additive_rms(build_panel([("A", "E", 1, 1), ("B", "C", 1, 1), ("B", "E", 1, 1)]))


def test_additive_rms_matches_lstsq():
    rng = np.random.default_rng(33)
    p = random_panel(rng, 4, 5)
    I, J = p.shape
    X = np.zeros((I * J, I + J))
    for i in range(I):
        for j in range(J):
            X[i * J + j, i] = X[i * J + j, I + j] = 1
    y = p.prices.ravel()
    resid = y - X @ np.linalg.lstsq(X, y, rcond=None)[0]
    assert additive_rms(p) == pytest.approx(np.sqrt(np.mean(resid**2)), rel=1e-10)


def test_imputation_rmse():
    additive = np.add.outer([1.0, 2.0, 4.0], [0.0, 3.0, 5.0])
    truth = PricePanel(("A", "B", "C"), ("X", "Y", "Z"), additive, np.ones((3, 3)))
    with pytest.raises(NoMaskedCells):
        imputation_rmse(truth, fit_two_way_fe(truth))
    masked = additive.copy()
    masked[1, 1] = np.nan
    q = np.where(np.isnan(masked), 0.0, 1.0)
    fit = fit_two_way_fe(PricePanel(truth.product_ids, truth.campus_ids, masked, q))
    assert imputation_rmse(truth, fit) <= 1e-9


def test_diagnose_report(simpson):
    rep = diagnose(simpson, naive_blend(simpson), ("A", "B"))
    obj = json.loads(rep.to_json())
    assert list(obj) == ["ovr", "cdr", "dominant_pair_count", "violations", "ranking_gap", "additive_rms", "imputation_rmse"]
    assert obj["ovr"] == 1.0 and obj["dominant_pair_count"] == 1
    assert obj["violations"] == [{"cheaper": "A", "dearer": "B", "cheaper_world_price": 9.4, "dearer_world_price": 6.6}]
