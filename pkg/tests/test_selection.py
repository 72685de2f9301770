from __future__ import annotations

import math

from worldprice.operators.selection import Thresholds, select_operator
from worldprice.scenarios import gen_interaction


def test_additive_panel_recommends_fe(simpson):
    rec = select_operator(simpson)
    assert rec.operator == "FE" and rec.rule == "fe_gates_passed"
    assert rec.fe_ovr == 0.0 and rec.naive_ovr == 1.0
    assert rec.thresholds.rms_max == 0.05 * 1600 / 200


def test_interaction_with_strict_thresholds_recommends_convex():
    rec = select_operator(gen_interaction(0.5), Thresholds(ovr_max=0.0, rms_max=0.01))
    assert rec.operator == "ConvexWeights" and rec.rule == "fe_rms_above_threshold"


def test_infinite_thresholds_always_fe():
    rec = select_operator(gen_interaction(0.5), Thresholds(math.inf, math.inf))
    assert rec.operator == "FE"


def test_recommendation_serializes(simpson):
    obj = select_operator(simpson).to_json_obj()
    assert obj["thresholds"]["ovr_max"] == 0.0 and obj["naive_prices"] == {"A": 9.4, "B": 6.6}
