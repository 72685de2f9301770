"""FE-first, convex-guardrail operator selection.

Step 0 computes the naive blend as an accounting baseline, step 1 fits the
additive FE model, step 2 measures dominance violations under naive and FE
prices, step 3 picks FE unless a gate fails.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

from ..panel import PricePanel, aggregates
from .fixed_effects import fe_blend
from .naive import naive_blend

DEFAULT_OVR_MAX = 0.0
DEFAULT_RMS_REL = 0.05


@dataclass(frozen=True)
class Thresholds:
    """Gates for keeping FE. ``rms_max`` of None resolves to 5% of C / sum(Q)."""

    ovr_max: float = DEFAULT_OVR_MAX
    rms_max: float | None = None

    def resolve(self, panel: PricePanel) -> "Thresholds":
        if self.rms_max is not None:
            return self
        agg = aggregates(panel)
        unit_cost = agg.cost_target / float(agg.product_totals.sum())
        return Thresholds(self.ovr_max, DEFAULT_RMS_REL * unit_cost)


@dataclass(frozen=True)
class Recommendation:
    operator: str  # "FE" or "ConvexWeights"
    rule: str
    thresholds: Thresholds
    naive_prices: dict
    naive_cdr: float
    naive_ovr: float | None
    fe_prices: dict
    fe_rms_residual: float
    fe_ovr: float | None
    dominant_pair_count: int

    def to_json_obj(self) -> dict:
        out = asdict(self)
        out["thresholds"] = asdict(self.thresholds)
        return out


def select_operator(panel: PricePanel, thresholds: Thresholds | None = None) -> Recommendation:
    from ..diagnostics import cdr, dominance_pairs, ovr

    th = (thresholds or Thresholds()).resolve(panel)
    naive = naive_blend(panel)
    fe, fit = fe_blend(panel)
    dom = dominance_pairs(panel)
    naive_ovr = ovr(dom, naive)
    fe_ovr = ovr(dom, fe)

    rms_ok = fit.rms_residual <= th.rms_max
    # No dominant pairs means nothing can be reversed.
    ovr_ok = fe_ovr is None or fe_ovr <= th.ovr_max
    if rms_ok and ovr_ok:
        choice, rule = "FE", "fe_gates_passed"
    elif not rms_ok:
        choice, rule = "ConvexWeights", "fe_rms_above_threshold"
    else:
        choice, rule = "ConvexWeights", "fe_ovr_above_threshold"
    return Recommendation(
        operator=choice,
        rule=rule,
        thresholds=th,
        naive_prices=naive.as_dict(),
        naive_cdr=cdr(panel, naive),
        naive_ovr=naive_ovr,
        fe_prices=fe.as_dict(),
        fe_rms_residual=fit.rms_residual,
        fe_ovr=fe_ovr,
        dominant_pair_count=len(dom),
    )
