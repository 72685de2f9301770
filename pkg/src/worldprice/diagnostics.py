"""Ranking and accounting diagnostics for world-price vectors.

Dominance is decided on the campuses where both products are observed; a
pair is dominant when one product is weakly cheaper at every such campus and
strictly cheaper at one. Reversals are strict world-price inversions beyond a
1e-12 tie tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IncompletePanel, NoMaskedCells, UnknownProduct, ZeroSystemCost
from .operators.base import WorldPriceVector
from .operators.fixed_effects import FEFit
from .panel import PricePanel, aggregates, is_complete

TIE_TOL = 1e-12


@dataclass(frozen=True)
class DominancePair:
    i: int
    k: int
    cheaper: int  # index of the campuswise-cheaper product (i or k)

    @property
    def dearer(self) -> int:
        return self.k if self.cheaper == self.i else self.i


@dataclass(frozen=True)
class DominanceSet:
    pairs: tuple[DominancePair, ...]
    evaluated_on: str  # "CompleteMatrix" or "ObservedCellsCommon"
    no_common_campus: int = 0

    def __len__(self) -> int:
        return len(self.pairs)


def dominance_pairs(panel: PricePanel) -> DominanceSet:
    p = panel.prices
    obs = panel.observed
    n = p.shape[0]
    pairs = []
    skipped = 0
    for i in range(n):
        for k in range(i + 1, n):
            common = obs[i] & obs[k]
            if not common.any():
                skipped += 1
                continue
            diff = p[i, common] - p[k, common]
            if (diff <= 0).all() and (diff < 0).any():
                pairs.append(DominancePair(i, k, i))
            elif (diff >= 0).all() and (diff > 0).any():
                pairs.append(DominancePair(i, k, k))
    where = "CompleteMatrix" if is_complete(panel) else "ObservedCellsCommon"
    return DominanceSet(tuple(pairs), where, skipped)


def violations(dominance: DominanceSet, world: WorldPriceVector) -> list[DominancePair]:
    wp = world.prices
    return [d for d in dominance.pairs if wp[d.cheaper] > wp[d.dearer] + TIE_TOL]


def ovr(dominance: DominanceSet, world: WorldPriceVector) -> Optional[float]:
    """Share of dominant pairs whose world prices invert the local ordering.

    None when there are no dominant pairs.
    """
    if not dominance.pairs:
        return None
    return len(violations(dominance, world)) / len(dominance.pairs)


def blended_cost(panel: PricePanel, world: WorldPriceVector) -> float:
    return float(world.prices @ aggregates(panel).product_totals)


def cdr(panel: PricePanel, world: WorldPriceVector) -> float:
    C = aggregates(panel).cost_target
    if C == 0:
        raise ZeroSystemCost("cost distortion is undefined when the realized cost is zero")
    return abs(blended_cost(panel, world) - C) / C


def ranking_gap(world: WorldPriceVector, a: str, b: str) -> float:
    ids = world.product_ids
    for x in (a, b):
        if x not in ids:
            raise UnknownProduct(f"unknown product {x!r}")
    return float(world.prices[ids.index(a)] - world.prices[ids.index(b)])


def additive_rms(panel: PricePanel) -> float:
    """RMS residual of the unweighted additive fit p_ij ~ a_i + b_j in levels."""
    if not is_complete(panel):
        raise IncompletePanel("additive_rms needs a complete panel")
    p = panel.prices
    resid = p - p.mean(axis=1, keepdims=True) - p.mean(axis=0, keepdims=True) + p.mean()
    return float(np.sqrt(np.mean(resid**2)))


def imputation_rmse(truth: PricePanel, fit: FEFit) -> float:
    """RMSE of the additive fit against the true prices on imputed cells."""
    if not fit.imputed_cells:
        raise NoMaskedCells("no cells were imputed")
    if not is_complete(truth):
        raise IncompletePanel("truth must be the complete pre-masking panel")
    idx = np.array(fit.imputed_cells)
    err = fit.fitted[idx[:, 0], idx[:, 1]] - truth.prices[idx[:, 0], idx[:, 1]]
    return float(np.sqrt(np.mean(err**2)))


@dataclass
class DiagnosticsReport:
    ovr: Optional[float]
    cdr: float
    violations: list = field(default_factory=list)
    dominant_pair_count: int = 0
    ranking_gap: Optional[float] = None
    additive_rms: Optional[float] = None
    imputation_rmse: Optional[float] = None

    def to_json_obj(self) -> dict:
        return {
            "ovr": self.ovr,
            "cdr": self.cdr,
            "dominant_pair_count": self.dominant_pair_count,
            "violations": self.violations,
            "ranking_gap": self.ranking_gap,
            "additive_rms": self.additive_rms,
            "imputation_rmse": self.imputation_rmse,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2) + "\n"


def diagnose(panel: PricePanel, world: WorldPriceVector, pair: tuple[str, str] | None = None) -> DiagnosticsReport:
    dom = dominance_pairs(panel)
    ids = panel.product_ids
    viol = [
        {
            "cheaper": ids[d.cheaper],
            "dearer": ids[d.dearer],
            "cheaper_world_price": float(world.prices[d.cheaper]),
            "dearer_world_price": float(world.prices[d.dearer]),
        }
        for d in violations(dom, world)
    ]
    return DiagnosticsReport(
        ovr=ovr(dom, world),
        cdr=cdr(panel, world),
        violations=viol,
        dominant_pair_count=len(dom),
        ranking_gap=ranking_gap(world, *pair) if pair else None,
        additive_rms=additive_rms(panel) if is_complete(panel) else None,
    )
