from __future__ import annotations

import numpy as np

from ..panel import PricePanel
from .base import OperatorTag, WorldPriceVector


def naive_blend(panel: PricePanel) -> WorldPriceVector:
    """Each product's own deployment-weighted average price.

    Unobserved cells carry zero quantity and are skipped.
    """
    q = panel.quantities
    p = np.where(panel.observed, panel.prices, 0.0)
    prices = (p * q).sum(axis=1) / q.sum(axis=1)
    return WorldPriceVector(OperatorTag.NAIVE, prices, panel.product_ids)
