"""Two-way fixed-effects world prices.

The fit minimizes sum_ij q_ij (p_ij - alpha_i - gamma_j)^2 over observed cells
subject to sum_j gamma_j = 0, imposed by substituting
gamma_J = -(gamma_1 + ... + gamma_{J-1}). World prices are alpha_i plus one
common shift that restores the accounting total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DisconnectedPanel
from ..panel import PricePanel, aggregates
from .base import OperatorTag, WorldPriceVector

_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FEFit:
    alpha: np.ndarray
    gamma: np.ndarray
    delta: float
    fitted: np.ndarray
    rms_residual: float
    imputed_cells: tuple[tuple[int, int], ...]
    clamped_cells: int
    completed_prices: np.ndarray  # observed prices, missing cells filled from the fit
    product_ids: tuple[str, ...]
    campus_ids: tuple[str, ...]

    def summary(self) -> dict:
        return {
            "alpha": {p: float(a) for p, a in zip(self.product_ids, self.alpha)},
            "gamma": {c: float(g) for c, g in zip(self.campus_ids, self.gamma)},
            "delta": float(self.delta),
            "rms_residual": float(self.rms_residual),
            "imputed_cells": [
                [self.product_ids[i], self.campus_ids[j]] for i, j in self.imputed_cells
            ],
            "clamped_cells": int(self.clamped_cells),
        }


def _components(n_rows: int, n_cols: int, cells: np.ndarray) -> int:
    """Number of connected components of the bipartite row/column graph."""
    parent = list(range(n_rows + n_cols))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in cells:
        a, b = find(int(i)), find(n_rows + int(j))
        if a != b:
            parent[max(a, b)] = min(a, b)
    return len({find(x) for x in range(n_rows + n_cols)})


def check_connected(panel: PricePanel) -> None:
    n_i, n_j = panel.shape
    cells = np.argwhere(panel.observed)
    n = _components(n_i, n_j, cells)
    if n != 1:
        raise DisconnectedPanel(
            f"observed cells split products and campuses into {n} components; "
            "fixed effects are not identified"
        )


def _design(cells: np.ndarray, n_i: int, n_j: int) -> np.ndarray:
    X = np.zeros((len(cells), n_i + n_j - 1))
    rows = np.arange(len(cells))
    X[rows, cells[:, 0]] = 1.0
    for r, j in enumerate(cells[:, 1]):
        if j < n_j - 1:
            X[r, n_i + j] = 1.0
        else:
            X[r, n_i:] = -1.0
    return X


def _null_space(M: np.ndarray) -> np.ndarray:
    _, s, vt = np.linalg.svd(M)
    rank = int((s > _RANK_TOL * (s[0] if s.size else 0.0)).sum())
    return vt[rank:].T


def _solve(panel: PricePanel) -> np.ndarray:
    n_i, n_j = panel.shape
    obs = panel.observed
    q = panel.quantities / panel.quantities.sum()
    pos_cells = np.argwhere(obs & (q > 0))
    X = _design(pos_cells, n_i, n_j)
    w = q[pos_cells[:, 0], pos_cells[:, 1]]
    y = panel.prices[pos_cells[:, 0], pos_cells[:, 1]]

    if _components(n_i, n_j, pos_cells) == 1:
        normal = X.T @ (w[:, None] * X)
        return np.linalg.solve(normal, X.T @ (w * y))

    # Quantity weights leave part of the effects free (some observed cells carry
    # zero quantity). Among the weighted minimizers take the one that best fits
    # the zero-weight observed prices: the limit of giving those cells weight -> 0.
    sw = np.sqrt(w)
    theta0 = np.linalg.lstsq(sw[:, None] * X, sw * y, rcond=None)[0]
    Z = _null_space(sw[:, None] * X)
    zero_cells = np.argwhere(obs & (q <= 0))
    X0 = _design(zero_cells, n_i, n_j)
    y0 = panel.prices[zero_cells[:, 0], zero_cells[:, 1]]
    t = np.linalg.lstsq(X0 @ Z, y0 - X0 @ theta0, rcond=None)[0]
    return theta0 + Z @ t


def fit_two_way_fe(panel: PricePanel) -> FEFit:
    """Quantity-weighted two-way FE fit with single-pass additive imputation."""
    check_connected(panel)
    n_i, n_j = panel.shape
    theta = _solve(panel)
    alpha = theta[:n_i]
    gamma = np.append(theta[n_i:], -theta[n_i:].sum())
    fitted = alpha[:, None] + gamma[None, :]

    obs = panel.observed
    q = panel.quantities
    resid = np.where(obs, panel.prices - fitted, 0.0)
    rms = float(np.sqrt((q * resid**2).sum() / q.sum()))

    missing = ~obs
    fill = fitted.copy()
    clamped = int((missing & (fill < 0)).sum())
    fill = np.maximum(fill, 0.0)
    completed = np.where(obs, panel.prices, fill)
    imputed = tuple((int(i), int(j)) for i, j in np.argwhere(missing))

    agg = aggregates(panel)
    Q = agg.product_totals
    delta = (agg.cost_target - float(alpha @ Q)) / float(Q.sum())

    for arr in (alpha, gamma, fitted, completed):
        arr.setflags(write=False)
    return FEFit(
        alpha=alpha,
        gamma=gamma,
        delta=float(delta),
        fitted=fitted,
        rms_residual=rms,
        imputed_cells=imputed,
        clamped_cells=clamped,
        completed_prices=completed,
        product_ids=panel.product_ids,
        campus_ids=panel.campus_ids,
    )


def fe_world_prices(fit: FEFit, panel: PricePanel) -> WorldPriceVector:
    agg = aggregates(panel)
    Q = agg.product_totals
    delta = (agg.cost_target - float(fit.alpha @ Q)) / float(Q.sum())
    return WorldPriceVector(OperatorTag.FIXED_EFFECTS, fit.alpha + delta, panel.product_ids)


def fe_blend(panel: PricePanel) -> tuple[WorldPriceVector, FEFit]:
    fit = fit_two_way_fe(panel)
    return fe_world_prices(fit, panel), fit
