"""Deterministic panel generators for the worked example, the dominance and
AI data-center scenarios, and the three stress tests."""

from __future__ import annotations

import string

import numpy as np

from ..errors import BadParams, IdentifiabilityUnreachable
from ..operators.fixed_effects import _components
from ..panel import PricePanel, aggregates, is_complete
from .rng import rng_for


def _letters(n: int) -> tuple[str, ...]:
    if n <= 26:
        return tuple(string.ascii_uppercase[:n])
    return tuple(f"P{i + 1}" for i in range(n))


def _unit_grid(n: int) -> np.ndarray:
    """n evenly spaced points on [-1, 1] (a single point sits at 0)."""
    return np.linspace(-1.0, 1.0, n) if n > 1 else np.zeros(1)


def _standardize(x: np.ndarray) -> np.ndarray:
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.zeros_like(x)
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def _tilted_mixes(tilts, z, skew, rng, noise=0.25) -> np.ndarray:
    """Row-stochastic mixes w_ij proportional to exp(skew * (t_i z_j + noise * xi_ij)).

    Positive tilt leans a product toward campuses with high ``z``; skew 0
    gives uniform mixes regardless of the noise draw.
    """
    xi = rng.standard_normal((len(tilts), len(z)))
    logits = skew * (np.outer(tilts, z) + noise * xi)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=1, keepdims=True)


# --- worked example --------------------------------------------------------


def gen_minimal_simpson() -> PricePanel:
    """Two products, two campuses; A is cheaper at both but mostly sits at E."""
    return PricePanel(
        ("A", "B"),
        ("E", "C"),
        [[10.0, 4.0], [12.0, 6.0]],
        [[90.0, 10.0], [10.0, 90.0]],
    )


# --- dominance scenarios ---------------------------------------------------

PRESETS = {
    "scenario_a": dict(
        I=3,
        J=4,
        campus_levels=(4.0, 6.0, 8.0, 10.0),
        product_steps=(2.0, 2.0),
        mix_skew=3.0,
        mix_tilts=(1.0, -1.0, 0.0),
        product_names=("A", "B", "C"),
        campus_names=("E1", "E2", "E3", "E4"),
    ),
    "scenario_b": dict(
        I=5,
        J=8,
        campus_levels=(14.0, 13.0, 12.0, 11.0, 10.0, 9.0, 8.0, 7.0),
        product_steps=(1.0, 1.0, 1.0, 1.0),
        mix_skew=2.5,
        mix_tilts=(1.0, -1.0, 0.1, 0.0, -0.1),
        product_names=("P1", "P2", "P3", "P4", "P5"),
        campus_names=tuple(f"C{j}" for j in range(1, 9)),
    ),
}


def gen_dominance_scenario(
    I: int,
    J: int,
    seed: int = 0,
    campus_levels=None,
    product_steps=None,
    mix_skew: float = 2.0,
    mix_tilts=None,
    product_base: float = 0.0,
    total_range=(80.0, 120.0),
    product_names=None,
    campus_names=None,
) -> PricePanel:
    """Additive prices p_ij = level_j + offset_i with a common product order.

    ``product_steps`` (length I-1, all positive) are the gaps between
    consecutive products, so product i is strictly cheaper than product i+1 at
    every campus. Mixes lean each product toward expensive (positive tilt) or
    cheap (negative tilt) campuses with strength ``mix_skew``; the default
    tilts run from +1 for the cheapest product to -1 for the dearest.
    """
    I, J = int(I), int(J)
    if I < 2 or J < 2:
        raise BadParams("dominance scenarios need I >= 2 and J >= 2")
    levels = np.linspace(4.0, 10.0, J) if campus_levels is None else np.asarray(campus_levels, float)
    steps = np.full(I - 1, 2.0) if product_steps is None else np.asarray(product_steps, float)
    tilts = np.linspace(1.0, -1.0, I) if mix_tilts is None else np.asarray(mix_tilts, float)
    if levels.shape != (J,):
        raise BadParams(f"campus_levels needs {J} entries")
    if steps.shape != (I - 1,) or not (steps > 0).all():
        raise BadParams(f"product_steps needs {I - 1} strictly positive entries")
    if tilts.shape != (I,):
        raise BadParams(f"mix_tilts needs {I} entries")
    if not mix_skew >= 0:
        raise BadParams("mix_skew must be nonnegative")
    offsets = product_base + np.concatenate([[0.0], np.cumsum(steps)])
    prices = offsets[:, None] + levels[None, :]
    if (prices < 0).any() or not np.isfinite(prices).all():
        raise BadParams("campus levels and offsets give negative prices")

    rng = rng_for(seed, 0)
    totals = rng.uniform(*total_range, size=I)
    mixes = _tilted_mixes(tilts, _standardize(levels), mix_skew, rng)
    products = tuple(product_names) if product_names else _letters(I)
    campuses = tuple(campus_names) if campus_names else tuple(f"E{j + 1}" for j in range(J))
    return PricePanel(products, campuses, prices, totals[:, None] * mixes)


def preset_params(name: str) -> dict:
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise BadParams(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


# --- AI data-center OPEX ---------------------------------------------------

AIDC_DEFAULTS = dict(
    n_campuses=10,
    retail_range=(0.09, 0.18),  # $/kWh
    pue_range=(1.2, 1.6),
    kwh_per_hour=3.0,
    markup=2.0,
    # Evenly spaced descending ladder; keeps every unit cost inside
    # [0.5, 1.5] $/compute-hour for any retail price and PUE in range.
    sku_multipliers=(0.865, 0.847, 0.829, 0.811, 0.793, 0.775),
    total_hours=5e5,
    total_spread=0.2,
    # Training SKUs lean to cheap regions, inference SKUs to the hubs.
    mix_tilts=(-0.8, -1.0, -0.3, -0.5, 1.0, 0.8),
    mix_skew=2.5,
)


def gen_aidc_opex(seed: int = 0, **overrides) -> PricePanel:
    """Stylized AI data-center unit OPEX panel (SKU x data center).

    unit OPEX = kWh per compute-hour x retail price x PUE x markup x SKU
    multiplier; data centers are numbered from most to least expensive.
    """
    cfg = dict(AIDC_DEFAULTS)
    unknown = set(overrides) - set(cfg)
    if unknown:
        raise BadParams(f"unknown AI-DC parameters: {sorted(unknown)}")
    cfg.update(overrides)
    M = int(cfg["n_campuses"])
    mult = np.asarray(cfg["sku_multipliers"], float)
    tilts = np.asarray(cfg["mix_tilts"], float)
    if M < 2 or mult.ndim != 1 or mult.size < 2 or tilts.shape != mult.shape:
        raise BadParams("need >= 2 campuses and one tilt per SKU multiplier")
    if not (np.diff(mult) < 0).all() or (mult <= 0).any():
        raise BadParams("sku_multipliers must be positive and strictly decreasing")

    rng = rng_for(seed, 0)
    retail = rng.uniform(*cfg["retail_range"], size=M)
    pue = rng.uniform(*cfg["pue_range"], size=M)
    effective = np.sort(retail * pue)[::-1]
    prices = cfg["kwh_per_hour"] * cfg["markup"] * np.outer(mult, effective)

    spread = float(cfg["total_spread"])
    totals = cfg["total_hours"] * rng.uniform(1 - spread, 1 + spread, size=mult.size)
    mixes = _tilted_mixes(tilts, _standardize(effective), cfg["mix_skew"], rng, noise=0.3)
    return PricePanel(
        tuple(f"SKU{i + 1}" for i in range(mult.size)),
        tuple(f"DC{m + 1}" for m in range(M)),
        prices,
        totals[:, None] * mixes,
    )


# --- stress tests -----------------------------------------------------------

MIX_DEFAULTS = dict(prices_a=(4.0, 6.0, 8.0, 10.0), prices_b=(5.0, 7.0, 9.0, 11.0), q_a=100.0, q_b=100.0)


def gen_mix_extremity(eta: float, prices_a=None, prices_b=None, q_a: float = 100.0, q_b: float = 100.0) -> PricePanel:
    """Two products on four campuses with mixes [1-eta, 0, 0, eta] for A and
    [eta, 0, 0, 1-eta] for B; campus 4 is the most expensive."""
    pa = np.asarray(MIX_DEFAULTS["prices_a"] if prices_a is None else prices_a, float)
    pb = np.asarray(MIX_DEFAULTS["prices_b"] if prices_b is None else prices_b, float)
    if not 0.0 <= eta <= 1.0:
        raise BadParams("eta must lie in [0, 1]")
    if pa.shape != (4,) or pb.shape != (4,):
        raise BadParams("mix extremity uses exactly four campuses")
    if not (np.diff(pa) >= 0).all() or not (np.diff(pb) >= 0).all():
        raise BadParams("campus prices must be sorted so campus 4 is the most expensive")
    if not (pa < pb).all():
        raise BadParams("product A must be strictly cheaper than B at every campus")
    if not (q_a > 0 and q_b > 0):
        raise BadParams("product totals must be positive")
    wa = np.array([1 - eta, 0.0, 0.0, eta])
    wb = np.array([eta, 0.0, 0.0, 1 - eta])
    return PricePanel(
        ("A", "B"),
        ("C1", "C2", "C3", "C4"),
        np.vstack([pa, pb]),
        np.vstack([q_a * wa, q_b * wb]),
    )


INTERACTION_DEFAULTS = dict(I=4, J=6, alpha_range=(0.0, 0.3), beta_range=(0.0, 1.0), mismatch=3.5, total=100.0)


def gen_interaction(
    gamma: float,
    seed: int = 0,
    I: int = 4,
    J: int = 6,
    alpha_range=(0.0, 0.3),
    beta_range=(0.0, 1.0),
    mismatch: float = 3.5,
    total: float = 100.0,
) -> PricePanel:
    """log p_ij = alpha_i + beta_j + gamma u_i v_j on a full matrix.

    alpha and beta are ascending grids over their ranges and u, v are
    symmetric grids on [-1, 1], so product A is the cheapest and campus J the
    most expensive. Mixes carry a fixed mismatch that leans low-u products to
    expensive campuses; they and the totals depend on the seed only, never on
    gamma.
    """
    I, J = int(I), int(J)
    if I < 2 or J < 2:
        raise BadParams("interaction stress needs I >= 2 and J >= 2")
    if not gamma >= 0:
        raise BadParams("gamma must be nonnegative")
    alpha = np.linspace(*alpha_range, I)
    beta = np.linspace(*beta_range, J)
    u, v = _unit_grid(I), _unit_grid(J)
    prices = np.exp(alpha[:, None] + beta[None, :] + gamma * np.outer(u, v))

    rng = rng_for(seed, 0)
    totals = total * rng.uniform(0.8, 1.2, size=I)
    mixes = _tilted_mixes(-u, v, mismatch, rng)
    return PricePanel(_letters(I), tuple(f"C{j + 1}" for j in range(J)), prices, totals[:, None] * mixes)


def _identifiable(observed: np.ndarray) -> bool:
    n_i, n_j = observed.shape
    need = min(2, n_j)
    if (observed.sum(axis=1) < need).any() or (observed.sum(axis=0) < 1).any():
        return False
    return _components(n_i, n_j, np.argwhere(observed)) == 1


def apply_sparsity_mask(
    panel: PricePanel,
    rho_mask: float,
    seed: int = 0,
    redistribute: bool = True,
    max_attempts: int = 1000,
) -> PricePanel:
    """Hide each price cell independently with probability ``rho_mask``.

    Masks are redrawn (attempt counter as sub-stream) until every product
    keeps at least two observed campuses, every campus keeps one observed
    product and the observed cells are connected. Quantity on hidden cells is
    spread over the product's remaining campuses in proportion to its mix, or
    dropped when ``redistribute`` is False. The pre-mask cost is carried as the
    accounting target.
    """
    if not is_complete(panel):
        raise BadParams("sparsity masks apply to complete panels")
    if not 0.0 <= rho_mask <= 0.75:
        raise BadParams("rho_mask must lie in [0, 0.75]")
    q = panel.quantities
    target = aggregates(panel).cost_target
    for attempt in range(max_attempts):
        draw = rng_for(seed, attempt).random(panel.shape)
        observed = ~(draw < rho_mask)
        if not _identifiable(observed):
            continue
        kept = np.where(observed, q, 0.0)
        kept_tot = kept.sum(axis=1)
        if (kept_tot <= 0).any():
            continue
        if redistribute:
            kept = kept * (q.sum(axis=1) / kept_tot)[:, None]
        prices = np.where(observed, panel.prices, np.nan)
        return PricePanel(panel.product_ids, panel.campus_ids, prices, kept, target)
    raise IdentifiabilityUnreachable(
        f"no identifiable mask in {max_attempts} attempts at rho_mask={rho_mask}"
    )
