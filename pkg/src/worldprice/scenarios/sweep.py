"""Stress-sweep orchestration.

Each sweep varies one parameter over a grid and, for every replicate, builds a
panel, prices it with the naive, FE and convex operators and records the
ranking gap between the first two products (A minus B). Replicate results are
averaged per grid point.

Sub-seeds are keyed on the replicate index only, so replicate r of every grid
point shares its base draws: interaction quantities are identical across
gamma and sparsity masks are nested across rho.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..diagnostics import TIE_TOL, additive_rms, cdr, dominance_pairs, imputation_rmse, ovr, ranking_gap
from ..errors import BadParams
from ..operators.convex import convex_blend
from ..operators.fixed_effects import fe_blend
from ..operators.naive import naive_blend
from .generators import INTERACTION_DEFAULTS, MIX_DEFAULTS, apply_sparsity_mask, gen_interaction, gen_mix_extremity
from .rng import sub_seed

OPERATORS = ("naive", "fe", "convex")
SWEEP_KINDS = ("mix-extremity", "interaction", "sparsity")

SPARSITY_DEFAULTS = dict(INTERACTION_DEFAULTS, gamma=0.0, redistribute=True)

DEFAULT_GRIDS = {
    "mix-extremity": tuple(round(0.05 * k, 2) for k in range(21)),
    "interaction": tuple(round(0.05 * k, 2) for k in range(11)),
    "sparsity": (0.0, 0.15, 0.3, 0.45, 0.6, 0.75),
}

_DEFAULTS = {
    "mix-extremity": MIX_DEFAULTS,
    "interaction": INTERACTION_DEFAULTS,
    "sparsity": SPARSITY_DEFAULTS,
}

# Operator-level metrics in CSV column order.
OPERATOR_METRICS = ("ranking_gap", "ovr", "reversal_rate", "cdr_max", "mae_vs_oracle")
POINT_METRICS = ("additive_rms", "imputation_rmse", "oracle_gap", "convex_fallbacks")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def resolved_params(self) -> dict:
        if self.kind not in _DEFAULTS:
            raise BadParams(f"unknown sweep kind {self.kind!r}; known: {list(SWEEP_KINDS)}")
        base = dict(_DEFAULTS[self.kind])
        unknown = set(self.params) - set(base) - {"fallback"}
        if unknown:
            raise BadParams(f"unknown {self.kind} parameters: {sorted(unknown)}")
        base["fallback"] = "boundary"
        base.update(self.params)
        return base


@dataclass(frozen=True)
class SweepReport:
    kind: str
    seed: int
    params: dict
    grid: tuple
    replicates: int
    per_point: tuple

    def series(self, operator: str, metric: str) -> list:
        return [pt["operators"][operator][metric] for pt in self.per_point]

    def point_series(self, metric: str) -> list:
        return [pt[metric] for pt in self.per_point]

    def to_json_obj(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "params": _jsonable(self.params),
            "grid": list(self.grid),
            "replicates": self.replicates,
            "per_point": _jsonable(list(self.per_point)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        """Wide table: one row per grid point per operator."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("grid_value", "operator") + OPERATOR_METRICS + POINT_METRICS)
        for g, pt in zip(self.grid, self.per_point):
            for op in OPERATORS:
                m = pt["operators"][op]
                w.writerow([_num(g), op] + [_num(m[k]) for k in OPERATOR_METRICS] + [_num(pt[k]) for k in POINT_METRICS])
        return buf.getvalue()

    def to_tidy_csv(self) -> str:
        """Long figure-data table: grid_value, operator, metric, value.

        Panel-level metrics carry operator ``panel``; missing values are skipped.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("grid_value", "operator", "metric", "value"))
        for g, pt in zip(self.grid, self.per_point):
            for op in OPERATORS:
                for k in OPERATOR_METRICS:
                    v = pt["operators"][op][k]
                    if v is not None:
                        w.writerow((_num(g), op, k, _num(v)))
            for k in POINT_METRICS:
                if pt[k] is not None:
                    w.writerow((_num(g), "panel", k, _num(pt[k])))
        return buf.getvalue()


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _check_grid(kind: str, grid) -> tuple:
    g = tuple(float(v) for v in grid)
    if not g:
        raise BadParams("sweep grid must be nonempty")
    if any(b <= a for a, b in zip(g, g[1:])):
        raise BadParams("sweep grid must be strictly increasing")
    lo, hi = {"mix-extremity": (0.0, 1.0), "interaction": (0.0, math.inf), "sparsity": (0.0, 0.75)}[kind]
    if g[0] < lo or g[-1] > hi:
        raise BadParams(f"{kind} grid values must lie in [{lo}, {hi}]")
    return g


def _price(panel, fallback):
    naive = naive_blend(panel)
    fe, fit = fe_blend(panel)
    conv, sol = convex_blend(panel, fallback=fallback, fit=fit)
    return {"naive": naive, "fe": fe, "convex": conv}, fit, sol


def _replicate(kind: str, seed: int, params: dict, value: float, rep: int) -> dict:
    """Metrics for one (grid value, replicate) cell of the sweep."""
    p = dict(params)
    fallback = p.pop("fallback")
    truth = oracle_gap = None
    if kind == "mix-extremity":
        panel = gen_mix_extremity(value, **p)
    elif kind == "interaction":
        panel = gen_interaction(value, seed=sub_seed(seed, rep), **p)
    else:
        gamma = p.pop("gamma")
        redistribute = p.pop("redistribute")
        truth = gen_interaction(gamma, seed=sub_seed(seed, rep), **p)
        panel = apply_sparsity_mask(truth, value, seed=sub_seed(seed, rep, 1), redistribute=redistribute)
        oracle, _ = convex_blend(truth, fallback=fallback)
        oracle_gap = ranking_gap(oracle, "A", "B")

    worlds, fit, sol = _price(panel, fallback)
    dom = dominance_pairs(panel)
    out = {"operators": {}}
    for op, wpv in worlds.items():
        gap = ranking_gap(wpv, "A", "B")
        if oracle_gap is None:
            # A is the designated cheaper product in both generators.
            reversed_ = gap > TIE_TOL
            mae = None
        else:
            reversed_ = np.sign(gap) != np.sign(oracle_gap)
            mae = abs(gap - oracle_gap)
        o = ovr(dom, wpv)
        out["operators"][op] = {
            "ranking_gap": gap,
            "ovr": o,
            "reversed": bool(reversed_),
            "cdr": cdr(panel, wpv),
            "mae_vs_oracle": mae,
        }
    out["additive_rms"] = additive_rms(panel) if kind == "interaction" else None
    out["imputation_rmse"] = imputation_rmse(truth, fit) if truth is not None and fit.imputed_cells else None
    out["oracle_gap"] = oracle_gap
    out["convex_fallback"] = sol.feasibility.kind != "FeasibleExact"
    return out


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _aggregate(reps: list[dict]) -> dict:
    ops = {}
    for op in OPERATORS:
        rows = [r["operators"][op] for r in reps]
        ops[op] = {
            "ranking_gap": _mean(r["ranking_gap"] for r in rows),
            "ovr": _mean(r["ovr"] for r in rows),
            "reversal_rate": float(np.mean([r["reversed"] for r in rows])),
            "cdr_max": float(max(r["cdr"] for r in rows)),
            "mae_vs_oracle": _mean(r["mae_vs_oracle"] for r in rows),
        }
    return {
        "operators": ops,
        "additive_rms": _mean(r["additive_rms"] for r in reps),
        "imputation_rmse": _mean(r["imputation_rmse"] for r in reps),
        "oracle_gap": _mean(r["oracle_gap"] for r in reps),
        "convex_fallbacks": int(sum(r["convex_fallback"] for r in reps)),
    }


def _task(args):
    return _replicate(*args)


def run_sweep(config: ScenarioConfig, grid=None, replicates: int = 1, workers: int = 1) -> SweepReport:
    """Run every (grid value, replicate) pair and average per grid point.

    ``workers > 1`` fans the cells out to a process pool; results are merged
    in grid order, so the report does not depend on scheduling.
    """
    params = config.resolved_params()
    grid = _check_grid(config.kind, DEFAULT_GRIDS[config.kind] if grid is None else grid)
    if int(replicates) < 1:
        raise BadParams("replicates must be at least 1")
    replicates = int(replicates)
    tasks = [(config.kind, config.seed, params, g, r) for g in grid for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_task(t) for t in tasks]
    per_point = tuple(
        _aggregate(results[k * replicates : (k + 1) * replicates]) for k in range(len(grid))
    )
    return SweepReport(config.kind, config.seed, params, grid, replicates, per_point)
