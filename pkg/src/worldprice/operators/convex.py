"""Common campus weights: the closest point to a baseline weight vector that
lies on the probability simplex and reproduces the realized cost.

    min ||w - w0||^2   s.t.  w >= 0,  sum(w) = 1,  exposure . w = C
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    BadBaseline,
    DegenerateExposure,
    IncompletePanel,
    InfeasibleCost,
    SolverError,
    ToleranceUnreachable,
)
from ..panel import PricePanel, aggregates, is_complete
from .base import OperatorTag, WorldPriceVector
from .fixed_effects import FEFit, fit_two_way_fe

EXACT_TOL = 1e-9
_NEG_TOL = 1e-13
_KKT_TOL = 1e-9


@dataclass(frozen=True)
class FeasibilityStatus:
    status: str  # "Feasible", "InfeasibleLow" or "InfeasibleHigh"
    gap: float
    low: float
    high: float

    @property
    def feasible(self) -> bool:
        return self.status == "Feasible"


@dataclass(frozen=True)
class Feasibility:
    kind: str  # "FeasibleExact", "SlackFallback" or "BoundaryProjected"
    rho_penalty: float | None = None
    epsilon_tol: float | None = None
    c_clipped: float | None = None

    def as_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "SlackFallback":
            out.update(rho_penalty=self.rho_penalty, epsilon_tol=self.epsilon_tol)
        elif self.kind == "BoundaryProjected":
            out["c_clipped"] = self.c_clipped
        return out


@dataclass(frozen=True, eq=False)
class ConvexSolution:
    weights: np.ndarray
    baseline: np.ndarray
    active_set: tuple[int, ...]
    cost_slack: float
    feasibility: Feasibility
    iterations: int
    cost_target: float
    multipliers: tuple[float, float] = field(default=(math.nan, math.nan))

    def summary(self, campus_ids=None) -> dict:
        ids = list(campus_ids) if campus_ids is not None else list(range(len(self.weights)))
        return {
            "weights": {str(c): float(w) for c, w in zip(ids, self.weights)},
            "baseline": {str(c): float(w) for c, w in zip(ids, self.baseline)},
            "active_set": [str(ids[j]) for j in self.active_set],
            "cost_slack": float(self.cost_slack),
            "feasibility": self.feasibility.as_dict(),
            "iterations": int(self.iterations),
        }


def _hull_tol(exposure: np.ndarray) -> float:
    return 1e-12 * max(1.0, float(np.max(np.abs(exposure))))


def feasibility_check(exposure, C: float) -> FeasibilityStatus:
    """Whether some simplex weight vector attains cost ``C``."""
    s = np.asarray(exposure, dtype=float)
    lo, hi = float(s.min()), float(s.max())
    tol = _hull_tol(s)
    if C < lo - tol:
        return FeasibilityStatus("InfeasibleLow", lo - C, lo, hi)
    if C > hi + tol:
        return FeasibilityStatus("InfeasibleHigh", C - hi, lo, hi)
    return FeasibilityStatus("Feasible", 0.0, lo, hi)


def _check_baseline(baseline, n: int) -> np.ndarray:
    w0 = np.asarray(baseline, dtype=float)
    if w0.shape != (n,):
        raise BadBaseline(f"baseline has {w0.size} entries, exposure has {n}")
    if not np.isfinite(w0).all():
        raise BadBaseline("baseline must be finite")
    if (w0 < -1e-12).any() or abs(w0.sum() - 1.0) > 1e-9:
        raise BadBaseline("baseline must be a weight vector (nonnegative, summing to 1)")
    return w0


def _project(w0: np.ndarray, s: np.ndarray, C: float) -> tuple[np.ndarray, float, float]:
    """Closed-form projection of w0 onto {sum(w) = 1, s.w = C}.

    Returns the point and multipliers (l1, l2) with w = w0 - l1 - l2 * s.
    Exposures are centred and scaled first so the 2x2 Gram matrix is diagonal.
    """
    n = w0.size
    m = float(s.mean())
    d = float(np.max(np.abs(s - m)))
    if d <= 1e-12 * max(1.0, float(np.max(np.abs(s)))):
        # Exposure is constant: the cost row is either redundant or unsatisfiable.
        if abs(C - m) > _hull_tol(s):
            raise DegenerateExposure(
                f"exposure is constant ({m!r}) and cannot reach cost {C!r}"
            )
        l1 = (w0.sum() - 1.0) / n
        return w0 - l1, float(l1), 0.0
    z = (s - m) / d
    c = (C - m) / d
    # Gram matrix [[n, sz], [sz, zz]]; sz is ~0 after centring, so this is
    # well conditioned unless z is (numerically) constant.
    sz, zz = float(z.sum()), float(z @ z)
    det = n * zz - sz * sz
    if det <= 1e-12 * n * zz:
        raise DegenerateExposure("exposure is nearly collinear with the ones vector")
    r0, r1 = float(w0.sum()) - 1.0, float(z @ w0) - c
    l1z = (zz * r0 - sz * r1) / det
    l2z = (n * r1 - sz * r0) / det
    w = w0 - l1z - l2z * z
    return w, l1z - l2z * m / d, l2z / d


def affine_projection(baseline, exposure, C: float) -> np.ndarray:
    """Euclidean projection of ``baseline`` onto the two equality constraints
    (nonnegativity ignored, so entries may be negative)."""
    w0 = np.asarray(baseline, dtype=float)
    s = np.asarray(exposure, dtype=float)
    if w0.shape != s.shape or not np.isfinite(w0).all():
        raise BadBaseline("baseline must be finite and match the exposure length")
    return _project(w0, s, float(C))[0]


def _active_set_loop(w0, s, C, free):
    """Drop negative entries and re-project until the free block is nonnegative."""
    J = w0.size
    free = list(free)
    iterations = 0
    while True:
        iterations += 1
        try:
            wf, l1, l2 = _project(w0[free], s[free], C)
        except DegenerateExposure as exc:
            raise SolverError(f"active-set loop reached an infeasible free set: {exc}") from exc
        neg = wf < -_NEG_TOL
        if not neg.any():
            break
        free = [j for j, bad in zip(free, neg) if not bad]
        if not free:
            raise SolverError("active-set loop removed every campus")
    w = np.zeros(J)
    w[free] = np.maximum(wf, 0.0)
    return w, free, iterations, (l1, l2)


def active_set_project(baseline, exposure, C: float) -> ConvexSolution:
    """Nonnegative common weights closest to ``baseline`` that reproduce cost C.

    Repeats the closed-form projection on the free campuses, pinning campuses
    with negative weight to zero; at most J passes.
    """
    s = np.asarray(exposure, dtype=float)
    J = s.size
    w0 = _check_baseline(baseline, J)
    C = float(C)
    feas = feasibility_check(s, C)
    if not feas.feasible:
        raise InfeasibleCost(C, feas.low, feas.high)

    tol = _hull_tol(s)
    on_face = None
    if C >= feas.high - tol:
        on_face = np.flatnonzero(s >= feas.high - tol)
    elif C <= feas.low + tol:
        on_face = np.flatnonzero(s <= feas.low + tol)

    if on_face is not None and on_face.size < J:
        # C sits on the hull boundary: only campuses at that exposure may carry
        # weight, and there the cost row is redundant.
        face_s = np.full(on_face.size, C)
        w_face, free_face, iterations, mult = _active_set_loop(w0[on_face], face_s, C, range(on_face.size))
        w = np.zeros(J)
        w[on_face] = w_face
        free = [int(on_face[k]) for k in free_face]
    else:
        w, free, iterations, mult = _active_set_loop(w0, s, C, range(J))
        l1, l2 = mult
        fixed = np.setdiff1d(np.arange(J), free)
        mu = l1 + l2 * s[fixed] - w0[fixed]
        if (mu < -_KKT_TOL).any():
            raise SolverError("active-set loop ended at a point violating the KKT conditions")

    active = tuple(int(j) for j in range(J) if j not in set(free))
    slack = float(s @ w - C)
    if abs(slack) > EXACT_TOL * max(1.0, abs(C)):
        raise SolverError(f"cost constraint residual {slack!r} exceeds tolerance")
    return ConvexSolution(
        weights=w,
        baseline=w0.copy(),
        active_set=active,
        cost_slack=slack,
        feasibility=Feasibility("FeasibleExact"),
        iterations=iterations,
        cost_target=C,
        multipliers=(float(mult[0]), float(mult[1])),
    )


def _penalized(w0, s, C, rho):
    """Minimizer of 0.5||w - w0||^2 + 0.5 rho (s.w - C)^2 over the simplex.

    The minimizer is the hard projection at the level c* it attains, where the
    cost multiplier satisfies l2(c*) = rho (c* - C); l2 is nonincreasing in c,
    so c* is found by bisection on the open exposure interval.
    """
    lo, hi = float(s.min()), float(s.max())
    J = s.size
    best = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        # mid is strictly inside the hull, so the plain loop applies.
        w, free, iters, (l1, l2) = _active_set_loop(w0, s, mid, range(J))
        best = (w, free, iters, (l1, l2), mid)
        if l2 - rho * (mid - C) > 0:
            lo = mid
        else:
            hi = mid
    if best is None:
        return active_set_project(w0, s, 0.5 * (lo + hi))
    w, free, iters, mult, c = best
    active = tuple(j for j in range(J) if j not in set(free))
    return ConvexSolution(w, w0.copy(), active, float(s @ w - c), Feasibility("FeasibleExact"), iters, c, mult)


def slack_penalized_weights(baseline, exposure, C: float, epsilon_tol: float, rho_decades: int = 12) -> ConvexSolution:
    """Soft cost preservation when C may lie outside the exposure interval.

    rho starts at 1/max|exposure|^2 and grows tenfold until the cost slack is
    within ``epsilon_tol`` (or ``rho_decades`` decades are exhausted); the
    crossing decade is then refined by bisection on log rho so the smallest
    adequate penalty is reported.
    """
    if not epsilon_tol > 0:
        raise ValueError("epsilon_tol must be positive")
    s = np.asarray(exposure, dtype=float)
    w0 = _check_baseline(baseline, s.size)
    C = float(C)
    rho_min = 1.0 / max(1e-300, float(np.max(np.abs(s)))) ** 2

    def pack(sol: ConvexSolution, rho: float, iters: int) -> ConvexSolution:
        return ConvexSolution(
            weights=sol.weights,
            baseline=w0.copy(),
            active_set=sol.active_set,
            cost_slack=float(s @ sol.weights - C),
            feasibility=Feasibility("SlackFallback", rho_penalty=rho, epsilon_tol=float(epsilon_tol)),
            iterations=iters,
            cost_target=C,
            multipliers=sol.multipliers,
        )

    base_slack = float(s @ w0 - C)
    if abs(base_slack) <= epsilon_tol:
        active = tuple(int(j) for j in np.flatnonzero(w0 <= 0))
        sol = ConvexSolution(w0.copy(), w0.copy(), active, base_slack, Feasibility("FeasibleExact"), 0, C)
        return pack(sol, rho_min, 0)

    feas = feasibility_check(s, C)
    limiting = 0.0 if feas.feasible else (feas.low - C if feas.status == "InfeasibleLow" else feas.high - C)
    if float(np.ptp(s)) <= 1e-12 * max(1.0, float(np.max(np.abs(s)))):
        # Constant exposure: every weight vector has the same slack.
        sol = ConvexSolution(w0.copy(), w0.copy(), (), base_slack, Feasibility("FeasibleExact"), 0, C)
        raise ToleranceUnreachable(
            f"exposure is constant; slack is fixed at {base_slack!r}", pack(sol, rho_min, 0), base_slack
        )

    prev_rho, prev_sol = None, None
    for k in range(rho_decades + 1):
        rho = rho_min * 10.0**k
        sol = _penalized(w0, s, C, rho)
        if abs(float(s @ sol.weights - C)) <= epsilon_tol:
            if prev_rho is not None:
                a, b = math.log(prev_rho), math.log(rho)
                for _ in range(40):
                    mid = 0.5 * (a + b)
                    trial = _penalized(w0, s, C, math.exp(mid))
                    if abs(float(s @ trial.weights - C)) <= epsilon_tol:
                        b, sol = mid, trial
                    else:
                        a = mid
                rho = math.exp(b)
            return pack(sol, rho, k + 1)
        prev_rho, prev_sol = rho, sol

    result = pack(prev_sol, prev_rho, rho_decades + 1)
    if abs(limiting) > epsilon_tol:
        raise ToleranceUnreachable(
            f"cost lies {abs(limiting)!r} outside the exposure interval; "
            f"slack cannot reach {epsilon_tol!r}",
            result,
            limiting,
        )
    return result


def boundary_projection_weights(baseline, exposure, C: float) -> ConvexSolution:
    """Clip C into the exposure interval and solve the exact problem there."""
    s = np.asarray(exposure, dtype=float)
    C = float(C)
    clipped = float(np.clip(C, s.min(), s.max()))
    sol = active_set_project(baseline, s, clipped)
    return ConvexSolution(
        weights=sol.weights,
        baseline=sol.baseline,
        active_set=sol.active_set,
        cost_slack=float(s @ sol.weights - C),
        feasibility=Feasibility("BoundaryProjected", c_clipped=clipped),
        iterations=sol.iterations,
        cost_target=C,
        multipliers=sol.multipliers,
    )


_TAGS = {
    "FeasibleExact": OperatorTag.CONVEX_WEIGHTS,
    "SlackFallback": OperatorTag.CONVEX_SLACK,
    "BoundaryProjected": OperatorTag.CONVEX_BOUNDARY,
}


def convex_world_prices(solution: ConvexSolution, panel: PricePanel) -> WorldPriceVector:
    if not is_complete(panel):
        raise IncompletePanel("common-weight prices need a complete panel; impute first")
    if solution.weights.size != panel.shape[1]:
        raise ValueError("weights do not match the number of campuses")
    return WorldPriceVector(_TAGS[solution.feasibility.kind], panel.prices @ solution.weights, panel.product_ids)


def completed_panel(panel: PricePanel, fit: FEFit | None = None) -> tuple[PricePanel, FEFit | None]:
    """The panel itself when complete, else its FE-imputed completion.

    Imputed cells keep zero quantity and the accounting target is carried over.
    """
    if is_complete(panel):
        return panel, fit
    if fit is None:
        fit = fit_two_way_fe(panel)
    target = aggregates(panel).cost_target
    full = PricePanel(panel.product_ids, panel.campus_ids, fit.completed_prices, panel.quantities, target)
    return full, fit


FALLBACKS = ("error", "slack", "boundary")


def convex_blend(
    panel: PricePanel,
    baseline=None,
    fallback: str = "error",
    epsilon: float = 1e-6,
    fit: FEFit | None = None,
) -> tuple[WorldPriceVector, ConvexSolution]:
    """Common-weight world prices for ``panel``.

    ``baseline`` defaults to global quantity shares. When C is outside the
    exposure interval, ``fallback`` picks between raising InfeasibleCost, the
    penalized slack relaxation and boundary projection.
    """
    if fallback not in FALLBACKS:
        raise ValueError(f"fallback must be one of {FALLBACKS}")
    full, _ = completed_panel(panel, fit)
    agg = aggregates(full)
    C = agg.cost_target
    w0 = agg.global_quantity_shares if baseline is None else np.asarray(baseline, dtype=float)
    feas = feasibility_check(agg.exposure, C)
    if feas.feasible:
        sol = active_set_project(w0, agg.exposure, C)
    elif fallback == "slack":
        sol = slack_penalized_weights(w0, agg.exposure, C, epsilon)
    elif fallback == "boundary":
        sol = boundary_projection_weights(w0, agg.exposure, C)
    else:
        raise InfeasibleCost(C, feas.low, feas.high)
    return convex_world_prices(sol, full), sol
