from .base import OperatorTag, WorldPriceVector, read_world_prices
from .convex import (
    ConvexSolution,
    Feasibility,
    FeasibilityStatus,
    active_set_project,
    affine_projection,
    boundary_projection_weights,
    completed_panel,
    convex_blend,
    convex_world_prices,
    feasibility_check,
    slack_penalized_weights,
)
from .fixed_effects import FEFit, fe_blend, fe_world_prices, fit_two_way_fe
from .naive import naive_blend

__all__ = [
    "ConvexSolution",
    "FEFit",
    "Feasibility",
    "FeasibilityStatus",
    "OperatorTag",
    "WorldPriceVector",
    "active_set_project",
    "affine_projection",
    "boundary_projection_weights",
    "completed_panel",
    "convex_blend",
    "convex_world_prices",
    "fe_blend",
    "fe_world_prices",
    "feasibility_check",
    "fit_two_way_fe",
    "naive_blend",
    "read_world_prices",
    "slack_penalized_weights",
]
