from .generators import (
    AIDC_DEFAULTS,
    INTERACTION_DEFAULTS,
    MIX_DEFAULTS,
    PRESETS,
    apply_sparsity_mask,
    gen_aidc_opex,
    gen_dominance_scenario,
    gen_interaction,
    gen_minimal_simpson,
    gen_mix_extremity,
    preset_params,
)
from .rng import rng_for, sub_seed
from .sweep import DEFAULT_GRIDS, SPARSITY_DEFAULTS, SWEEP_KINDS, ScenarioConfig, SweepReport, run_sweep

__all__ = [
    "AIDC_DEFAULTS",
    "DEFAULT_GRIDS",
    "INTERACTION_DEFAULTS",
    "MIX_DEFAULTS",
    "PRESETS",
    "SPARSITY_DEFAULTS",
    "SWEEP_KINDS",
    "ScenarioConfig",
    "SweepReport",
    "apply_sparsity_mask",
    "gen_aidc_opex",
    "gen_dominance_scenario",
    "gen_interaction",
    "gen_minimal_simpson",
    "gen_mix_extremity",
    "preset_params",
    "rng_for",
    "run_sweep",
    "sub_seed",
]
