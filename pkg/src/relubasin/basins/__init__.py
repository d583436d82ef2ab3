"""Basin partition machinery for two-layer ReLU networks."""

from .lemmas import (
    KeyLemmaViolation,
    basin_interpolation,
    basin_value,
    key_lemma_check,
    second_layer_rescaling_path,
)
from .oracles import (
    grid_basin_oracle,
    singleton_basin_oracle,
    singleton_groups,
    singleton_unconstrained_value,
)
from .patterns import (
    BasinConstraints,
    SignPattern,
    basin_constraints,
    extract_sign_pattern,
    is_singleton_dataset,
    params_from_z,
    pattern_hash,
    z_feasibility_residual,
    z_from_params,
    z_objective,
)
from .solver import BasinSolveResult, EmptyBasin, empty_basin_certificate, solve_basin_value

__all__ = [name for name in dir() if not name.startswith("_")]
