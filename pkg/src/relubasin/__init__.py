"""Basin structure of ReLU network loss landscapes.

Subpackages and modules:

* ``nets``: datasets, parameters, losses, forward passes
* ``init``: spherically symmetric initialization
* ``basins``: sign patterns, the basin-value solver, exact oracles, lemma checks
* ``paths``: monotone rescaled paths and the condition-2 probability
* ``datasets``: the special constructions with validated constants
* ``montecarlo``: bound experiments and proof certificates
* ``io`` and ``cli``: serialization and the command line
"""

from .nets import (CrossEntropySoftmax, Dataset, DeepParams, SquaredLoss, TwoLayerParams,
                   get_loss, objective, objective_params, prediction_matrix)
from .init import InitDistribution, sample_deep, sample_two_layer
from .basins import (EmptyBasin, SignPattern, extract_sign_pattern, grid_basin_oracle,
                     singleton_basin_oracle, solve_basin_value)
from .paths import PathSpec, build_monotone_path
from .montecarlo import run_bound_experiment

__version__ = "0.1.0"

__all__ = [
    "CrossEntropySoftmax", "Dataset", "DeepParams", "SquaredLoss", "TwoLayerParams",
    "get_loss", "objective", "objective_params", "prediction_matrix",
    "InitDistribution", "sample_deep", "sample_two_layer",
    "EmptyBasin", "SignPattern", "extract_sign_pattern", "grid_basin_oracle",
    "singleton_basin_oracle", "solve_basin_value",
    "PathSpec", "build_monotone_path", "run_bound_experiment",
]
