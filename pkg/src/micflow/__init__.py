"""Equicharacteristic-matrix dependence statistics (MICe, TICe) and tooling."""
from .axis import AxisOptimum, brute_force_axis, optimize_axis
from .core import (
    CountMatrix,
    Grid,
    InfoConfig,
    Partition,
    Sample,
    apply_grid,
    entropy,
    mutual_information,
    normalized_score,
    rank_equipartition,
)
from .equichar import (
    CharTriangle,
    EstimatorConfig,
    PreparedSample,
    admissible_pairs,
    equichar_clump,
    equichar_exact,
    mic_e,
    tic_e,
)
from .functions import FunctionDef, get_function, gp_function, registry
from .inference import PairScanRow, TestResult, bh_adjust, pair_scan, permutation_test
from .population import (
    DiscretizationConfig,
    FunctionMixture,
    GridMass,
    IndependentUniform,
    boundary,
    boundary_entry,
    discretize,
    mic_star,
    population_partial_sum,
)

__version__ = "0.1.0"

__all__ = [
    "AxisOptimum",
    "CharTriangle",
    "CountMatrix",
    "DiscretizationConfig",
    "EstimatorConfig",
    "FunctionDef",
    "FunctionMixture",
    "Grid",
    "GridMass",
    "IndependentUniform",
    "InfoConfig",
    "PairScanRow",
    "Partition",
    "PreparedSample",
    "Sample",
    "TestResult",
    "admissible_pairs",
    "apply_grid",
    "bh_adjust",
    "boundary",
    "boundary_entry",
    "brute_force_axis",
    "discretize",
    "entropy",
    "equichar_clump",
    "equichar_exact",
    "get_function",
    "gp_function",
    "mic_e",
    "mic_star",
    "mutual_information",
    "normalized_score",
    "optimize_axis",
    "pair_scan",
    "permutation_test",
    "population_partial_sum",
    "rank_equipartition",
    "registry",
    "tic_e",
]
