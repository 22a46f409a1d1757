"""Relationship generators, baselines and experiment protocols."""
from .baselines import distance_correlation, linfoot, pearson
from .experiments import (
    STATISTICS,
    BiasVarianceConfig,
    ConfigError,
    EquitabilityConfig,
    ExperimentReport,
    PowerConfig,
    bias_variance_experiment,
    equitability_experiment,
    power_experiment,
    worst_interval,
)
from .generators import RelationshipSpec, generate_sample, population_r2, r_squared, sigma_for_r2

__all__ = [
    "STATISTICS",
    "BiasVarianceConfig",
    "ConfigError",
    "EquitabilityConfig",
    "ExperimentReport",
    "PowerConfig",
    "RelationshipSpec",
    "bias_variance_experiment",
    "distance_correlation",
    "equitability_experiment",
    "generate_sample",
    "linfoot",
    "pearson",
    "population_r2",
    "power_experiment",
    "r_squared",
    "sigma_for_r2",
    "worst_interval",
]
