"""Noisy functional relationships and their ground-truth strength."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Sample
from ..functions import FunctionDef

NOISE_MODELS = ("XY", "Y")
X_DESIGNS = ("equal_arc", "uniform")


@dataclass(frozen=True, eq=False)
class RelationshipSpec:
    """``(x + e, f(x) + e')`` with optional x noise, for a chosen x design."""

    function: FunctionDef
    n: int
    sigma: float = 0.0
    noise: str = "XY"
    x_design: str = "equal_arc"

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("n must be >= 4")
        if not self.sigma >= 0 or not math.isfinite(self.sigma):
            raise ValueError("sigma must be finite and >= 0")
        if self.noise not in NOISE_MODELS:
            raise ValueError(f"noise must be one of {NOISE_MODELS}")
        if self.x_design not in X_DESIGNS:
            raise ValueError(f"x_design must be one of {X_DESIGNS}")
        res = self.function.resolution
        if res is not None and self.n > res:
            raise ValueError(f"n = {self.n} exceeds the GP grid resolution {res}")

    @property
    def population_r2(self) -> float:
        return population_r2(self.function, self.sigma, self.x_design)


def _rng(seed) -> np.random.Generator:
    key = [int(s) for s in seed] if isinstance(seed, (tuple, list)) else int(seed)
    return np.random.default_rng(key)


def generate_sample(spec: RelationshipSpec, seed) -> Sample:
    """One draw; the pre-noise x values are kept as ``latent_x``.

    ``equal_arc`` puts point ``i`` at arc-length fraction ``(i + 1/2)/n``;
    ``uniform`` draws x from Unif[0, 1].
    """
    rng = _rng(seed)
    n = spec.n
    if spec.x_design == "equal_arc":
        x = spec.function.arc.x_at((np.arange(n) + 0.5) / n)
    else:
        x = rng.random(n)
    fx = spec.function(x)
    if spec.sigma > 0:
        y = fx + rng.normal(0.0, spec.sigma, n)
        x_obs = x + rng.normal(0.0, spec.sigma, n) if spec.noise == "XY" else x
    else:
        y, x_obs = fx, x
    return Sample(x_obs, y, latent_x=x)


def population_r2(function: FunctionDef, sigma: float, x_design: str = "equal_arc") -> float:
    """``Var f(X) / (Var f(X) + sigma^2)``."""
    var = function.design_variance(x_design)
    if var <= 0:
        return math.nan
    return var / (var + sigma * sigma)


def sigma_for_r2(function: FunctionDef, r2: float, x_design: str = "equal_arc") -> float:
    """Noise level giving population R^2 = ``r2``."""
    if not 0 < r2 <= 1:
        raise ValueError("r2 must lie in (0, 1]")
    var = function.design_variance(x_design)
    return math.sqrt(var * (1.0 - r2) / r2)


def r_squared(spec: RelationshipSpec, sample: Sample) -> float:
    """Squared Pearson correlation of ``f(latent x)`` with the observed y; NaN if undefined."""
    if sample.latent_x is None:
        raise ValueError("sample carries no pre-noise x values")
    fx = spec.function(sample.latent_x)
    if np.ptp(fx) == 0 or np.ptp(sample.y) == 0:
        return math.nan
    r = np.corrcoef(fx, sample.y)[0, 1]
    return float(min(r * r, 1.0))
