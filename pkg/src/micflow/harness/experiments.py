"""Bias/variance, equitability and power experiments.

Every cell (function x noise level) draws its replicates from
``default_rng([seed, crc32(function id), level index, replicate, stream])``,
so a report is a pure function of its config and is unaffected by threading
or by which other cells are present.
"""
from __future__ import annotations

import dataclasses
import math
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..core import Sample
from ..equichar import EstimatorConfig, PreparedSample, mic_e, tic_e
from ..functions import FunctionDef, get_function, gp_function
from ..parallel import pmap
from ..population import DiscretizationConfig, FunctionMixture, mic_star
from .baselines import distance_correlation, pearson
from .generators import (NOISE_MODELS, X_DESIGNS, RelationshipSpec, generate_sample,
                         population_r2, sigma_for_r2)

STATISTICS = ("mic_e", "tic_e", "pearson", "dcor")
FULL_SCALE_REPLICATES = {"bias_variance": 500, "equitability": 500, "power": 1000}
BAND = (5.0, 95.0)
LEVELS = 200

# a statistic is either a registered name or a callable (sample, spec) -> float
Statistic = str | Callable[[Sample, RelationshipSpec], float]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# --------------------------------------------------------------------------
# configuration


def _estimator(raw) -> EstimatorConfig:
    if isinstance(raw, EstimatorConfig):
        return raw
    if not isinstance(raw, Mapping):
        raise ConfigError(f"estimator must be a mapping with alpha and c, got {raw!r}")
    unknown = set(raw) - {"alpha", "c"}
    if unknown:
        raise ConfigError(f"unknown estimator key(s): {', '.join(sorted(unknown))}")
    try:
        return EstimatorConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class _Common:
    functions: tuple[str, ...] = ()
    gp_bandwidths: tuple[float, ...] = ()
    gp_draws: int = 1
    gp_resolution: int = 1024
    r2_grid: tuple[float, ...] = ()
    sigmas: tuple[float, ...] = ()
    n: int = 500
    replicates: int = 100
    paper_scale: bool = False
    seed: int = 0

    KIND = ""

    def __post_init__(self):
        for name in ("functions", "gp_bandwidths", "r2_grid", "sigmas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.functions and not self.gp_bandwidths:
            raise ConfigError("function list is empty")
        unknown = [f for f in self.functions if f not in _registry_ids()]
        if unknown:
            raise ConfigError(f"unknown function(s): {', '.join(unknown)}")
        if bool(self.r2_grid) == bool(self.sigmas):
            raise ConfigError("give exactly one of r2_grid or sigmas")
        if any(not 0 < r <= 1 for r in self.r2_grid):
            raise ConfigError("r2_grid values must lie in (0, 1]")
        if any(not s >= 0 for s in self.sigmas):
            raise ConfigError("sigmas must be >= 0")
        if any(not b > 0 for b in self.gp_bandwidths):
            raise ConfigError("gp bandwidths must be positive")
        if self.gp_draws < 1:
            raise ConfigError("gp_draws must be >= 1")
        if self.n < 4:
            raise ConfigError("n must be >= 4")
        if self.replicates < 2:
            raise ConfigError("replicates must be >= 2")
        if getattr(self, "noise", "XY") not in NOISE_MODELS:
            raise ConfigError(f"noise must be one of {NOISE_MODELS}")
        if getattr(self, "x_design", "uniform") not in X_DESIGNS:
            raise ConfigError(f"x_design must be one of {X_DESIGNS}")

    @property
    def total_replicates(self) -> int:
        return FULL_SCALE_REPLICATES[self.KIND] if self.paper_scale else self.replicates

    @property
    def levels(self) -> tuple[float, ...]:
        return self.r2_grid or self.sigmas

    @property
    def level_name(self) -> str:
        return "r2_target" if self.r2_grid else "sigma"

    def function_defs(self) -> list[FunctionDef]:
        out = [get_function(f) for f in self.functions]
        for bw in self.gp_bandwidths:
            for d in range(self.gp_draws):
                out.append(gp_function(bw, self.gp_resolution, seed=d))
        return out

    def sigma(self, f: FunctionDef, level_index: int, x_design: str) -> float:
        if self.r2_grid:
            return sigma_for_r2(f, self.r2_grid[level_index], x_design)
        return float(self.sigmas[level_index])

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for fld in dataclasses.fields(self):
            v = getattr(self, fld.name)
            if isinstance(v, EstimatorConfig):
                v = dataclasses.asdict(v)
            elif isinstance(v, tuple):
                v = [dataclasses.asdict(e) if isinstance(e, EstimatorConfig) else e for e in v]
            out[fld.name] = v
        out["kind"] = self.KIND
        out["total_replicates"] = self.total_replicates
        return out

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]):
        """Build from a parsed config file; unknown keys are errors."""
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        kwargs = dict(raw)
        for key in ("estimator",):
            if key in kwargs:
                kwargs[key] = _estimator(kwargs[key])
        if "estimators" in kwargs:
            kwargs["estimators"] = tuple(_estimator(e) for e in kwargs["estimators"])
        for key in ("functions", "statistics"):
            if isinstance(kwargs.get(key), str):
                raise ConfigError(f"{key} must be a list")
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _registry_ids() -> set[str]:
    from ..functions import registry

    return set(registry())


def _check_statistics(stats: Sequence) -> None:
    if not stats:
        raise ConfigError("statistics list is empty")
    bad = [s for s in stats if isinstance(s, str) and s not in STATISTICS]
    if bad:
        raise ConfigError(f"unknown statistic(s): {', '.join(bad)}; known: {', '.join(STATISTICS)}")


@dataclass(frozen=True)
class BiasVarianceConfig(_Common):
    estimators: tuple[EstimatorConfig, ...] = (
        EstimatorConfig(0.4, 5.0), EstimatorConfig(0.6, 5.0), EstimatorConfig(0.8, 5.0))
    noise: str = "XY"
    x_design: str = "equal_arc"
    m: int = 1024
    k_max: int = 32
    master: int = 256
    n_centers: int = 1024

    KIND = "bias_variance"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "estimators", tuple(_estimator(e) for e in self.estimators))
        if not self.estimators:
            raise ConfigError("estimator list is empty")
        try:
            DiscretizationConfig(self.m, self.k_max, self.k_max, self.master)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class EquitabilityConfig(_Common):
    statistics: tuple[Statistic, ...] = ("mic_e", "pearson", "dcor")
    estimator: EstimatorConfig = EstimatorConfig()
    noise: str = "XY"
    x_design: str = "equal_arc"
    levels_count: int = LEVELS

    KIND = "equitability"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "statistics", tuple(self.statistics))
        object.__setattr__(self, "estimator", _estimator(self.estimator))
        _check_statistics(self.statistics)
        if len(self.r2_grid) < 2:
            raise ConfigError("equitability needs an r2_grid with >= 2 values")


@dataclass(frozen=True)
class PowerConfig(_Common):
    statistics: tuple[Statistic, ...] = STATISTICS
    estimator: EstimatorConfig = EstimatorConfig()
    level: float = 0.05
    noise: str = "Y"
    x_design: str = "uniform"

    KIND = "power"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "statistics", tuple(self.statistics))
        object.__setattr__(self, "estimator", _estimator(self.estimator))
        _check_statistics(self.statistics)
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")


# --------------------------------------------------------------------------
# shared machinery


@dataclass
class ExperimentReport:
    """Per-cell rows, aggregate rows and the resolved config they came from."""

    kind: str
    rows: list[dict[str, Any]]
    summary: list[dict[str, Any]]
    config: dict[str, Any]
    bands: dict = field(default_factory=dict, repr=False)


def stat_name(s: Statistic) -> str:
    return s if isinstance(s, str) else getattr(s, "__name__", "custom")


def evaluate(sample: Sample, spec: RelationshipSpec, statistics: Sequence[Statistic],
             est: EstimatorConfig) -> list[float]:
    """All requested statistics on one sample (one triangle shared by MICe/TICe)."""
    tri = None
    out = []
    for s in statistics:
        if callable(s):
            out.append(float(s(sample, spec)))
        elif s in ("mic_e", "tic_e"):
            if tri is None:
                tri = PreparedSample(sample).triangle(est)
            out.append(mic_e(tri) if s == "mic_e" else tic_e(tri))
        elif s == "pearson":
            out.append(pearson(sample) ** 2)
        elif s == "dcor":
            out.append(distance_correlation(sample))
        else:
            raise ConfigError(f"unknown statistic {s!r}")
    return out


def _cell_key(seed: int, f: FunctionDef, level_index: int) -> list[int]:
    return [int(seed), zlib.crc32(f.id.encode()), int(level_index)]


def _cells(cfg: _Common, x_design: str, noise: str):
    for f in cfg.function_defs():
        for li, level in enumerate(cfg.levels):
            sigma = cfg.sigma(f, li, x_design)
            spec = RelationshipSpec(f, cfg.n, sigma, noise, x_design)
            yield f, li, level, spec


# --------------------------------------------------------------------------
# bias / variance


def bias_variance_experiment(cfg: BiasVarianceConfig, threads: int | None = None) -> ExperimentReport:
    """Bias, variance and MSE of MICe against the population MIC* per cell."""
    reps = cfg.total_replicates
    disc = DiscretizationConfig(cfg.m, cfg.k_max, cfg.k_max, cfg.master)
    rows = []
    for f, li, level, spec in _cells(cfg, cfg.x_design, cfg.noise):
        density = FunctionMixture(f, cfg.n_centers, spec.sigma, cfg.noise, cfg.x_design)
        truth = mic_star(density, disc)
        key = _cell_key(cfg.seed, f, li)

        def one(r: int) -> list[float]:
            prepared = PreparedSample(generate_sample(spec, [*key, r, 0]))
            return [mic_e(prepared.triangle(e)) for e in cfg.estimators]

        vals = np.asarray(pmap(one, range(reps), threads))
        for ei, est in enumerate(cfg.estimators):
            v = vals[:, ei]
            mean = float(v.mean())
            var = float(v.var(ddof=1))
            rows.append({
                "function": f.id, cfg.level_name: level, "sigma": spec.sigma,
                "r2": population_r2(f, spec.sigma, cfg.x_design), "mic_star": truth,
                "alpha": est.alpha, "c": est.c, "n": cfg.n, "replicates": reps,
                "mean": mean, "bias": mean - truth, "variance": var,
                "mse": float(np.mean((v - truth) ** 2)),
            })
    summary = _aggregate_bias(rows, cfg)
    return ExperimentReport(cfg.KIND, rows, summary, cfg.to_dict())


def _aggregate_bias(rows, cfg: BiasVarianceConfig) -> list[dict[str, Any]]:
    out = []
    for est in cfg.estimators:
        for level in cfg.levels:
            cell = [r for r in rows if r["alpha"] == est.alpha and r["c"] == est.c
                    and r[cfg.level_name] == level]
            bias = np.array([r["bias"] for r in cell])
            var = np.array([r["variance"] for r in cell])
            mse = np.array([r["mse"] for r in cell])
            for agg in ("average", "median", "worst"):
                if agg == "average":
                    b, v, m = bias.mean(), var.mean(), mse.mean()
                elif agg == "median":
                    b, v, m = np.median(bias), np.median(var), np.median(mse)
                else:
                    b, v, m = bias[np.argmax(np.abs(bias))], var.max(), mse.max()
                out.append({"alpha": est.alpha, "c": est.c, cfg.level_name: level,
                            "aggregate": agg, "bias": float(b), "variance": float(v),
                            "mse": float(m), "functions": len(cell)})
    return out


# --------------------------------------------------------------------------
# equitability


def _band_span(r2: np.ndarray, lo: np.ndarray, hi: np.ndarray,
               values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest R^2 whose band [lo, hi] contains each value.

    Bands are linear between grid points; NaN where no point qualifies.
    """
    rmin = np.full(values.size, np.inf)
    rmax = np.full(values.size, -np.inf)
    v = values
    for a in range(r2.size - 1):
        t0 = np.zeros(v.size)
        t1 = np.ones(v.size)
        for g0, g1, below in ((lo[a], lo[a + 1], True), (hi[a], hi[a + 1], False)):
            d = g1 - g0
            # need g(t) <= v for the lower band, g(t) >= v for the upper one
            if d == 0:
                ok = (g0 <= v) if below else (g0 >= v)
                t1 = np.where(ok, t1, -1.0)
                continue
            root = (v - g0) / d
            if (d > 0) == below:
                t1 = np.minimum(t1, root)
            else:
                t0 = np.maximum(t0, root)
        hit = t0 <= t1
        ra = r2[a] + t0 * (r2[a + 1] - r2[a])
        rb = r2[a] + t1 * (r2[a + 1] - r2[a])
        rmin = np.where(hit, np.minimum(rmin, np.minimum(ra, rb)), rmin)
        rmax = np.where(hit, np.maximum(rmax, np.maximum(ra, rb)), rmax)
    empty = ~np.isfinite(rmin)
    rmin[empty] = np.nan
    rmax[empty] = np.nan
    return rmin, rmax


def worst_interval(bands: Mapping[str, tuple[np.ndarray, np.ndarray, np.ndarray]],
                   levels: int = LEVELS) -> dict[str, float]:
    """Widest range of R^2 sharing one statistic value, over all relationships.

    ``bands`` maps a relationship id to ``(r2, lower, upper)`` percentile
    curves.  Statistic values are swept on ``levels`` points spanning the
    band envelopes.
    """
    lows = np.concatenate([b[1] for b in bands.values()])
    highs = np.concatenate([b[2] for b in bands.values()])
    values = np.linspace(np.nanmin(lows), np.nanmax(highs), levels)
    rmin = np.full(levels, np.inf)
    rmax = np.full(levels, -np.inf)
    for r2, lo, hi in bands.values():
        order = np.argsort(r2)
        a, b = _band_span(np.asarray(r2)[order], np.asarray(lo)[order], np.asarray(hi)[order], values)
        rmin = np.fmin(rmin, a)
        rmax = np.fmax(rmax, b)
    width = np.where(np.isfinite(rmin) & np.isfinite(rmax), rmax - rmin, np.nan)
    if np.all(np.isnan(width)):
        return {"width": math.nan, "value": math.nan, "r2_low": math.nan, "r2_high": math.nan}
    i = int(np.nanargmax(width))
    return {"width": float(width[i]), "value": float(values[i]),
            "r2_low": float(rmin[i]), "r2_high": float(rmax[i])}


def equitability_experiment(cfg: EquitabilityConfig, threads: int | None = None) -> ExperimentReport:
    """Percentile bands of each statistic against R^2 and the worst interval."""
    reps = cfg.total_replicates
    names = [stat_name(s) for s in cfg.statistics]
    rows = []
    curves: dict[str, dict[str, list]] = {n: {} for n in names}
    for f, li, level, spec in _cells(cfg, cfg.x_design, cfg.noise):
        key = _cell_key(cfg.seed, f, li)

        def one(r: int) -> list[float]:
            return evaluate(generate_sample(spec, [*key, r, 0]), spec, cfg.statistics, cfg.estimator)

        vals = np.asarray(pmap(one, range(reps), threads))
        for si, name in enumerate(names):
            v = vals[:, si]
            lo, hi = np.percentile(v, BAND)
            rows.append({"statistic": name, "function": f.id, cfg.level_name: level,
                         "sigma": spec.sigma, "r2": level, "p5": float(lo), "p95": float(hi),
                         "mean": float(v.mean()), "replicates": reps})
            curves[name].setdefault(f.id, []).append((level, lo, hi))
    bands = {
        name: {fid: tuple(np.asarray(c, dtype=float).T) for fid, c in per.items()}
        for name, per in curves.items()
    }
    summary = []
    for name in names:
        w = worst_interval(bands[name], cfg.levels_count)
        summary.append({"statistic": name, "worst_width": w["width"], "at_value": w["value"],
                        "r2_low": w["r2_low"], "r2_high": w["r2_high"],
                        "relationships": len(bands[name])})
    return ExperimentReport(cfg.KIND, rows, summary, cfg.to_dict(), bands)


# --------------------------------------------------------------------------
# power


def power_experiment(cfg: PowerConfig, threads: int | None = None) -> ExperimentReport:
    """Power of right-tailed tests whose critical values come from simulated nulls.

    Replicate ``r`` of a cell draws two independent alternative samples; the
    first is the alternative, and pairing its x with the second's y gives a
    null sample with the same marginals.
    """
    reps = cfg.total_replicates
    names = [stat_name(s) for s in cfg.statistics]
    rows = []
    for f, li, level, spec in _cells(cfg, cfg.x_design, cfg.noise):
        key = _cell_key(cfg.seed, f, li)

        def one(r: int) -> tuple[list[float], list[float]]:
            a = generate_sample(spec, [*key, r, 0])
            b = generate_sample(spec, [*key, r, 1])
            null = Sample(a.x, b.y, latent_x=a.latent_x)
            return (evaluate(a, spec, cfg.statistics, cfg.estimator),
                    evaluate(null, spec, cfg.statistics, cfg.estimator))

        res = pmap(one, range(reps), threads)
        alt = np.asarray([r[0] for r in res])
        null = np.asarray([r[1] for r in res])
        for si, name in enumerate(names):
            crit = float(np.quantile(null[:, si], 1.0 - cfg.level, method="higher"))
            rows.append({"statistic": name, "function": f.id, cfg.level_name: level,
                         "sigma": spec.sigma, "r2": population_r2(f, spec.sigma, cfg.x_design),
                         "power": float(np.mean(alt[:, si] > crit)), "critical_value": crit,
                         "alt_mean": float(alt[:, si].mean()), "null_mean": float(null[:, si].mean()),
                         "level": cfg.level, "n": cfg.n, "replicates": reps})
    summary = []
    for name in names:
        sub = [r for r in rows if r["statistic"] == name]
        summary.append({"statistic": name, "mean_power": float(np.mean([r["power"] for r in sub])),
                        "cells": len(sub)})
    return ExperimentReport(cfg.KIND, rows, summary, cfg.to_dict())
