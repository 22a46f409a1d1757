"""Relationship functions on [0, 1]: the shipped registry and Gaussian-process draws."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from typing import Callable

import numpy as np

ARC_GRID = 4096
_JITTERS = (1e-10, 1e-8, 1e-6, 1e-4)


@dataclass(frozen=True, eq=False)
class FunctionDef:
    id: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    description: str = ""
    resolution: int | None = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    @cached_property
    def arc(self) -> "ArcLength":
        xs = np.linspace(0.0, 1.0, ARC_GRID)
        ys = self(xs)
        s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xs), np.diff(ys)))])
        return ArcLength(xs, s)

    def design_variance(self, design: str) -> float:
        """Var f(X) for X uniform ("uniform") or uniform along the graph ("equal_arc")."""
        t = (np.arange(ARC_GRID * 4) + 0.5) / (ARC_GRID * 4)
        x = t if design == "uniform" else self.arc.x_at(t)
        return float(np.var(self(x)))


@dataclass(frozen=True, eq=False)
class ArcLength:
    """Arc-length parametrisation of a graph, sampled on a fixed x-grid."""

    xs: np.ndarray
    s: np.ndarray

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def x_at(self, frac) -> np.ndarray:
        """x-coordinate reached after ``frac`` of the total arc length."""
        return np.interp(np.asarray(frac, dtype=float) * self.s[-1], self.s, self.xs)


def _compile(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    code = compile(expr, f"<function {expr}>", "eval")

    def fn(x):
        return np.broadcast_to(eval(code, {"__builtins__": {}, "np": np}, {"x": x}), np.shape(x)).astype(float)

    return fn


@lru_cache(maxsize=None)
def registry() -> dict[str, FunctionDef]:
    """The shipped default function set, keyed by id."""
    raw = json.loads(resources.files("micflow.data").joinpath("functions.json").read_text())
    return {
        item["id"]: FunctionDef(item["id"], _compile(item["expr"]), item.get("description", ""))
        for item in raw["functions"]
    }


def get_function(name: str) -> FunctionDef:
    try:
        return registry()[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}; known: {', '.join(registry())}") from None


def rbf_kernel(grid: np.ndarray, bandwidth: float) -> np.ndarray:
    d = grid[:, None] - grid[None, :]
    return np.exp(-(d * d) / (2.0 * bandwidth * bandwidth))


def gp_function(bandwidth: float, resolution: int = 1024, seed: int = 0) -> FunctionDef:
    """One draw from a zero-mean RBF Gaussian process, linearly interpolated."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    grid = np.linspace(0.0, 1.0, resolution)
    kern = rbf_kernel(grid, bandwidth)
    chol = None
    for jitter in _JITTERS:
        try:
            chol = np.linalg.cholesky(kern + jitter * np.eye(resolution))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise np.linalg.LinAlgError("GP kernel not positive definite even after jitter")
    z = np.random.default_rng(seed).standard_normal(resolution)
    values = chol @ z

    def fn(x):
        return np.interp(x, grid, values)

    return FunctionDef(f"gp(bw={bandwidth:g},seed={seed})", fn, "Gaussian-process draw", resolution)


def total_variation(f: FunctionDef, points: int = 4096) -> float:
    y = f(np.linspace(0.0, 1.0, points))
    return float(np.abs(np.diff(y)).sum())
