"""Population quantities from analytic joint densities.

A density is reduced to an ``m x m`` mass matrix over the cells of the
marginal-quantile grid (every row and column carries mass ``1/m`` when the
marginals are continuous).  Boundary values of the characteristic matrix are
then one-axis optimisations of that matrix: the optimised axis is searched
over sub-partitions of a ``master`` quantile partition, the other axis stays
at full resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .axis import axis_scores
from .core import CountMatrix
from .equichar import admissible_pairs
from .functions import FunctionDef

TAIL = 8.0
QUANTILE_TOL = 1e-12
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT_2 = 1.0 / math.sqrt(2.0)
_FAR = 9.0
# MI (nats) below this is summation noise from exactly independent cells
_ZERO_MI = 1e-11


# --------------------------------------------------------------------------
# density models


@dataclass(frozen=True, eq=False)
class FunctionMixture:
    """Equal-weight components placed at equal arc-length steps along ``f``.

    Each component covers one arc-length piece of the graph (its bounding box)
    convolved with N(0, sigma^2) noise on both axes (``noise="XY"``) or on y
    only (``noise="Y"``).  With ``x_design="uniform"`` the pieces are equal
    steps in x instead, which models X ~ Unif[0, 1].
    """

    function: FunctionDef
    n_centers: int = 1024
    sigma: float = 0.0
    noise: str = "XY"
    x_design: str = "equal_arc"

    def __post_init__(self):
        if self.noise not in ("XY", "Y"):
            raise ValueError("noise must be 'XY' or 'Y'")
        if self.x_design not in ("equal_arc", "uniform"):
            raise ValueError("x_design must be 'equal_arc' or 'uniform'")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.n_centers < 1:
            raise ValueError("n_centers must be >= 1")

    def boxes(self):
        """Per-component (x0, x1, y0, y1) intervals of the noiseless graph piece."""
        t = np.linspace(0.0, 1.0, self.n_centers + 1)
        if self.x_design == "uniform":
            xe, xm = t, (t[:-1] + t[1:]) / 2
        else:
            arc = self.function.arc
            xe = arc.x_at(t)
            xm = arc.x_at((t[:-1] + t[1:]) / 2)
        ye, ym = self.function(xe), self.function(xm)
        y0 = np.minimum(np.minimum(ye[:-1], ye[1:]), ym)
        y1 = np.maximum(np.maximum(ye[:-1], ye[1:]), ym)
        return xe[:-1], xe[1:], y0, y1


@dataclass(frozen=True, eq=False)
class GridMass:
    """Piecewise-uniform density on the unit square; ``mass[row(y), col(x)]``."""

    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 2 or np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValueError("grid mass must be a finite nonnegative matrix")
        total = mass.sum()
        if not abs(total - 1.0) < 1e-9:
            raise ValueError("grid mass must sum to 1")
        object.__setattr__(self, "mass", mass)


@dataclass(frozen=True)
class IndependentUniform:
    pass


DensityModel = FunctionMixture | GridMass | IndependentUniform


# --------------------------------------------------------------------------
# per-component interval probabilities (box convolved with a Gaussian)


@njit(cache=True, nogil=True)
def _gauss_int(z):
    """Antiderivative of the standard normal CDF."""
    return z * 0.5 * math.erfc(-z * _INV_SQRT_2) + _INV_SQRT_2PI * math.exp(-0.5 * z * z)


@njit(cache=True, nogil=True)
def _component_cdf(t, lo, hi, sigma):
    """P(U + sigma Z <= t) for U ~ Unif[lo, hi]."""
    w = hi - lo
    if sigma == 0.0:
        if w <= 0.0:
            return 1.0 if t >= lo else 0.0
        return min(max((t - lo) / w, 0.0), 1.0)
    if w < 1e-6 * sigma:
        return 0.5 * math.erfc(-(t - 0.5 * (lo + hi)) / sigma * _INV_SQRT_2)
    z1 = (t - lo) / sigma
    z2 = (t - hi) / sigma
    if z1 < -_FAR:
        return 0.0
    if z2 > _FAR:
        return 1.0
    r = sigma / w
    # G(z) = z + G(-z) keeps the linear growth of G out of the differences
    if z2 >= 0.0:
        v = 1.0 + r * (_gauss_int(-z1) - _gauss_int(-z2))
    elif z1 <= 0.0:
        v = r * (_gauss_int(z1) - _gauss_int(z2))
    else:
        v = (t - lo) / w + r * (_gauss_int(-z1) - _gauss_int(z2))
    return min(max(v, 0.0), 1.0)


@njit(cache=True, nogil=True)
def _component_pdf(t, lo, hi, sigma):
    w = hi - lo
    if sigma == 0.0:
        return 1.0 / w if (w > 0.0 and lo <= t <= hi) else 0.0
    if w < 1e-6 * sigma:
        z = (t - 0.5 * (lo + hi)) / sigma
        return _INV_SQRT_2PI * math.exp(-0.5 * z * z) / sigma
    a = 0.5 * math.erfc(-(t - lo) / sigma * _INV_SQRT_2)
    b = 0.5 * math.erfc(-(t - hi) / sigma * _INV_SQRT_2)
    return (a - b) / w


@njit(cache=True, nogil=True)
def _mixture_cdf(ts, lo, hi, sigma):
    out = np.empty(ts.size)
    for i in range(ts.size):
        acc = 0.0
        for c in range(lo.size):
            acc += _component_cdf(ts[i], lo[c], hi[c], sigma)
        out[i] = acc / lo.size
    return out


@njit(cache=True, nogil=True)
def _mixture_pdf(ts, lo, hi, sigma):
    out = np.empty(ts.size)
    for i in range(ts.size):
        acc = 0.0
        for c in range(lo.size):
            acc += _component_pdf(ts[i], lo[c], hi[c], sigma)
        out[i] = acc / lo.size
    return out


@njit(cache=True, nogil=True)
def _interval_probs(edges, lo, hi, sigma):
    """components x cells matrix of interval probabilities."""
    cells = edges.size - 1
    out = np.empty((lo.size, cells))
    for c in range(lo.size):
        prev = 0.0
        for j in range(1, cells + 1):
            cur = 1.0 if j == cells else _component_cdf(edges[j], lo[c], hi[c], sigma)
            out[c, j - 1] = max(cur - prev, 0.0)
            prev = cur
    return out


def _mixture_quantiles(lo, hi, sigma, m):
    """Edges ``e_0 < ... < e_m`` with F(e_j) = j/m for the equal-weight mixture."""
    left = float(lo.min() - TAIL * sigma) - 1e-9
    right = float(hi.max() + TAIL * sigma) + 1e-9
    grid = np.linspace(left, right, 4097)
    fg = _mixture_cdf(grid, lo, hi, sigma)
    fg[0], fg[-1] = 0.0, 1.0
    q = np.arange(1, m) / m
    j = np.clip(np.searchsorted(fg, q, side="left"), 1, grid.size - 1)
    a, b = grid[j - 1].copy(), grid[j].copy()
    fa, fb = fg[j - 1], fg[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(fb > fa, a + (q - fa) / (fb - fa) * (b - a), (a + b) / 2)
    scale = right - left
    # safeguarded Newton: keep a bracket, bisect whenever Newton leaves it
    for _ in range(200):
        active = (b - a) > QUANTILE_TOL * scale
        if not active.any():
            break
        idx = np.flatnonzero(active)
        ti = t[idx]
        fi = _mixture_cdf(ti, lo, hi, sigma) - q[idx]
        done = np.abs(fi) < 1e-15
        lower = fi < 0
        a[idx] = np.where(lower, ti, a[idx])
        b[idx] = np.where(lower, b[idx], ti)
        di = _mixture_pdf(ti, lo, hi, sigma)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = ti - fi / di
        ok = np.isfinite(step) & (step > a[idx]) & (step < b[idx])
        t[idx] = np.where(done, ti, np.where(ok, step, (a[idx] + b[idx]) / 2))
        conv = done | (ok & (np.abs(step - ti) < QUANTILE_TOL * scale))
        a[idx[conv]] = t[idx[conv]]
        b[idx[conv]] = t[idx[conv]]
    return np.concatenate([[left], t, [right]])


def _pw_linear_quantiles(weights: np.ndarray, m: int) -> np.ndarray:
    """Quantile edges of a piecewise-uniform density on [0, 1]."""
    cum = np.concatenate([[0.0], np.cumsum(weights)])
    cum /= cum[-1]
    nodes = np.linspace(0.0, 1.0, weights.size + 1)
    q = np.arange(m + 1) / m
    j = np.clip(np.searchsorted(cum, q, side="left"), 1, weights.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(cum[j] > cum[j - 1], (q - cum[j - 1]) / (cum[j] - cum[j - 1]), 0.0)
    edges = nodes[j - 1] + frac * (nodes[j] - nodes[j - 1])
    edges[0], edges[-1] = 0.0, 1.0
    return edges


def _overlap(src_edges: np.ndarray, dst_edges: np.ndarray) -> np.ndarray:
    """Fraction of each source cell falling into each destination cell."""
    lo = np.maximum(src_edges[:-1, None], dst_edges[None, :-1])
    hi = np.minimum(src_edges[1:, None], dst_edges[None, 1:])
    width = np.diff(src_edges)[:, None]
    return np.clip(hi - lo, 0.0, None) / width


def discretize(density: DensityModel, m: int) -> CountMatrix:
    """Mass of ``density`` in each cell of the m x m marginal-quantile grid."""
    if m < 4:
        raise ValueError("m must be >= 4")
    if isinstance(density, IndependentUniform):
        return CountMatrix(np.full((m, m), 1.0 / (m * m)))
    if isinstance(density, GridMass):
        src = density.mass
        ex = _pw_linear_quantiles(src.sum(axis=0), m)
        ey = _pw_linear_quantiles(src.sum(axis=1), m)
        ox = _overlap(np.linspace(0, 1, src.shape[1] + 1), ex)
        oy = _overlap(np.linspace(0, 1, src.shape[0] + 1), ey)
        return CountMatrix(oy.T @ src @ ox)
    if isinstance(density, FunctionMixture):
        x0, x1, y0, y1 = density.boxes()
        sx = density.sigma if density.noise == "XY" else 0.0
        sy = density.sigma
        ex = _mixture_quantiles(x0, x1, sx, m)
        ey = _mixture_quantiles(y0, y1, sy, m)
        ax = _interval_probs(ex, x0, x1, sx)
        ay = _interval_probs(ey, y0, y1, sy)
        mass = (ay.T @ ax) / density.n_centers
        total = mass.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("density is not normalisable")
        return CountMatrix(mass / total)
    raise TypeError(f"unsupported density model {type(density).__name__}")


# --------------------------------------------------------------------------
# boundary, MIC*, partial sums


@dataclass(frozen=True)
class DiscretizationConfig:
    m: int = 2048
    k_max: int = 32
    l_max: int = 32
    master: int = 256

    def __post_init__(self):
        for name in ("m", "master"):
            v = getattr(self, name)
            if v < 4 or v & (v - 1):
                raise ValueError(f"{name} must be a power of two >= 4")
        if self.master > self.m:
            raise ValueError("master must not exceed m")
        if min(self.k_max, self.l_max) < 2:
            raise ValueError("k_max and l_max must be >= 2")
        if self.m < 4 * max(self.k_max, self.l_max):
            raise ValueError("m must be >= 4 * max(k_max, l_max)")


def _cells(mass) -> np.ndarray:
    return mass.cells if isinstance(mass, CountMatrix) else np.asarray(mass, dtype=float)


def coarsen(cells: np.ndarray, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Sum blocks of consecutive rows/columns (sizes must divide)."""
    r, c = cells.shape
    rows = rows or r
    cols = cols or c
    if r % rows or c % cols:
        raise ValueError("coarsened sizes must divide the matrix shape")
    return cells.reshape(rows, r // rows, cols, c // cols).sum(axis=(1, 3))


def boundary_values(mass, k_max: int, master: int | None = None) -> np.ndarray:
    """``M_{k,up}`` for k = 0..k_max (entries 0, 1 are zero).

    Rows are optimised over sub-partitions of a ``master``-row coarsening;
    columns stay at full resolution.
    """
    cells = _cells(mass)
    m = cells.shape[0]
    master = min(master or m, m)
    counts = np.ascontiguousarray(coarsen(cells, rows=master))
    mi = axis_scores(counts, k_max)
    mi[mi < _ZERO_MI] = 0.0
    out = np.zeros(k_max + 1)
    for k in range(2, k_max + 1):
        out[k] = min(mi[k] / math.log(k), 1.0)
    return out


def boundary_entry(mass, k: int, master: int | None = None) -> float:
    """Approximate ``M_{k,up}``: best k-row partition against the full-resolution columns."""
    cells = _cells(mass)
    if not 2 <= k <= cells.shape[0] // 4:
        raise ValueError("k must satisfy 2 <= k <= m/4")
    return float(boundary_values(cells, k, master)[k])


@dataclass(frozen=True)
class Boundary:
    rows: np.ndarray = field(repr=False)  # M_{k,up}
    cols: np.ndarray = field(repr=False)  # M_{up,l}
    m: int = 0
    k_max: int = 0
    l_max: int = 0

    @property
    def value(self) -> float:
        return float(max(self.rows.max(), self.cols.max()))


def boundary(density: DensityModel, cfg: DiscretizationConfig = DiscretizationConfig(),
             mass: CountMatrix | None = None) -> Boundary:
    cells = _cells(mass if mass is not None else discretize(density, cfg.m))
    rows = boundary_values(cells, cfg.k_max, cfg.master)
    cols = boundary_values(np.ascontiguousarray(cells.T), cfg.l_max, cfg.master)
    return Boundary(rows, cols, cells.shape[0], cfg.k_max, cfg.l_max)


def mic_star(density: DensityModel, cfg: DiscretizationConfig = DiscretizationConfig()) -> float:
    """Population MIC: the largest computed boundary value."""
    return boundary(density, cfg).value


def _equi_weights(m: int, bins: int) -> np.ndarray:
    """m x bins overlap of m equal fine cells with ``bins`` equal-mass groups."""
    return _overlap(np.linspace(0, 1, m + 1), np.linspace(0, 1, bins + 1))


def population_partial_sum(density: DensityModel, B: int,
                           cfg: DiscretizationConfig = DiscretizationConfig(),
                           mass: CountMatrix | None = None) -> float:
    """Sum of the population equicharacteristic entries with ``kl <= B``."""
    if B > (cfg.m // 4) ** 2:
        raise ValueError("B must be <= (m/4)^2")
    cells = _cells(mass if mass is not None else discretize(density, cfg.m))
    total = 0.0
    for transpose in (False, True):
        mat = cells.T if transpose else cells
        rows = coarsen(mat, rows=cfg.master)
        for e in range(2, B // 2 + 1):
            kmax = min(e - 1, B // e) if transpose else min(e, B // e)
            if kmax < 2:
                continue
            counts = np.ascontiguousarray(rows @ _equi_weights(mat.shape[1], e))
            mi = axis_scores(counts, kmax)
            mi[mi < _ZERO_MI] = 0.0
            total += sum(min(mi[k] / math.log(k), 1.0) for k in range(2, kmax + 1))
    return float(total)


def population_triangle(density: DensityModel, B: int,
                        cfg: DiscretizationConfig = DiscretizationConfig(),
                        mass: CountMatrix | None = None) -> dict[tuple[int, int], float]:
    """Population equicharacteristic entries keyed by (k, l)."""
    cells = _cells(mass if mass is not None else discretize(density, cfg.m))
    out = {}
    for transpose in (False, True):
        mat = cells.T if transpose else cells
        rows = coarsen(mat, rows=cfg.master)
        for e in range(2, B // 2 + 1):
            kmax = min(e - 1, B // e) if transpose else min(e, B // e)
            if kmax < 2:
                continue
            counts = np.ascontiguousarray(rows @ _equi_weights(mat.shape[1], e))
            mi = axis_scores(counts, kmax)
            for k in range(2, kmax + 1):
                v = 0.0 if mi[k] < _ZERO_MI else min(float(mi[k]) / math.log(k), 1.0)
                out[(e, k) if transpose else (k, e)] = v
    assert set(out) == set(admissible_pairs(B))
    return out
