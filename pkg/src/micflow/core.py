"""Samples, partitions, grids and exact discrete information quantities.

All partitions are expressed on ranks: a cut at position ``c`` separates the
points of rank ``< c`` from those of rank ``>= c``.  Points sharing a
coordinate value form a *clump* that no cut may split.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_LOG_BASE = 2.0


@dataclass(frozen=True)
class InfoConfig:
    log_base: float = DEFAULT_LOG_BASE

    def __post_init__(self):
        if not self.log_base > 1:
            raise ValueError("log_base must be > 1")


@dataclass(frozen=True, eq=False)
class Sample:
    """n ordered pairs.  ``latent_x`` optionally keeps pre-noise x values."""

    x: np.ndarray
    y: np.ndarray
    latent_x: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size < 2:
            raise ValueError("a sample needs at least 2 points")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample coordinates must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.latent_x is not None:
            lx = np.asarray(self.latent_x, dtype=float)
            if lx.shape != x.shape:
                raise ValueError("latent_x must match x")
            object.__setattr__(self, "latent_x", lx)

    @classmethod
    def from_pairs(cls, points: Sequence[tuple[float, float]]) -> "Sample":
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def transpose(self) -> "Sample":
        return Sample(self.y, self.x)


@dataclass(frozen=True)
class Partition:
    axis: str
    cuts: tuple[int, ...]
    n: int

    def __post_init__(self):
        if self.axis not in ("X", "Y"):
            raise ValueError(f"axis must be 'X' or 'Y', got {self.axis!r}")
        cuts = tuple(int(c) for c in self.cuts)
        if any(c <= 0 or c >= self.n for c in cuts):
            raise ValueError(f"cuts must lie in [1, {self.n})")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cuts must be strictly increasing")
        object.__setattr__(self, "cuts", cuts)

    @property
    def bins(self) -> int:
        return len(self.cuts) + 1

    def sizes(self) -> list[int]:
        edges = (0, *self.cuts, self.n)
        return [b - a for a, b in zip(edges, edges[1:])]

    def assign(self, ranks: np.ndarray) -> np.ndarray:
        """Bin index of each rank."""
        return np.searchsorted(np.asarray(self.cuts, dtype=np.int64), ranks, side="right")


@dataclass(frozen=True)
class Grid:
    columns: Partition
    rows: Partition

    def __post_init__(self):
        if self.columns.axis != "X" or self.rows.axis != "Y":
            raise ValueError("grid needs an X column partition and a Y row partition")
        if self.columns.n != self.rows.n:
            raise ValueError("partitions were built for different sample sizes")


@dataclass(frozen=True, eq=False)
class CountMatrix:
    """Joint cell counts (or masses); rows index the Y bins, columns the X bins."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float, ndmin=2)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2-d array")
        if np.any(cells < 0) or not np.all(np.isfinite(cells)):
            raise ValueError("cells must be finite and nonnegative")
        if not cells.sum() > 0:
            raise ValueError("count matrix has zero total mass")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def total(self) -> float:
        return float(self.cells.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def transpose(self) -> "CountMatrix":
        return CountMatrix(self.cells.T)


# --------------------------------------------------------------------------
# rank structure


def tie_groups(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stable sort order, dense group id per point, and group sizes.

    Group ids follow increasing value, so group ``g`` holds the ``g``-th
    smallest distinct value.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    sv = values[order]
    new = np.empty(sv.size, dtype=bool)
    new[:1] = True
    new[1:] = sv[1:] != sv[:-1]
    gid_sorted = np.cumsum(new) - 1
    gid = np.empty(values.size, dtype=np.int64)
    gid[order] = gid_sorted
    sizes = np.bincount(gid_sorted)
    return order, gid, sizes


def ranks(values: np.ndarray) -> np.ndarray:
    """Stable ordinal ranks (0-based)."""
    order = np.argsort(np.asarray(values, dtype=float), kind="stable")
    r = np.empty(order.size, dtype=np.int64)
    r[order] = np.arange(order.size)
    return r


def _even_sizes(n: int, bins: int) -> np.ndarray:
    q, rem = divmod(n, bins)
    sizes = np.full(bins, q, dtype=np.int64)
    sizes[:rem] += 1
    return sizes


def _feasible_tables(pos: np.ndarray, bins: int, lo: int, hi: int):
    """Forward/backward reachability over clump boundaries with bin sizes in [lo, hi]."""
    nb = pos.size
    right_lo = np.searchsorted(pos, pos + lo, side="left")
    right_hi = np.searchsorted(pos, pos + hi, side="right")
    back = np.zeros((bins + 1, nb), dtype=bool)
    back[0, nb - 1] = True
    for j in range(1, bins + 1):
        cs = np.concatenate([[0], np.cumsum(back[j - 1])])
        back[j] = cs[right_hi] - cs[right_lo] > 0
    return back, right_lo, right_hi


def equipartition_clumps(sizes: np.ndarray, bins: int) -> np.ndarray:
    """Assign consecutive clumps to bins as evenly as possible.

    Returns the bin index of each clump.  Uses exactly ``min(bins, #clumps)``
    bins, minimising the largest deviation of a bin's size from ``n / bins``.
    Among minimax solutions the cut positions are taken as late as possible,
    so leftover mass sits in earlier bins.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    g = sizes.size
    if g == 0:
        raise ValueError("cannot partition an empty set")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    n = int(sizes.sum())
    if bins >= g:
        return np.arange(g, dtype=np.int64)
    if g == n:
        bin_sizes = _even_sizes(n, bins)
        return np.repeat(np.arange(bins, dtype=np.int64), bin_sizes)

    pos = np.concatenate([[0], np.cumsum(sizes)])
    target = n / bins
    # candidate deviations: |s - n/bins| for every integer bin size s
    devs = np.unique(np.abs(np.arange(1, n + 1) - target))
    lo_i, hi_i = 0, devs.size - 1
    best = None
    while lo_i <= hi_i:
        mid = (lo_i + hi_i) // 2
        d = devs[mid]
        s_lo = max(1, int(np.ceil(target - d - 1e-9)))
        s_hi = int(np.floor(target + d + 1e-9))
        back, r_lo, r_hi = _feasible_tables(pos, bins, s_lo, s_hi)
        if back[bins, 0]:
            best = (back, r_lo, r_hi)
            hi_i = mid - 1
        else:
            lo_i = mid + 1
    assert best is not None  # one bin per clump block is always feasible at d = n
    back, r_lo, r_hi = best
    cuts = []
    cur = 0
    for j in range(1, bins):
        cand = np.arange(r_lo[cur], min(r_hi[cur], pos.size))
        cand = cand[back[bins - j, cand]]
        cur = int(cand[-1])
        cuts.append(cur)
    labels = np.zeros(g, dtype=np.int64)
    for c in cuts:
        labels[c:] += 1
    return labels


def nested_clumps(sizes: np.ndarray, depth: int) -> list[np.ndarray]:
    """Recursive median splitting of consecutive clumps.

    Returns clump-to-bin labels for every level ``0..depth``; level ``a`` has
    at most ``2**a`` bins and is a coarsening of every deeper level.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    g = sizes.size
    cum = np.concatenate([[0], np.cumsum(sizes)])
    # bins as [start, stop) clump index ranges
    starts = np.array([0], dtype=np.int64)
    stops = np.array([g], dtype=np.int64)
    levels = [np.zeros(g, dtype=np.int64)]
    for _ in range(depth):
        total = cum[stops] - cum[starts]
        # ideal split leaves the extra point in the earlier half
        ideal = cum[starts] + (total + 1) // 2
        j = np.searchsorted(cum, ideal, side="left")
        j = np.clip(j, starts + 1, np.maximum(stops - 1, starts + 1))
        # pick the closer of the boundaries j-1, j (prefer the later one on ties)
        prev = np.maximum(j - 1, starts + 1)
        use_prev = np.abs(cum[prev] - ideal) < np.abs(cum[j] - ideal)
        split = np.where(use_prev, prev, j)
        ok = (stops - starts) >= 2
        mid = np.where(ok, split, stops)
        starts = np.column_stack([starts, mid]).ravel()
        stops = np.column_stack([mid, stops]).ravel()
        keep = stops > starts
        starts, stops = starts[keep], stops[keep]
        levels.append(np.repeat(np.arange(starts.size, dtype=np.int64), stops - starts))
    return levels


def _labels_to_partition(labels: np.ndarray, sizes: np.ndarray, axis: str) -> Partition:
    pos = np.cumsum(sizes)
    change = np.flatnonzero(labels[1:] != labels[:-1])
    cuts = tuple(int(pos[i]) for i in change)
    return Partition(axis, cuts, int(pos[-1]))


def rank_equipartition(values: Sequence[float], bins: int, axis: str = "X") -> Partition:
    """Equipartition of ``values`` into ``bins`` rank bins that never splits ties."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    _, _, sizes = tie_groups(values)
    labels = equipartition_clumps(sizes, bins)
    return _labels_to_partition(labels, sizes, axis)


def _check_tie_rule(values: np.ndarray, part: Partition) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    sv = values[order]
    for c in part.cuts:
        if sv[c - 1] == sv[c]:
            raise ValueError(f"cut at rank {c} separates tied {part.axis} values")
    r = np.empty(values.size, dtype=np.int64)
    r[order] = np.arange(values.size)
    return part.assign(r)


def apply_grid(sample: Sample, grid: Grid) -> CountMatrix:
    """Counts of ``sample`` in each (row, column) cell of ``grid``."""
    if grid.columns.n != sample.n:
        raise ValueError("grid was built for a different sample size")
    col = _check_tie_rule(sample.x, grid.columns)
    row = _check_tie_rule(sample.y, grid.rows)
    k, l = grid.rows.bins, grid.columns.bins
    cells = np.bincount(row * l + col, minlength=k * l).reshape(k, l)
    return CountMatrix(cells)


# --------------------------------------------------------------------------
# information quantities


def _xlogx(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log(a[pos])
    return out


def entropy(marginal: Sequence[float], base: float = DEFAULT_LOG_BASE) -> float:
    """Shannon entropy of a nonnegative weight vector (normalised internally)."""
    p = np.asarray(marginal, dtype=float).ravel()
    if np.any(p < 0):
        raise ValueError("entropy weights must be nonnegative")
    total = p.sum()
    if not total > 0:
        raise ValueError("entropy weights must have positive sum")
    h = np.log(total) - _xlogx(p).sum() / total
    return max(float(h / np.log(base)), 0.0)


def mutual_information(counts, base: float = DEFAULT_LOG_BASE) -> float:
    """Plug-in mutual information of a joint count or mass matrix."""
    cells = counts.cells if isinstance(counts, CountMatrix) else np.asarray(counts, dtype=float)
    if cells.ndim != 2:
        raise ValueError("counts must be 2-d")
    if np.any(cells < 0):
        raise ValueError("counts must be nonnegative")
    total = cells.sum()
    if not total > 0:
        raise ValueError("counts have zero total")
    p = cells / total
    mi = _xlogx(p).sum() - _xlogx(p.sum(axis=1)).sum() - _xlogx(p.sum(axis=0)).sum()
    return max(float(mi / np.log(base)), 0.0)


def normalized_score(mi: float, k: int, l: int, base: float = DEFAULT_LOG_BASE) -> float:
    """``mi / log min(k, l)`` with ``mi`` given in ``base`` units."""
    if k < 2 or l < 2:
        raise ValueError("normalisation needs k, l >= 2")
    if mi < 0:
        raise ValueError("mutual information must be nonnegative")
    return float(mi / (np.log(min(k, l)) / np.log(base)))
