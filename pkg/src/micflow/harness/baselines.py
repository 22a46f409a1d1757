"""Baseline dependence statistics."""
from __future__ import annotations

import math

import numpy as np

from ..core import Sample

DCOR_MAX_N = 5000
_BLOCK = 512


def pearson(sample: Sample) -> float:
    """Pearson correlation; 0 when either axis is constant."""
    x, y = sample.x, sample.y
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


def _dist_moments(v: np.ndarray):
    """Row means and grand mean of |v_i - v_j|, via sorting."""
    n = v.size
    order = np.argsort(v, kind="stable")
    s = v[order]
    cum = np.cumsum(s)
    i = np.arange(n)
    # sum_j |s_i - s_j| with inclusive prefix sums
    row = s * (2 * i - n + 2) + cum[-1] - 2 * cum
    rows = np.empty(n)
    rows[order] = row / n
    return rows, rows.mean()


def distance_correlation(sample: Sample) -> float:
    """Sample distance correlation (V-statistic form), in [0, 1]."""
    x, y = sample.x, sample.y
    n = x.size
    if n > DCOR_MAX_N:
        raise ValueError(f"distance correlation is O(n^2); n must be <= {DCOR_MAX_N}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    ax, gx = _dist_moments(x)
    ay, gy = _dist_moments(y)

    def cross(u, v):
        # mean over i, j of |u_i - u_j| |v_i - v_j|, in row blocks
        total = 0.0
        for s in range(0, n, _BLOCK):
            du = np.abs(u[s:s + _BLOCK, None] - u[None, :])
            dv = np.abs(v[s:s + _BLOCK, None] - v[None, :])
            total += float(np.einsum("ij,ij->", du, dv))
        return total / (n * n)

    def dcov2(u, v, au, gu, av, gv):
        return cross(u, v) - 2.0 * float(np.mean(au * av)) + gu * gv

    vxy = dcov2(x, y, ax, gx, ay, gy)
    vxx = dcov2(x, x, ax, gx, ax, gx)
    vyy = dcov2(y, y, ay, gy, ay, gy)
    if vxx <= 0 or vyy <= 0:
        return 0.0
    r2 = max(vxy, 0.0) / math.sqrt(vxx * vyy)
    return float(min(math.sqrt(r2), 1.0))


def linfoot(mi_bits: float) -> float:
    """Squared Linfoot correlation ``1 - 2^(-2 I)`` of a mutual information in bits."""
    if mi_bits < 0:
        raise ValueError("mutual information must be >= 0")
    return 1.0 - 2.0 ** (-2.0 * mi_bits)
