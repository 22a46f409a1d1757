"""Optimal sub-partitions of a master partition against fixed columns.

Given joint counts of master rows (the candidate clumps of the axis being
optimised) against a fixed column partition, :func:`optimize_axis` finds for
every ``i <= k`` the sub-partition with at most ``i`` bins that maximises the
mutual information of the induced grid.

The mutual information of a row partition splits into a sum of per-bin
terms ``sum_j c_j log c_j - c log c`` (``c_j`` the bin's counts per column,
``c`` its total), so the search is a one-dimensional segmentation solved by
dynamic programming over the last cut.  Prefix sums over master rows make
every bin's term an O(columns) lookup, for O(|rows|^2 (k + columns)) total.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit

from .core import CountMatrix, Partition, mutual_information

BRUTE_FORCE_LIMIT = 20


@njit(cache=True, nogil=True)
def _xlogx(v):
    return v * np.log(v) if v > 0.0 else 0.0


@njit(cache=True, nogil=True)
def _bin_terms(counts):
    """terms[a, b] = score of merging master rows a..b-1 into one bin."""
    s, l = counts.shape
    prefix = np.zeros((s + 1, l))
    tot = np.zeros(s + 1)
    for r in range(s):
        acc = 0.0
        for j in range(l):
            prefix[r + 1, j] = prefix[r, j] + counts[r, j]
            acc += counts[r, j]
        tot[r + 1] = tot[r] + acc
    terms = np.zeros((s + 1, s + 1))
    for a in range(s):
        for b in range(a + 1, s + 1):
            acc = 0.0
            for j in range(l):
                acc += _xlogx(prefix[b, j] - prefix[a, j])
            terms[a, b] = acc - _xlogx(tot[b] - tot[a])
    return terms


@njit(cache=True, nogil=True)
def _segment(terms, kmax, eps):
    """best[i, b]: best score of rows [0, b) using at most i bins.

    ``last[i, b]`` holds the final cut of the optimum, or -1 when the optimum
    uses fewer than ``i`` bins.
    """
    s = terms.shape[0] - 1
    best = np.full((kmax + 1, s + 1), -np.inf)
    last = np.full((kmax + 1, s + 1), -1, dtype=np.int64)
    for b in range(1, s + 1):
        best[1, b] = terms[0, b]
    for i in range(2, kmax + 1):
        for b in range(1, s + 1):
            cur = best[i - 1, b]
            arg = -1
            for a in range(1, b):
                cand = best[i - 1, a] + terms[a, b]
                if cand > cur + eps:
                    cur = cand
                    arg = a
            best[i, b] = cur
            last[i, b] = arg
    return best, last


@njit(cache=True, nogil=True)
def _column_entropy_term(counts):
    s, l = counts.shape
    total = 0.0
    acc = 0.0
    for j in range(l):
        c = 0.0
        for r in range(s):
            c += counts[r, j]
        acc += _xlogx(c)
        total += c
    return acc, total


@njit(cache=True, nogil=True)
def axis_scores(counts, kmax):
    """Maximal mutual information (nats) for at most i bins, i = 0..kmax.

    Entries 0 and 1 are zero.  ``counts`` is master rows x fixed columns.
    """
    out = np.zeros(kmax + 1)
    s = counts.shape[0]
    if s < 2 or kmax < 2:
        return out
    terms = _bin_terms(counts)
    col_term, total = _column_entropy_term(counts)
    if total <= 0.0:
        return out
    best, _ = _segment(terms, kmax, 1e-13 * total)
    for i in range(2, kmax + 1):
        mi = (best[i, s] - col_term) / total + np.log(total)
        out[i] = mi if mi > 0.0 else 0.0
    return out


@dataclass(frozen=True)
class AxisOptimum:
    """Per size ``i``: best mutual information (bits) and a witness partition."""

    best_mi: dict[int, float]
    best_partition: dict[int, Partition]

    def sizes(self) -> list[int]:
        return sorted(self.best_mi)


def _as_cells(counts) -> np.ndarray:
    cells = counts.cells if isinstance(counts, CountMatrix) else np.asarray(counts, dtype=float)
    if cells.ndim != 2:
        raise ValueError("master counts must be a 2-d array")
    if np.any(cells < 0):
        raise ValueError("master counts must be nonnegative")
    return np.ascontiguousarray(cells, dtype=float)


def collapse_rows(cells: np.ndarray, cuts) -> np.ndarray:
    """Merge master rows into the bins delimited by ``cuts``."""
    edges = np.asarray((0, *cuts), dtype=np.int64)
    return np.add.reduceat(cells, edges, axis=0)


def _trivial(s: int, k: int) -> AxisOptimum:
    part = Partition("Y", (), max(s, 1))
    return AxisOptimum({i: 0.0 for i in range(2, k + 1)}, {i: part for i in range(2, k + 1)})


def _lex_smallest_cuts(terms: np.ndarray, suffix: np.ndarray, i: int, eps: float) -> tuple[int, ...]:
    """Fewest bins, then lexicographically smallest cuts, among optimal partitions.

    ``suffix[j, a]`` is the best score of rows ``[a, s)`` using at most ``j`` bins.
    """
    s = terms.shape[0] - 1
    target = suffix[i, 0]
    j = next(j for j in range(1, i + 1) if suffix[j, 0] >= target - eps)
    cuts, pos, need = [], 0, target
    while j > 1:
        if terms[pos, s] >= need - eps:
            break
        for c in range(pos + 1, s):
            if terms[pos, c] + suffix[j - 1, c] >= need - eps:
                break
        cuts.append(c)
        need -= terms[pos, c]
        pos, j = c, j - 1
    return tuple(cuts)


def optimize_axis(counts, k: int) -> AxisOptimum:
    """Best sub-partitions of the master rows for every size ``2..k``.

    ``counts`` is a ``|master| x columns`` matrix.  Ties between equally good
    partitions (up to float noise) go to fewer bins, then to the
    lexicographically smallest cut set.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    cells = _as_cells(counts)
    s = cells.shape[0]
    if s < 2 or cells.sum() <= 0:
        return _trivial(s, k)
    eps = 1e-12 * cells.sum()
    terms = _bin_terms(cells)
    # suffix tables come from the same DP run on the reversed rows
    rev, _ = _segment(_bin_terms(np.ascontiguousarray(cells[::-1])), k, 0.0)
    suffix = np.empty_like(rev)
    suffix[:, : s + 1] = rev[:, ::-1]
    best_mi, best_part = {}, {}
    for i in range(2, k + 1):
        cuts = _lex_smallest_cuts(terms, suffix, i, eps)
        best_part[i] = Partition("Y", cuts, s)
        best_mi[i] = mutual_information(collapse_rows(cells, cuts))
    return AxisOptimum(best_mi, best_part)


def brute_force_axis(counts, k: int) -> AxisOptimum:
    """Exhaustive search over all cut subsets; a test oracle for small inputs."""
    if k < 2:
        raise ValueError("k must be >= 2")
    cells = _as_cells(counts)
    s = cells.shape[0]
    if s > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} master rows")
    if s < 2 or cells.sum() <= 0:
        return _trivial(s, k)
    best_mi, best_part = {}, {}
    cur_mi, cur_cuts = 0.0, ()
    for i in range(2, k + 1):
        for cuts in combinations(range(1, s), i - 1):
            mi = mutual_information(collapse_rows(cells, cuts))
            # improvements below float noise are ties (keep fewer bins, then lex order)
            if mi > cur_mi + 1e-12:
                cur_mi, cur_cuts = mi, cuts
        best_mi[i] = cur_mi
        best_part[i] = Partition("Y", cur_cuts, s)
    return AxisOptimum(best_mi, best_part)
