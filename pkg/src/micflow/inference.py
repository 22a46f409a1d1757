"""Permutation tests of independence and all-pairs association scans."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .core import Sample
from .equichar import CharTriangle, EstimatorConfig, PreparedSample, mic_e, tic_e
from .parallel import pmap

MIN_PERMUTATIONS = 19
MIN_ROWS = 4

_STATISTICS = {"tic_e": tic_e, "mic_e": mic_e}


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    permutations: int
    seed: int | tuple[int, ...]
    name: str = "tic_e"

    __test__ = False  # keep pytest from collecting this class


def _seed_key(seed) -> list[int]:
    return [int(s) for s in seed] if isinstance(seed, (tuple, list)) else [int(seed)]


def null_statistics(prepared: PreparedSample, cfg: EstimatorConfig, permutations: int,
                    seed, name: str = "tic_e", threads: int | None = None) -> np.ndarray:
    """Statistic on ``permutations`` copies of the sample with y re-paired at random.

    Replicate ``i`` draws its permutation from ``default_rng([*seed, i])``.
    """
    stat = _STATISTICS[name]
    key = _seed_key(seed)

    def one(i: int) -> float:
        perm = np.random.default_rng([*key, i]).permutation(prepared.n)
        return stat(prepared.triangle(cfg, y_perm=perm))

    return np.asarray(pmap(one, range(permutations), threads))


def add_one_p_value(observed: float, null: np.ndarray) -> float:
    # tiny slack so exact float ties with the observed value count as >=
    hits = int(np.count_nonzero(null >= observed - 1e-12 * max(1.0, abs(observed))))
    return (1 + hits) / (1 + null.size)


def is_degenerate(sample: Sample) -> bool:
    """True when either axis is constant."""
    return bool(np.all(sample.x == sample.x[0]) or np.all(sample.y == sample.y[0]))


def prepared_permutation_test(prepared: PreparedSample, degenerate: bool, cfg: EstimatorConfig,
                              permutations: int, seed, name: str = "tic_e",
                              threads: int | None = None) -> tuple[TestResult, CharTriangle | None]:
    """Permutation test on a prepared sample; also returns the observed triangle."""
    if degenerate:
        return TestResult(0.0, 1.0, permutations, seed, name), None
    tri = prepared.triangle(cfg)
    observed = _STATISTICS[name](tri)
    null = null_statistics(prepared, cfg, permutations, seed, name, threads)
    return TestResult(observed, add_one_p_value(observed, null), permutations, seed, name), tri


def permutation_test(sample: Sample, cfg: EstimatorConfig = EstimatorConfig(),
                     permutations: int = 999, seed=0, statistic: str = "tic_e",
                     threads: int | None = None) -> TestResult:
    """Right-tailed test of independence with a permutation null.

    The statistic is computed on the clumped equicharacteristic matrix.  A
    sample with a constant axis has statistic 0 and p-value 1.
    """
    if permutations < MIN_PERMUTATIONS:
        raise ValueError(f"permutations must be >= {MIN_PERMUTATIONS}")
    if statistic not in _STATISTICS:
        raise ValueError(f"statistic must be one of {sorted(_STATISTICS)}")
    if sample.n < MIN_ROWS:
        raise ValueError(f"permutation test needs n >= {MIN_ROWS}")
    result, _ = prepared_permutation_test(PreparedSample(sample), is_degenerate(sample), cfg,
                                          permutations, seed, statistic, threads)
    return result


def bh_adjust(p_values: Sequence[float]) -> list[float]:
    """Benjamini-Hochberg step-up adjusted q-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return []
    if np.any(~(p > 0)) or np.any(p > 1):
        raise ValueError("p-values must lie in (0, 1]")
    order = np.argsort(p, kind="stable")
    ranked = p[order] * p.size / np.arange(1, p.size + 1)
    q_sorted = np.minimum(np.minimum.accumulate(ranked[::-1])[::-1], 1.0)
    q = np.empty_like(q_sorted)
    q[order] = q_sorted
    return [float(v) for v in q]


@dataclass(frozen=True)
class PairScanRow:
    var_a: str
    var_b: str
    n_used: int
    mic_e: float
    tic_e: float
    p_value: float
    q_value: float
    passes: bool
    note: str = ""


def _as_columns(table) -> dict[str, np.ndarray]:
    if isinstance(table, Mapping):
        cols = {str(k): np.asarray(v, dtype=float) for k, v in table.items()}
    else:
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2:
            raise ValueError("table must be a mapping of columns or a 2-d array")
        cols = {f"c{j}": arr[:, j] for j in range(arr.shape[1])}
    if len(cols) < 2:
        raise ValueError("pair scan needs at least 2 columns")
    lengths = {v.size for v in cols.values()}
    if len(lengths) != 1:
        raise ValueError("all columns must have the same length")
    return cols


def pair_scan(table, cfg: EstimatorConfig = EstimatorConfig(), permutations: int = 999,
              q_threshold: float = 0.05, seed: int = 0,
              threads: int | None = None) -> list[PairScanRow]:
    """Test every unordered column pair, control the FDR, rank by MICe.

    Non-finite cells count as missing and are dropped pairwise.  Pairs with
    fewer than four usable rows get a diagnostic row with p = 1.  Pair ``j``
    (in column order) uses seed ``(seed, j)``.
    """
    if not 0 < q_threshold <= 1:
        raise ValueError("q_threshold must lie in (0, 1]")
    cols = _as_columns(table)
    pairs = list(combinations(cols, 2))

    def one(job):
        j, (a, b) = job
        xa, xb = cols[a], cols[b]
        ok = np.isfinite(xa) & np.isfinite(xb)
        n_used = int(ok.sum())
        if n_used < MIN_ROWS:
            return (a, b, n_used, math.nan, math.nan, 1.0, f"skipped: {n_used} usable rows")
        sample = Sample(xa[ok], xb[ok])
        degenerate = is_degenerate(sample)
        res, tri = prepared_permutation_test(PreparedSample(sample), degenerate, cfg,
                                             permutations, (seed, j), "tic_e", 1)
        mic = 0.0 if tri is None else mic_e(tri)
        note = "constant column" if degenerate else ""
        return (a, b, n_used, mic, res.statistic, res.p_value, note)

    raw = pmap(one, list(enumerate(pairs)), threads)
    qs = bh_adjust([r[5] for r in raw])
    rows = [
        PairScanRow(a, b, n, mic, tic, p, q, bool(q <= q_threshold and not note.startswith("skipped")), note)
        for (a, b, n, mic, tic, p, note), q in zip(raw, qs)
    ]
    rows.sort(key=lambda r: (not r.passes, -(r.mic_e if not math.isnan(r.mic_e) else -1.0)))
    return rows
