import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from micflow import (
    CharTriangle,
    EstimatorConfig,
    PreparedSample,
    Sample,
    admissible_pairs,
    equichar_clump,
    equichar_exact,
    mic_e,
    mutual_information,
    rank_equipartition,
    tic_e,
)
from micflow.core import tie_groups


def _enumerated_entry(sample, k, l):
    """Equipartition the larger axis, try every tie-respecting split of the other."""
    if k <= l:
        fixed_vals, opt_vals, fixed_bins, opt_bins = sample.x, sample.y, l, k
    else:
        fixed_vals, opt_vals, fixed_bins, opt_bins = sample.y, sample.x, k, l
    n = sample.n
    part = rank_equipartition(fixed_vals, fixed_bins)
    fr = np.empty(n, dtype=np.int64)
    fr[np.argsort(fixed_vals, kind="stable")] = np.arange(n)
    fcol = part.assign(fr)
    _, gid, sizes = tie_groups(opt_vals)
    best = 0.0
    for j in range(0, opt_bins):
        # a cut at c puts tie groups < c below it
        for cuts in combinations(range(1, sizes.size), j):
            labels = np.searchsorted(np.asarray(cuts, dtype=np.int64), gid, side="right")
            cells = np.zeros((j + 1, part.bins))
            np.add.at(cells, (labels, fcol), 1.0)
            best = max(best, mutual_information(cells))
    return best / math.log2(min(k, l))


def test_admissible_pairs():
    assert admissible_pairs(4) == [(2, 2)]
    assert admissible_pairs(6) == [(2, 2), (2, 3), (3, 2)]
    assert len(admissible_pairs(15)) == 16
    with pytest.raises(ValueError):
        admissible_pairs(3)


def test_budget():
    cfg = EstimatorConfig(alpha=0.6)
    assert cfg.budget(100) == 15
    assert cfg.budget(5) == 4
    with pytest.raises(ValueError):
        EstimatorConfig(alpha=1.0)
    with pytest.raises(ValueError):
        EstimatorConfig(c=0.5)


def test_exact_matches_enumeration_small(rng):
    cfg = EstimatorConfig(alpha=0.9)
    for trial in range(12):
        n = int(rng.integers(6, 12))
        if trial % 3 == 0:
            x, y = rng.integers(0, 4, n).astype(float), rng.integers(0, 5, n).astype(float)
        else:
            x, y = rng.random(n), rng.random(n)
        s = Sample(x, y)
        tri = equichar_exact(s, cfg)
        for (k, l) in tri.pairs:
            assert tri[k, l] == pytest.approx(_enumerated_entry(s, k, l), abs=1e-12), (k, l)


def test_entry_23_matches_enumeration_n40(rng):
    s = Sample(rng.random(40), rng.random(40))
    tri = equichar_exact(s, EstimatorConfig(alpha=0.6))
    assert tri[2, 3] == pytest.approx(_enumerated_entry(s, 2, 3), abs=1e-12)
    assert tri[3, 2] == pytest.approx(_enumerated_entry(s, 3, 2), abs=1e-12)


def _monotone_entry(n, k, l):
    """Best coarsening of an n-point equipartition into min(k, l) bins, normalised."""
    small, large = min(k, l), max(k, l)
    sizes = np.asarray(rank_equipartition(np.arange(n), large).sizes())
    best = 0.0
    for j in range(small):
        for cuts in combinations(range(1, large), j):
            merged = np.add.reduceat(sizes, (0, *cuts))
            best = max(best, mutual_information(np.diag(merged)))
    return best / math.log2(small)


def test_monotone_entries(monotone_100):
    tri = equichar_exact(monotone_100, EstimatorConfig(alpha=0.6))
    assert tri.B == 15
    assert mic_e(tri) == 1.0
    for (k, l) in tri.pairs:
        assert tri[k, l] == pytest.approx(_monotone_entry(100, k, l), abs=1e-12), (k, l)
    # only pairs whose bins can align with equal counts reach 1
    ones = sorted(p for p in tri.pairs if tri[p] == 1.0)
    assert ones == [(2, 2), (2, 4), (4, 2)]
    clumped = equichar_clump(monotone_100, EstimatorConfig(alpha=0.6))
    assert mic_e(clumped) == 1.0


def test_constant_y_is_all_zero(rng):
    s = Sample(rng.random(50), np.full(50, 2.0))
    for tri in (equichar_exact(s), equichar_clump(s)):
        assert mic_e(tri) == 0.0
        assert tic_e(tri) == 0.0


def test_small_samples_rejected():
    with pytest.raises(ValueError):
        equichar_exact(Sample([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]))


def test_triangle_reducers():
    B = 8
    scores = np.full((B + 1, B + 1), np.nan)
    for k, l in admissible_pairs(B):
        scores[k, l] = 0.0
    zero = CharTriangle(B, scores.copy())
    assert mic_e(zero) == 0.0 and tic_e(zero) == 0.0
    scores[2, 3] = 0.42
    one = CharTriangle(B, scores)
    assert tic_e(one) == 0.42 and mic_e(one) == 0.42
    assert one.argmax() == (2, 3)
    with pytest.raises(KeyError):
        one[3, 3]


def test_large_c_equals_exact(rng):
    for _ in range(10):
        n = int(rng.integers(10, 60))
        s = Sample(rng.random(n), rng.random(n) + rng.random(n))
        cfg = EstimatorConfig(alpha=0.6, c=float(n))
        a, b = equichar_exact(s, cfg), equichar_clump(s, cfg)
        assert np.allclose(a.values(), b.values(), rtol=0, atol=1e-12)


def test_clump_levels_nested(noisy_linear_500):
    exact = equichar_exact(noisy_linear_500, EstimatorConfig(0.6, 5.0)).values()
    c5 = equichar_clump(noisy_linear_500, EstimatorConfig(0.6, 5.0)).values()
    c1 = equichar_clump(noisy_linear_500, EstimatorConfig(0.6, 1.0)).values()
    assert np.all(c1 <= c5 + 1e-12)
    assert np.all(c5 <= exact + 1e-12)


def test_prepared_sample_permutation(noisy_linear_500):
    prep = PreparedSample(noisy_linear_500)
    perm = np.random.default_rng(3).permutation(500)
    direct = equichar_clump(Sample(noisy_linear_500.x, noisy_linear_500.y[perm]))
    via = prep.triangle(EstimatorConfig(), y_perm=perm)
    assert np.array_equal(direct.values(), via.values())


small_samples = st.integers(6, 30).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 12), min_size=n, max_size=n),
        st.lists(st.integers(-400, 400).map(lambda v: v / 40.0), min_size=n, max_size=n),
    )
)


@given(small_samples)
def test_entries_in_unit_interval_and_mic_bounds_mean(data):
    s = Sample(np.asarray(data[0], float), np.asarray(data[1], float))
    for tri in (equichar_exact(s, EstimatorConfig(0.8)), equichar_clump(s, EstimatorConfig(0.8, 1.0))):
        v = tri.values()
        assert np.all((v >= 0) & (v <= 1 + 1e-12))
        assert mic_e(tri) >= tic_e(tri) / len(tri.pairs) - 1e-12


@given(small_samples)
def test_invariant_under_monotone_transforms(data):
    x, y = np.asarray(data[0], float), np.asarray(data[1], float)
    s = Sample(x, y)
    t = Sample(np.exp(x / 4.0), 3.0 * y**3 + y - 7.0)
    cfg = EstimatorConfig(0.8)
    assert np.allclose(equichar_exact(s, cfg).values(), equichar_exact(t, cfg).values(), atol=1e-12)


@given(small_samples)
def test_transpose_swaps_triangle(data):
    s = Sample(np.asarray(data[0], float), np.asarray(data[1], float))
    a, b = equichar_exact(s, EstimatorConfig(0.8)), equichar_exact(s.transpose(), EstimatorConfig(0.8))
    for (k, l) in a.pairs:
        if k != l:
            assert a[k, l] == pytest.approx(b[l, k], abs=1e-12)


@given(small_samples)
def test_exact_dominates_clumped(data):
    s = Sample(np.asarray(data[0], float), np.asarray(data[1], float))
    cfg = EstimatorConfig(0.8, 1.0)
    assert np.all(equichar_clump(s, cfg).values() <= equichar_exact(s, cfg).values() + 1e-12)
