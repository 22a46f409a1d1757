import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from micflow import (
    CountMatrix,
    Grid,
    Partition,
    Sample,
    apply_grid,
    entropy,
    mutual_information,
    normalized_score,
    rank_equipartition,
)
from micflow.core import equipartition_clumps, nested_clumps, tie_groups


def test_rank_equipartition_even_split():
    part = rank_equipartition(np.arange(1, 11), 2)
    assert part.cuts == (5,)
    assert part.sizes() == [5, 5]


def test_rank_equipartition_all_tied_is_one_bin():
    part = rank_equipartition([3.0] * 10, 2)
    assert part.bins == 1
    assert part.sizes() == [10]


def test_rank_equipartition_remainder_rule():
    # both {111}{23}{4} and {111}{2}{34} are minimax; later cuts win
    part = rank_equipartition([1, 1, 1, 2, 3, 4], 3)
    assert part.sizes() == [3, 2, 1]


def test_rank_equipartition_more_bins_than_values():
    part = rank_equipartition([1.0, 2.0, 2.0, 5.0], 10)
    assert part.sizes() == [1, 2, 1]


def test_rank_equipartition_rejects_empty():
    with pytest.raises(ValueError):
        rank_equipartition([], 2)


def test_rank_equipartition_unsorted_input():
    part = rank_equipartition([4.0, 1.0, 3.0, 2.0], 2)
    assert part.cuts == (2,)


def _brute_minimax(sizes, bins):
    from itertools import combinations

    n = sum(sizes)
    pos = np.cumsum(sizes)[:-1]
    best = math.inf
    for cuts in combinations(pos, bins - 1):
        edges = (0, *cuts, n)
        best = min(best, max(abs((b - a) - n / bins) for a, b in zip(edges, edges[1:])))
    return best


@given(st.lists(st.integers(1, 4), min_size=2, max_size=9), st.integers(2, 5))
def test_equipartition_clumps_is_minimax(sizes, bins):
    sizes = np.asarray(sizes)
    labels = equipartition_clumps(sizes, bins)
    if bins >= sizes.size:
        assert list(labels) == list(range(sizes.size))
        return
    assert labels[-1] == bins - 1
    assert np.all(np.diff(labels) >= 0)
    got = np.bincount(labels, weights=sizes)
    dev = np.max(np.abs(got - sizes.sum() / bins))
    assert dev == pytest.approx(_brute_minimax(list(sizes), bins), abs=1e-9)


@given(st.lists(st.integers(1, 5), min_size=1, max_size=40), st.integers(0, 5))
def test_nested_clumps_are_nested(sizes, depth):
    levels = nested_clumps(np.asarray(sizes), depth)
    assert len(levels) == depth + 1
    for a, (coarse, fine) in enumerate(zip(levels, levels[1:])):
        assert coarse.max() + 1 <= 2**a
        # every fine bin sits inside one coarse bin
        for b in np.unique(fine):
            assert np.unique(coarse[fine == b]).size == 1


def test_tie_groups_dense_ids():
    order, gid, sizes = tie_groups(np.array([2.0, 1.0, 2.0, 3.0]))
    assert list(gid) == [1, 0, 1, 2]
    assert list(sizes) == [1, 2, 1]
    assert list(order) == [1, 0, 2, 3]


def test_apply_grid_diagonal():
    s = Sample([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])
    grid = Grid(Partition("X", (2,), 4), Partition("Y", (2,), 4))
    assert apply_grid(s, grid).cells.tolist() == [[2, 0], [0, 2]]


def test_apply_grid_trivial_grid(rng):
    s = Sample(rng.random(17), rng.random(17))
    grid = Grid(Partition("X", (), 17), Partition("Y", (), 17))
    assert apply_grid(s, grid).cells.tolist() == [[17]]


def test_apply_grid_matches_per_point_scan(rng):
    for _ in range(20):
        x, y = rng.random(8), rng.random(8)
        s = Sample(x, y)
        cols = Partition("X", tuple(sorted(rng.choice(np.arange(1, 8), 1, replace=False))), 8)
        rows = Partition("Y", tuple(sorted(rng.choice(np.arange(1, 8), 2, replace=False))), 8)
        got = apply_grid(s, Grid(cols, rows)).cells
        rx, ry = np.argsort(np.argsort(x)), np.argsort(np.argsort(y))
        want = np.zeros((3, 2))
        for i in range(8):
            want[sum(ry[i] >= c for c in rows.cuts), sum(rx[i] >= c for c in cols.cuts)] += 1
        assert np.array_equal(got, want)


def test_apply_grid_rejects_cut_through_ties():
    s = Sample([1.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])
    grid = Grid(Partition("X", (1,), 4), Partition("Y", (2,), 4))
    with pytest.raises(ValueError, match="tied"):
        apply_grid(s, grid)


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition("X", (3, 2), 5)
    with pytest.raises(ValueError):
        Partition("X", (5,), 5)
    with pytest.raises(ValueError):
        Partition("Z", (), 5)


def test_sample_validation():
    with pytest.raises(ValueError):
        Sample([1.0, np.nan], [1.0, 2.0])
    with pytest.raises(ValueError):
        Sample([1.0, 2.0], [1.0])


def test_count_matrix_rejects_bad_cells():
    with pytest.raises(ValueError):
        CountMatrix([[1.0, -1.0]])
    with pytest.raises(ValueError):
        CountMatrix([[0.0, 0.0]])


def test_entropy_examples():
    assert entropy([0.5, 0.5]) == 1.0
    assert entropy([1.0, 0.0]) == 0.0
    assert entropy([0.25, 0.75]) == pytest.approx(0.811278124459, abs=1e-9)
    with pytest.raises(ValueError):
        entropy([0.5, -0.1])


def test_mutual_information_examples():
    assert mutual_information([[0.5, 0], [0, 0.5]]) == pytest.approx(1.0, abs=1e-15)
    assert mutual_information([[0.4, 0.1], [0.1, 0.4]]) == pytest.approx(0.278071905112638, abs=1e-12)
    assert mutual_information(np.outer([0.2, 0.8], [0.1, 0.3, 0.6])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        mutual_information([[0.0, 0.0]])


def test_normalized_score_examples():
    assert normalized_score(1.0, 2, 9) == 1.0
    assert normalized_score(0.0, 5, 7) == 0.0
    assert normalized_score(0.613, 2, 3) == pytest.approx(0.613)
    with pytest.raises(ValueError):
        normalized_score(0.5, 1, 4)


counts_2d = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                   elements=st.floats(0, 50, allow_nan=False)).filter(lambda a: a.sum() > 0)


@given(counts_2d)
def test_mi_bounds_and_symmetry(cells):
    mi = mutual_information(cells)
    hx = entropy(cells.sum(axis=0))
    hy = entropy(cells.sum(axis=1))
    assert 0.0 <= mi <= min(hx, hy) + 1e-9
    assert mi == pytest.approx(mutual_information(cells.T), abs=1e-12)


@given(counts_2d)
def test_mi_is_scale_free(cells):
    assert mutual_information(cells * 3.5) == pytest.approx(mutual_information(cells), abs=1e-10)


@given(counts_2d)
def test_merging_rows_cannot_raise_mi(cells):
    if cells.shape[0] < 2:
        return
    merged = np.vstack([cells[:2].sum(axis=0), cells[2:]])
    assert mutual_information(merged) <= mutual_information(cells) + 1e-10


@given(counts_2d, st.sampled_from([math.e, 10.0, 3.0]))
def test_log_base_change(cells, base):
    bits = mutual_information(cells)
    assert mutual_information(cells, base=base) == pytest.approx(bits * math.log(2) / math.log(base), abs=1e-10)
