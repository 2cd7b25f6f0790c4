import numpy as np
import pytest

from hdmean._rng import complement_indices, derive_seed, draw_index_sets, substream


def test_substream_is_keyed():
    a = substream(1, 2).standard_normal(4)
    b = substream(1, 2).standard_normal(4)
    c = substream(1, 3).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_derive_seed_is_stable_and_bounded():
    s = derive_seed(5, 0, 3)
    assert s == derive_seed(5, 0, 3)
    assert 0 <= s < 2**63
    assert derive_seed(5, 0, 4) != s
    assert derive_seed(0) != derive_seed(1)


def test_draw_index_sets_shape_and_contents():
    draws = draw_index_sets(substream(0), 9, 4, 25)
    assert draws.shape == (25, 4)
    assert draws.dtype == np.int64
    assert draws.min() >= 0 and draws.max() < 9
    assert (np.diff(draws, axis=1) > 0).all()  # sorted, hence distinct


def test_draw_index_sets_cover_the_range():
    draws = draw_index_sets(substream(3), 6, 1, 300)
    assert set(np.unique(draws)) == set(range(6))


def test_draw_index_sets_default_count():
    assert draw_index_sets(substream(1), 8, 3).shape == (1, 3)


def test_complement_indices():
    sel = np.array([0, 2], dtype=np.int64)
    np.testing.assert_array_equal(complement_indices(sel, 5), [1, 3, 4])
    both = np.concatenate([sel, complement_indices(sel, 5)])
    assert set(both.tolist()) == set(range(5))


@pytest.mark.parametrize("n,size", [(6, 3), (10, 10), (4, 1)])
def test_draw_index_sets_edge_sizes(n, size):
    draws = draw_index_sets(substream(2), n, size, 5)
    assert draws.shape == (5, size)
    if size == n:
        np.testing.assert_array_equal(draws, np.tile(np.arange(n), (5, 1)))
