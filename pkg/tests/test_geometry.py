import numpy as np
import pytest

from app.core.errors import InputError, ParameterError
from app.domain.geometry import build_point_set, knn_index, pairwise_distances
from tests.conftest import random_points


def test_three_point_radii(three_points):
    idx = knn_index(three_points, 1)
    assert idx.radii.tolist() == [1.0, 1.0, 2.0]
    assert idx.neighbors[:, 0].tolist() == [1, 0, 1]


def test_ties_break_by_index():
    ps = build_point_set([[0.0], [1.0], [-1.0], [5.0]])
    idx = knn_index(ps, 1)
    # points 1 and 2 are both at distance 1 from point 0
    assert idx.neighbors[0].tolist() == [1]
    assert knn_index(ps, 2).neighbors[0].tolist() == [1, 2]


@pytest.mark.parametrize(
    ("raw", "kind"),
    [
        ([], "empty"),
        ([[0.0, 1.0], [2.0]], "dimension_mismatch"),
        ([[0.0], [float("nan")]], "invalid_value"),
        ([[0.0], [float("inf")]], "invalid_value"),
        ([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]], "duplicate_point"),
    ],
)
def test_build_point_set_rejects(raw, kind):
    with pytest.raises(InputError) as err:
        build_point_set(raw)
    assert err.value.kind == kind


def test_point_set_is_read_only():
    ps = random_points(0, 10, 2)
    with pytest.raises(ValueError):
        ps.points[0, 0] = 1.0


@pytest.mark.parametrize("k", [0, 5])
def test_knn_index_rejects_k_out_of_range(k):
    ps = random_points(0, 5, 2)
    with pytest.raises(ParameterError):
        knn_index(ps, k)


def test_unknown_backend():
    with pytest.raises(ParameterError):
        knn_index(random_points(0, 10, 2), 2, backend="annoy")


@pytest.mark.parametrize(("n", "d", "k"), [(60, 1, 1), (150, 2, 4), (200, 5, 9)])
def test_kdtree_matches_brute_bit_for_bit(n, d, k):
    ps = random_points(n + d, n, d)
    brute = knn_index(ps, k, backend="brute")
    tree = knn_index(ps, k, backend="kdtree")
    np.testing.assert_array_equal(brute.radii, tree.radii)
    np.testing.assert_array_equal(brute.neighbors, tree.neighbors)


def test_chunk_size_does_not_change_result():
    ps = random_points(3, 97, 3)
    reference = knn_index(ps, 4, chunk_size=97)
    for chunk in (1, 7, 32):
        idx = knn_index(ps, 4, chunk_size=chunk)
        np.testing.assert_array_equal(reference.radii, idx.radii)
        np.testing.assert_array_equal(reference.neighbors, idx.neighbors)


def test_radius_is_kth_neighbor_distance():
    ps = random_points(11, 80, 3)
    idx = knn_index(ps, 6)
    dists = pairwise_distances(ps.points, slice(None))
    for i in range(ps.n):
        row = np.delete(dists[i], i)
        assert idx.radii[i] == np.sort(row)[5]
        assert dists[i, idx.neighbors[i, -1]] == idx.radii[i]


def test_radii_scale_with_points():
    ps = random_points(5, 50, 2)
    base = knn_index(ps, 3)
    scaled = knn_index(ps.scaled(4.0), 3)
    np.testing.assert_allclose(scaled.radii, 4.0 * base.radii, rtol=1e-12)


def test_permutation_relabels_neighbors():
    ps = random_points(9, 40, 2)
    order = np.random.default_rng(1).permutation(ps.n)
    base = knn_index(ps, 3)
    moved = knn_index(ps.permuted(order), 3)
    np.testing.assert_array_equal(moved.radii, base.radii[order])


def test_three_point_second_neighbor_radii(three_points):
    assert knn_index(three_points, 2).radii.tolist() == [3.0, 2.0, 3.0]


def test_radii_non_decreasing_in_k():
    ps = random_points(21, 60, 3)
    radii = [knn_index(ps, k).radii for k in range(1, 9)]
    for smaller, larger in zip(radii, radii[1:]):
        assert (smaller <= larger).all()


@pytest.mark.parametrize("k", [1, 4, 10])
def test_closed_ball_holds_exactly_k_other_points(k):
    ps = random_points(31, 90, 2)
    idx = knn_index(ps, k)
    dists = pairwise_distances(ps.points, slice(None))
    np.fill_diagonal(dists, np.inf)
    counts = (dists <= idx.radii[:, None]).sum(axis=1)
    assert counts.tolist() == [k] * ps.n
