import numpy as np
import pytest

from ccnmdf import euclid
from ccnmdf.errors import InvalidInput, ShapeMismatch
from ccnmdf.manifolds import SPD, Euclidean, Power

from conftest import brute_force_kmeans, rand_spd


def test_multiplicative_step_arithmetic():
    np.testing.assert_allclose(euclid.multiplicative_step(np.array([1.0, 2.0]),
                                                          np.array([4.0, 1.0]),
                                                          np.array([1.0, 1.0])),
                               [2.0, 2.0], rtol=1e-11)
    # zeros stay zero, both terms zero leaves h unchanged
    assert euclid.multiplicative_step(0.0, 5.0, 1.0) == 0.0
    assert euclid.multiplicative_step(3.0, 0.0, 0.0) == 3.0


def test_pos_neg_split(rng):
    a = rng.normal(size=(4, 4))
    np.testing.assert_array_equal(euclid.pos(a) - euclid.neg(a), a)
    assert np.all(euclid.pos(a) >= 0) and np.all(euclid.neg(a) >= 0)


@pytest.mark.parametrize("seed", range(8))
def test_kmeans_finds_optimal_two_partition(seed):
    x = np.random.default_rng(seed).normal(size=(6, 2))
    best = brute_force_kmeans(x, 2)
    onehot, c, inertias = euclid.kmeans(x, 2, restarts=10, seed=seed, return_inertias=True)
    assert np.isclose(min(inertias), best, rtol=1e-12)
    labels = onehot.argmax(1)
    cost = sum(np.sum((x[labels == j] - c[j]) ** 2) for j in range(2))
    assert np.isclose(cost, best, rtol=1e-12)


def test_kmeans_contract(rng):
    x = rng.normal(size=(30, 3))
    onehot, c = euclid.kmeans(x, 4, seed=3)
    assert onehot.shape == (30, 4) and c.shape == (4, 3)
    np.testing.assert_array_equal(onehot.sum(1), 1.0)
    assert np.all(onehot.sum(0) >= 1)
    again = euclid.kmeans(x, 4, seed=3)
    np.testing.assert_array_equal(onehot, again[0])
    np.testing.assert_array_equal(c, again[1])
    for k in (0, 31):
        with pytest.raises(InvalidInput):
            euclid.kmeans(x, k)
    with pytest.raises(ShapeMismatch):
        euclid.kmeans(x[0], 2)


def test_kmeans_duplicate_points_reseeds_empty():
    x = np.array([[0.0, 0.0]] * 5 + [[1.0, 0.0]])
    onehot, _ = euclid.kmeans(x, 3, restarts=2)
    # only two distinct locations; no cluster ends up empty
    assert np.all(onehot.sum(0) >= 1)


def test_semi_nmf_rank_one_oracle():
    rng = np.random.default_rng(5)
    m = rng.uniform(0.5, 2.0, size=(20, 6))
    s = np.linalg.svd(m, compute_uv=False)
    optimum = np.sum(m ** 2) - s[0] ** 2
    res = euclid.semi_nmf(m, 1, iters=200)
    assert np.isclose(res.objective_trace[-1], optimum, rtol=1e-8)


def test_semi_nmf_monotone_and_nonnegative(rng):
    m = rng.normal(size=(40, 8))
    res = euclid.semi_nmf(m, 4, iters=60, sub_iters=3)
    assert np.all(res.H >= 0)
    tr = np.array(res.objective_trace)
    assert len(tr) == 60
    assert np.all(np.diff(tr) <= 1e-10 * tr[:-1])
    np.testing.assert_allclose(tr[-1], np.sum((m - res.H @ res.F) ** 2))


def test_semi_nmf_planted_factorization():
    rng = np.random.default_rng(11)
    h = rng.uniform(0, 1, size=(60, 3)) ** 3
    f = rng.normal(size=(3, 10))
    m = h @ f
    res = euclid.semi_nmf(m, 3, iters=500, sub_iters=2)
    assert res.objective_trace[-1] < 1e-4 * np.sum(m ** 2)


def test_semi_nmf_h0_and_validation(rng):
    m = rng.normal(size=(10, 5))
    h0 = euclid.semi_nmf_h0(m, 3)
    assert set(np.unique(h0)) == {0.2, 1.2}
    with pytest.raises(InvalidInput):
        euclid.semi_nmf(m, 6)
    with pytest.raises(ShapeMismatch):
        euclid.semi_nmf(m, 2, h0=np.ones((10, 3)))
    with pytest.raises(InvalidInput):
        euclid.semi_nmf(m, 2, h0=-np.ones((10, 2)))


def test_coordinate_matrix_matches_to_coords(rng):
    p = Power(SPD(2), 3)
    q = np.stack([rand_spd(rng, 2) for _ in range(3)])
    data = np.stack([np.stack([rand_spd(rng, 2) for _ in range(3)]) for _ in range(5)])
    cm = euclid.coordinate_matrix(p, data, q)
    assert cm.shape == (5, 9)
    for i in range(5):
        np.testing.assert_allclose(cm.values[i], p.to_coords(q, p.log(q, data[i])))
    np.testing.assert_array_equal(np.asarray(cm), cm.values)


def test_rotation_round_trip(rng):
    p = Power(SPD(2), 3)
    r, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    c = rng.normal(size=(7, 9))
    rc = euclid.rotate_coords(p, c, r)
    np.testing.assert_allclose(euclid.unrotate_coords(p, rc, r), c, atol=1e-14)
    # blockwise orthogonal mixing keeps row norms
    np.testing.assert_allclose(np.linalg.norm(rc, axis=1), np.linalg.norm(c, axis=1))
    assert euclid.block_rotation(p, r).shape == (3, 3, 3)
    with pytest.raises(ShapeMismatch):
        euclid.block_rotation(p, np.eye(4))
    x = c[:, :3]
    assert euclid.rotate_coords(Euclidean(3), x, None) is x
