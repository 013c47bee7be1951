import numpy as np
import pytest

from ccnmdf import evaluation as ev
from ccnmdf import nmdf
from ccnmdf import synthetic as syn
from ccnmdf.errors import InvalidInput
from ccnmdf.manifolds import SPD, Euclidean, Power


@pytest.fixture
def small():
    rng = np.random.default_rng(3)
    m = Power(SPD(3), 2)
    q = m.near_zero(1.0)
    data = syn.ball_data(rng, m, q, 15, radius=1.0)
    return m, q, data


def test_errors_match_definitions(small):
    m, q, data = small
    fac = nmdf.cc_nmdf(m, data, q, 3, max_iter=5)
    recon = m.exp(q, fac.tangent_reconstruction())
    assert np.isclose(ev.exact_error(data, fac), np.sqrt(np.sum(m.dist(data, recon) ** 2)))
    logs = m.to_coords(q, m.log(q, data))
    assert np.isclose(ev.tangent_error(data, fac), np.linalg.norm(logs - fac.H @ fac.F))
    assert np.isclose(ev.cc_error(data, fac) ** 2, fac.objective_trace[-1])


def test_exact_reconstruction_has_zero_error():
    rng = np.random.default_rng(0)
    m = SPD(3)
    q = syn.random_point(rng, m)
    h, f = rng.uniform(size=(6, 2)), rng.normal(size=(2, 6)) * 0.3
    data = m.exp(q, m.from_coords(q, h @ f))
    fac = nmdf.Factorization(m, q, h, f, "cc-nmdf")
    assert ev.exact_error(data, fac) < 1e-7
    assert ev.tangent_error(data, fac) < 1e-10
    assert ev.cc_error(data, fac) < 1e-10


def test_flat_errors_coincide(rng):
    data = rng.normal(size=(12, 5))
    fac = nmdf.t_nmdf(Euclidean(5), data, np.zeros(5), 2)
    e = ev.report(data, fac)
    assert np.isclose(e.exact, e.tangent) and np.isclose(e.exact, e.curvature_corrected)


def test_rank_grids():
    assert ev.default_ranks() == [2, 5, 8, 11, 14, 17, 20, 23, 26, 29, 32, 35]
    assert ev.parse_ranks("2:35:12") == ev.default_ranks()
    assert ev.parse_ranks("2,5, 8") == [2, 5, 8]
    for bad in ("a:b:c", "1:2", ""):
        with pytest.raises(InvalidInput):
            ev.parse_ranks(bad)


def test_rank_sweep_records_failures(small):
    m, q, data = small
    reps = ev.rank_sweep(m, data, q, [2, 3, 40], method="cc-nmdf", max_iter=5)
    assert [r.rank for r in reps] == [2, 3, 40]
    assert reps[0].failure is None and reps[0].exact >= reps[1].exact * 0.5
    assert np.isnan(reps[2].exact) and "rank" in reps[2].failure
    t = ev.rank_sweep(m, data, q, [2], method="t-nmdf", iters=5)
    assert t[0].failure is None
    with pytest.raises(InvalidInput):
        ev.run_method(m, data, q, 2, "pca")


def test_scan_orders_of_magnitude(small):
    m, q, data = small
    fac = nmdf.cc_nmdf(m, data, q, 2, max_iter=10)
    scan = ev.consistency_scan(m, data, q, fac)
    assert scan.rows.shape == (5, 6)
    np.testing.assert_allclose(scan.rows[:, 0], [1, 0.5, 0.25, 0.125, 0.0625])
    # tangent residual scales linearly with the shrink factor
    np.testing.assert_allclose(scan.rows[:, 3] / scan.rows[0, 3], scan.rows[:, 0], rtol=1e-10)
    assert scan.cc_slope >= 2.7
    assert scan.cc_slope > scan.tangent_slope
    assert np.all(scan.rows[:, 4] <= scan.rows[:, 5])
    with pytest.raises(InvalidInput):
        ev.consistency_scan(m, data, q, fac, scales=(0.5, 1.0))
    with pytest.raises(InvalidInput):
        ev.consistency_scan(m, data, q, fac, scales=(1.0, 0.0))


def test_loglog_slope():
    x = np.array([1.0, 0.5, 0.25])
    assert np.isclose(ev._loglog_slope(x, 3 * x ** 3), 3.0)
    assert np.isnan(ev._loglog_slope(x, np.zeros(3)))
