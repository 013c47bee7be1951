"""Shared fixtures and independent oracles.

The oracles deliberately avoid the library's own kernels: matrix functions
come from scipy, curvature from the commutator formula and gradients from
central differences.
"""

import itertools

import numpy as np
import pytest
import scipy.linalg as sla

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rand_spd(rng, n, cond=10.0):
    a = rng.normal(size=(n, n))
    qm, _ = np.linalg.qr(a)
    w = np.exp(rng.uniform(0, np.log(cond), n))
    return (qm * w) @ qm.T


def rand_sym(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) * scale
    return (a + a.T) / 2


def oracle_sqrtm(q):
    return np.real(sla.sqrtm(q))


def oracle_exp(q, v):
    s = oracle_sqrtm(q)
    si = np.linalg.inv(s)
    return s @ sla.expm(si @ v @ si) @ s


def oracle_log(q, x):
    s = oracle_sqrtm(q)
    si = np.linalg.inv(s)
    return s @ np.real(sla.logm(si @ x @ si)) @ s


def oracle_dist(x, y):
    # generalized eigenvalues of (y, x) are those of x^{-1/2} y x^{-1/2}
    lam = sla.eigh(y, x, eigvals_only=True)
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def oracle_inner(q, u, v):
    qi = np.linalg.inv(q)
    return float(np.trace(qi @ u @ qi @ v))


def oracle_curvature(q, x, v):
    """``R_q(x, v) v`` on SPD with the affine-invariant metric."""
    s = oracle_sqrtm(q)
    si = np.linalg.inv(s)
    xw, vw = si @ x @ si, si @ v @ si
    inner = xw @ vw - vw @ xw
    return s @ (-0.25 * (inner @ vw - vw @ inner)) @ s


def fd_gradient(fun, x, step=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = step
        g[idx] = (fun(x + e) - fun(x - e)) / (2 * step)
    return g


def brute_force_kmeans(x, k):
    """Smallest within-cluster sum of squares over all partitions into k groups."""
    n = len(x)
    best = np.inf
    for labels in itertools.product(range(k), repeat=n - 1):
        labels = (0,) + labels
        if len(set(labels)) != k:
            continue
        lab = np.array(labels)
        cost = sum(np.sum((x[lab == c] - x[lab == c].mean(0)) ** 2) for c in range(k))
        best = min(best, cost)
    return best


def cc_objective_oracle(manifold, data, q, h, f):
    """Curvature corrected error from full frames and generic inner products."""
    xi = manifold.from_coords(q, f)
    total = 0.0
    for i, x in enumerate(data):
        v = manifold.log(q, x)
        frame = manifold.curvature_frame(q, v)
        recon = np.tensordot(h[i], xi, axes=1)
        for theta, bsq in zip(frame.vectors, frame.beta_sq):
            total += bsq * float(manifold.inner(q, recon - v, theta)) ** 2
    return total
