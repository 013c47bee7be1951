"""Euclidean building blocks: tangent coordinates, K-means and semi-NMF."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DeadColumnWarning, InvalidInput, ShapeMismatch

#: additive floor in multiplicative update ratios
EPS = 1e-12
PINV_RCOND = 1e-12


@dataclass
class CoordMatrix:
    """Tangent coordinates of a dataset at a base point.

    Row ``i`` holds the coordinates of ``log_q x_i`` in the orthonormal basis
    of ``manifold`` at ``basepoint``, optionally re-mixed blockwise by
    ``rotation``.
    """

    values: np.ndarray
    basepoint: np.ndarray
    manifold: object
    rotation: np.ndarray = None

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def shape(self):
        return self.values.shape


def block_rotation(manifold, rotation):
    """Normalize a basis re-mixing to shape ``(n_blocks, b, b)``."""
    if rotation is None:
        return None
    r = np.asarray(rotation, dtype=float)
    m, b = manifold.n_blocks, manifold.block_dim
    if r.shape == (b, b):
        r = np.broadcast_to(r, (m, b, b))
    if r.shape != (m, b, b):
        raise ShapeMismatch(f"rotation must have shape ({b}, {b}) or ({m}, {b}, {b})")
    return r


def rotate_coords(manifold, coords, rotation):
    """Re-express basis coordinates in the basis ``phi'_j = sum_k R_jk phi_k``."""
    r = block_rotation(manifold, rotation)
    if r is None:
        return coords
    m, b = manifold.n_blocks, manifold.block_dim
    c = coords.reshape(coords.shape[:-1] + (m, b))
    return np.einsum("cjk,...ck->...cj", r, c).reshape(coords.shape)


def unrotate_coords(manifold, coords, rotation):
    r = block_rotation(manifold, rotation)
    if r is None:
        return coords
    m, b = manifold.n_blocks, manifold.block_dim
    c = coords.reshape(coords.shape[:-1] + (m, b))
    return np.einsum("ckj,...ck->...cj", r, c).reshape(coords.shape)


def coordinate_matrix(manifold, data, q, rotation=None):
    """Matrix ``M[i, j] = (log_q x_i, phi_j)_q`` for a stack of points."""
    data = np.asarray(data, dtype=float)
    manifold._check_shape(data, q)
    values = manifold.to_coords(q, manifold.log(q, data))
    values = rotate_coords(manifold, values, rotation)
    return CoordMatrix(values.reshape(len(data), manifold.dim), np.asarray(q), manifold, rotation)


def _sq_dists(x, c):
    return np.sum((x[:, None, :] - c[None, :, :]) ** 2, axis=-1)


def _plus_plus(x, k, rng):
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(free))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return x[chosen].copy()


def lloyd(x, centroids, max_iter=300):
    """Lloyd iterations from given centroids.

    Empty clusters are re-seeded with the point farthest from its centroid.
    Returns ``(labels, centroids, inertia)``.
    """
    x = np.asarray(x, dtype=float)
    c = np.array(centroids, dtype=float)
    k = len(c)
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dists(x, c)
        new = np.argmin(d2, axis=1)
        for j in range(k):
            if not np.any(new == j):
                resid = d2[np.arange(len(x)), new]
                counts = np.bincount(new, minlength=k)
                resid[counts[new] <= 1] = -1.0
                far = int(np.argmax(resid))
                new[far] = j
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        c = np.stack([x[labels == j].mean(axis=0) for j in range(k)])
    inertia = float(np.sum((x - c[labels]) ** 2))
    return labels, c, inertia


def kmeans(m, k, restarts=10, seed=0, return_inertias=False):
    """Best of several seeded Lloyd runs (k-means++ seeding).

    Returns
    -------
    assignments : ndarray, shape (N, k)
        One-hot cluster indicators.
    centroids : ndarray, shape (k, d)
    inertias : list of float
        Within-cluster sum of squares of every restart; only returned when
        ``return_inertias`` is set.
    """
    x = np.asarray(m, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch("kmeans expects an N x d matrix")
    n = len(x)
    if not 1 <= k <= n:
        raise InvalidInput(f"number of clusters {k} must be between 1 and N={n}")
    best = None
    inertias = []
    for r in range(max(1, restarts)):
        rng = np.random.default_rng([seed, r])
        labels, c, inertia = lloyd(x, _plus_plus(x, k, rng))
        inertias.append(inertia)
        if best is None or inertia < best[2]:
            best = (labels, c, inertia)
    labels, c, _ = best
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    if return_inertias:
        return onehot, c, inertias
    return onehot, c


def pos(a):
    return np.maximum(a, 0.0)


def neg(a):
    return -np.minimum(a, 0.0)


def multiplicative_step(h, num, den):
    """``h * sqrt((num + EPS) / (den + EPS))`` elementwise."""
    return h * np.sqrt((num + EPS) / (den + EPS))


@dataclass
class SemiNMFResult:
    H: np.ndarray
    F: np.ndarray
    objective_trace: list = field(default_factory=list)


def semi_nmf_h0(m, k, seed=0, restarts=10, offset=0.2):
    """Cluster indicators plus a constant offset."""
    onehot, _ = kmeans(m, k, restarts=restarts, seed=seed)
    return onehot + offset


def semi_nmf(m, k, iters=50, h0=None, seed=0, sub_iters=1, restarts=10):
    """Semi-nonnegative factorization ``M ~ H F`` with ``H >= 0``.

    Alternates the exact least-squares update of ``F`` with ``sub_iters``
    multiplicative updates of ``H``. The objective ``||M - HF||_F^2`` is
    recorded after every outer iteration.
    """
    x = np.asarray(m, dtype=float)
    n, d = x.shape
    if not 1 <= k <= min(n, d):
        raise InvalidInput(f"rank {k} must be between 1 and min(N, d)={min(n, d)}")
    if iters < 1:
        raise InvalidInput("iters must be at least 1")
    if h0 is None:
        h = semi_nmf_h0(x, k, seed=seed, restarts=restarts)
    else:
        h = np.array(h0, dtype=float)
        if h.shape != (n, k):
            raise ShapeMismatch(f"h0 must have shape ({n}, {k})")
        if np.any(h < 0):
            raise InvalidInput("h0 must be nonnegative")
    trace = []
    f = None
    for _ in range(iters):
        f = np.linalg.pinv(h.T @ h, rcond=PINV_RCOND, hermitian=True) @ (h.T @ x)
        gram = f @ f.T
        v = x @ f.T
        for _ in range(sub_iters):
            h = multiplicative_step(h, pos(v) + h @ neg(gram), neg(v) + h @ pos(gram))
        trace.append(float(np.sum((x - h @ f) ** 2)))
    if np.any(np.all(h < EPS, axis=0)):
        warnings.warn("semi-NMF produced an all-zero coefficient column", DeadColumnWarning)
    return SemiNMFResult(h, f, trace)
