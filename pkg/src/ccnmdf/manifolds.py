"""Geometry of Euclidean space, SPD matrices and their power manifolds.

Points and tangent vectors are plain numpy arrays. A manifold object knows
the shape of one point (``manifold.shape``) and every method broadcasts over
extra leading axes, so a dataset of N points is an array of shape
``(N, *manifold.shape)``.

Tangent coordinates are taken in the orthonormal basis returned by
:meth:`Manifold.orthonormal_basis`. For power manifolds the coordinate index
runs component-major: index ``c * b + j`` is basis element ``j`` of component
``c`` where ``b`` is the base dimension.
"""

from dataclasses import dataclass

import numpy as np

from . import symlinalg as sl
from .errors import InvalidInput, NotPositiveDefinite, ShapeMismatch

BETA_SERIES_CUTOFF = 1e-8


def beta(kappa):
    """Curvature weight: sinh(sqrt(-k))/sqrt(-k), 1 or sin(sqrt(k))/sqrt(k).

    Works elementwise on arrays; a short series is used near zero.
    """
    k = np.asarray(kappa, dtype=float)
    out = np.empty_like(k)
    small = np.abs(k) < BETA_SERIES_CUTOFF
    neg = (k < 0) & ~small
    pos = (k > 0) & ~small
    out[small] = 1.0 - k[small] / 6.0 + k[small] ** 2 / 120.0
    r = np.sqrt(-k[neg])
    out[neg] = np.sinh(r) / r
    r = np.sqrt(k[pos])
    out[pos] = np.sin(r) / r
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CurvatureFrame:
    """Orthonormal frame diagonalizing ``t -> R(t, v) v`` at a base point.

    ``vectors`` has shape ``(d, *shape)``; ``kappas`` and ``beta_sq`` have
    shape ``(d,)``.
    """

    at: np.ndarray
    vectors: np.ndarray
    kappas: np.ndarray
    beta_sq: np.ndarray


class Manifold:
    """Common interface. Subclasses fill in the geometry."""

    shape = ()
    dim = 0
    n_blocks = 1
    block_dim = 0

    def _check_shape(self, *arrays):
        k = len(self.shape)
        for a in arrays:
            if np.ndim(a) < k or np.shape(a)[np.ndim(a) - k:] != self.shape:
                raise ShapeMismatch(
                    f"expected trailing shape {self.shape}, got {np.shape(a)}"
                )

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        self._check_shape(x)
        if not np.all(np.isfinite(x)):
            raise InvalidInput("point has non-finite entries")
        return x

    def norm(self, q, v):
        return np.sqrt(np.maximum(self.inner(q, v, v), 0.0))

    def orthonormal_basis(self, q):
        """Basis of the tangent space at ``q``, shape ``(dim, *shape)``."""
        return self.from_coords(q, np.eye(self.dim))

    def curvature_frame(self, q, v):
        vectors, kappas = self._frame(q, v)
        return CurvatureFrame(q, vectors, kappas, beta(kappas) ** 2)

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class Euclidean(Manifold):
    def __init__(self, d):
        if int(d) < 1:
            raise InvalidInput("dimension must be positive")
        self.d = int(d)
        self.shape = (self.d,)
        self.dim = self.block_dim = self.d

    def to_dict(self):
        return {"kind": "euclidean", "d": self.d}

    def exp(self, q, v):
        self._check_shape(q, v)
        return np.asarray(q, dtype=float) + v

    def log(self, q, x):
        self._check_shape(q, x)
        return np.asarray(x, dtype=float) - q

    def inner(self, q, u, v):
        self._check_shape(u, v)
        return np.sum(np.asarray(u) * v, axis=-1)

    def dist(self, x, y):
        self._check_shape(x, y)
        return np.linalg.norm(np.asarray(y, dtype=float) - x, axis=-1)

    def to_coords(self, q, v):
        self._check_shape(v)
        return np.array(v, dtype=float)

    def from_coords(self, q, c):
        return np.array(c, dtype=float)

    def near_zero(self, eps=1e-5):
        return np.zeros(self.shape)

    def frame_blocks(self, q, v):
        v = np.asarray(v, dtype=float)
        lead = v.shape[:-1]
        kappas = np.zeros(lead + (1, self.d))
        overlap = np.broadcast_to(np.eye(self.d), lead + (1, self.d, self.d)).copy()
        return kappas, overlap, v[..., None, :].copy()

    def _frame(self, q, v):
        return np.eye(self.d), np.zeros(self.d)

    def curvature_operator(self, q, theta, v):
        return np.zeros_like(np.asarray(theta, dtype=float))


class SPD(Manifold):
    """Symmetric positive definite matrices with the affine-invariant metric."""

    def __init__(self, n):
        if int(n) < 1:
            raise InvalidInput("matrix order must be positive")
        self.n = int(n)
        self.shape = (self.n, self.n)
        self.dim = self.block_dim = self.n * (self.n + 1) // 2
        self._basis = sl.sym_basis(self.n)
        rows, cols = sl._coord_index(self.n)
        self._pair_rows, self._pair_cols = rows, cols

    def to_dict(self):
        return {"kind": "spd", "n": self.n}

    def check_point(self, x):
        x = super().check_point(x)
        x = sl.symmetrize(x)
        if not np.all(sl.is_pd(x)):
            raise NotPositiveDefinite("point is not positive definite")
        return x

    def exp(self, q, v):
        self._check_shape(q, v)
        s = sl.matfun_spd(q, "sqrt")
        si = sl.matfun_spd(q, "inv_sqrt")
        return sl.symmetrize(s @ sl.matfun_spd(si @ v @ si, "exp") @ s)

    def log(self, q, x):
        self._check_shape(q, x)
        s = sl.matfun_spd(q, "sqrt")
        si = sl.matfun_spd(q, "inv_sqrt")
        return sl.symmetrize(s @ sl.matfun_spd(si @ x @ si, "log") @ s)

    def inner(self, q, u, v):
        self._check_shape(q, u, v)
        si = sl.matfun_spd(q, "inv_sqrt")
        a = si @ u @ si
        b = si @ v @ si
        return np.sum(a * b, axis=(-1, -2))

    def dist(self, x, y):
        self._check_shape(x, y)
        xi = sl.matfun_spd(x, "inv_sqrt")
        w = np.linalg.eigvalsh(sl.symmetrize(xi @ y @ xi))
        if np.any(w <= 0):
            raise NotPositiveDefinite("distance to a non-positive-definite matrix")
        return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))

    def to_coords(self, q, v):
        self._check_shape(q, v)
        si = sl.matfun_spd(q, "inv_sqrt")
        return sl.sym_coords(si @ v @ si)

    def from_coords(self, q, c):
        s = sl.matfun_spd(q, "sqrt")
        return sl.symmetrize(s @ sl.sym_from_coords(c) @ s)

    def near_zero(self, eps=1e-5):
        return eps * np.eye(self.n)

    def _whiten(self, q, v):
        si = sl.matfun_spd(q, "inv_sqrt")
        return sl.symmetrize(si @ v @ si)

    def _eigen_kappas(self, theta):
        r, c = self._pair_rows, self._pair_cols
        return -0.25 * (theta[..., r] - theta[..., c]) ** 2

    def frame_blocks(self, q, v):
        """Curvature frame of every ``v`` expressed against the basis at ``q``.

        Returns ``kappas`` of shape ``(..., 1, d)``, ``overlap`` of shape
        ``(..., 1, d, d)`` with ``overlap[..., 0, j, l] = (phi_j, Theta_l)_q``
        and the frame coordinates of ``v`` itself, shape ``(..., 1, d)``.
        """
        self._check_shape(q, v)
        theta, u = sl.eig_sym(self._whiten(q, v))
        # rotated basis U E_l U^T, one per frame index l
        rot = u[..., None, :, :] @ self._basis @ np.swapaxes(u, -1, -2)[..., None, :, :]
        overlap = np.swapaxes(sl.sym_coords(rot), -1, -2)
        kappas = self._eigen_kappas(theta)
        coords = np.where(self._pair_rows == self._pair_cols, theta[..., self._pair_rows], 0.0)
        return kappas[..., None, :], overlap[..., None, :, :], coords[..., None, :]

    def _frame(self, q, v):
        theta, u = sl.eig_sym(self._whiten(q, v))
        s = sl.matfun_spd(q, "sqrt")
        vectors = sl.symmetrize(s @ (u @ self._basis @ u.T) @ s)
        return vectors, self._eigen_kappas(theta)

    def curvature_operator(self, q, theta, v):
        """``R_q(theta, v) v`` via the commutator formula at the identity."""
        s = sl.matfun_spd(q, "sqrt")
        x = self._whiten(q, theta)
        w = self._whiten(q, v)
        c = x @ w - w @ x
        return sl.symmetrize(s @ (-0.25 * (c @ w - w @ c)) @ s)


class Power(Manifold):
    """Product of ``m`` copies of a Euclidean or SPD base manifold."""

    def __init__(self, base, m):
        if isinstance(base, Power):
            raise InvalidInput("nested power manifolds are not supported")
        if int(m) < 1:
            raise InvalidInput("power must be positive")
        self.base = base
        self.m = int(m)
        self.shape = (self.m,) + base.shape
        self.dim = self.m * base.dim
        self.n_blocks = self.m
        self.block_dim = base.dim

    def to_dict(self):
        return {"kind": "power", "m": self.m, "base": self.base.to_dict()}

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        self._check_shape(x)
        return self.base.check_point(x)

    def exp(self, q, v):
        self._check_shape(q, v)
        return self.base.exp(q, v)

    def log(self, q, x):
        self._check_shape(q, x)
        return self.base.log(q, x)

    def inner(self, q, u, v):
        self._check_shape(q, u, v)
        return np.sum(self.base.inner(q, u, v), axis=-1)

    def dist(self, x, y):
        self._check_shape(x, y)
        return np.sqrt(np.sum(self.base.dist(x, y) ** 2, axis=-1))

    def to_coords(self, q, v):
        self._check_shape(q, v)
        c = self.base.to_coords(q, v)
        return c.reshape(c.shape[:-2] + (self.dim,))

    def from_coords(self, q, c):
        c = np.asarray(c, dtype=float)
        c = c.reshape(c.shape[:-1] + (self.m, self.base.dim))
        return self.base.from_coords(q, c)

    def near_zero(self, eps=1e-5):
        return np.broadcast_to(self.base.near_zero(eps), self.shape).copy()

    def frame_blocks(self, q, v):
        self._check_shape(q, v)
        kappas, overlap, coords = self.base.frame_blocks(q, v)
        return kappas[..., 0, :], overlap[..., 0, :, :], coords[..., 0, :]

    def _frame(self, q, v):
        b = self.base.dim
        vectors = np.zeros((self.dim,) + self.shape)
        kappas = np.zeros(self.dim)
        for c in range(self.m):
            vec, kap = self.base._frame(q[c], v[c])
            vectors[c * b:(c + 1) * b, c] = vec
            kappas[c * b:(c + 1) * b] = kap
        return vectors, kappas

    def curvature_operator(self, q, theta, v):
        return self.base.curvature_operator(q, theta, v)


def from_dict(desc):
    """Rebuild a manifold from its ``to_dict`` description."""
    try:
        kind = desc["kind"]
        if kind == "euclidean":
            return Euclidean(desc["d"])
        if kind == "spd":
            return SPD(desc["n"])
        if kind == "power":
            return Power(from_dict(desc["base"]), desc["m"])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed manifold descriptor: {desc!r}") from exc
    raise InvalidInput(f"unknown manifold kind {kind!r}")


def barycenter(manifold, data, tol=1e-9, max_iter=100):
    """Karcher mean by fixed-point iteration started at the first point.

    Returns
    -------
    q : ndarray
        The final iterate.
    converged : bool
        Whether the norm of the mean log fell below ``tol``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == len(manifold.shape) or len(data) == 0:
        raise InvalidInput("barycenter needs a nonempty stack of points")
    q = data[0].copy()
    for _ in range(max_iter):
        step = np.mean(manifold.log(q, data), axis=0)
        if manifold.norm(q, step) <= tol:
            return q, True
        q = manifold.exp(q, step)
    step = np.mean(manifold.log(q, data), axis=0)
    return q, bool(manifold.norm(q, step) <= tol)
