"""Nonnegative factorization of manifold-valued data.

Two algorithms share the same output type:

* :func:`t_nmdf` linearizes the data at a base point and runs semi-NMF on
  the tangent coordinates.
* :func:`cc_nmdf` minimizes the curvature corrected error, in which the
  residual of every data point is measured in the eigenframe of the
  curvature operator along its log-map and weighted by ``beta(kappa)**2``.

Curvature frames of SPD and power manifolds are block diagonal: frame
vectors of one power component only overlap with basis vectors of the same
component. The workspace keeps that block structure, so the factor update
splits into ``n_blocks`` independent linear systems of size ``K * b``.
"""

import logging
import time
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import euclid
from .errors import (
    DegenerateFactor,
    DegenerateFactorWarning,
    InvalidInput,
    ShapeMismatch,
    SolverFailure,
)
from .manifolds import beta

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096
DEGENERATE_NORM = 1e-12


@dataclass
class CCWorkspace:
    """Per-data-point curvature frames, stored blockwise.

    Attributes
    ----------
    velocities : ndarray, shape (N, *shape)
        ``log_q x_i``.
    kappas, beta_sq : ndarray, shape (N, m, b)
        Curvature eigenvalues and their weights ``beta(kappa)**2``.
    overlap : ndarray, shape (N, m, b, b)
        ``overlap[i, c, j, l] = (phi_{c,j}, Theta^{(i)}_{c,l})_q``.
    block_coords : ndarray, shape (N, m, b)
        Frame coordinates of the data, ``(log_q x_i, Theta^{(i)}_{c,l})_q``.
    """

    manifold: object
    q: np.ndarray
    velocities: np.ndarray
    kappas: np.ndarray
    beta_sq: np.ndarray
    overlap: np.ndarray
    block_coords: np.ndarray
    rotation: np.ndarray = None

    @property
    def n_points(self):
        return self.overlap.shape[0]

    @property
    def dim(self):
        return self.manifold.dim

    @property
    def data_coords(self):
        """Frame coordinates of the data as an ``(N, d)`` matrix."""
        return self.block_coords.reshape(self.n_points, self.dim)

    @property
    def basis_frame_overlap(self):
        """Dense ``(N, d, d)`` overlap; block diagonal for power manifolds."""
        n, m, b = self.block_coords.shape
        out = np.zeros((n, m * b, m * b))
        for c in range(m):
            out[:, c * b:(c + 1) * b, c * b:(c + 1) * b] = self.overlap[:, c]
        return out

    def frame(self, i):
        """Full :class:`CurvatureFrame` of data point ``i``."""
        return self.manifold.curvature_frame(self.q, self.velocities[i])

    @cached_property
    def weighted_gram(self):
        # O diag(beta^2) O^T, one b x b matrix per point and block
        return np.einsum("icjl,icl,ickl->icjk", self.overlap, self.beta_sq, self.overlap)

    @cached_property
    def weighted_data(self):
        return np.einsum("icjl,icl->icj", self.overlap, self.beta_sq * self.block_coords)


def build_workspace(manifold, data, q, rotation=None):
    data = np.asarray(data, dtype=float)
    manifold._check_shape(data, q)
    velocities = manifold.log(q, data)
    kappas, overlap, coords = manifold.frame_blocks(q, velocities)
    r = euclid.block_rotation(manifold, rotation)
    if r is not None:
        overlap = np.einsum("cjk,ickl->icjl", r, overlap)
    return CCWorkspace(
        manifold, np.asarray(q, dtype=float), velocities, kappas,
        beta(kappas) ** 2, overlap, coords, rotation,
    )


def _check_hf(h, f, w):
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != w.n_points:
        raise ShapeMismatch(f"H must have {w.n_points} rows, got shape {h.shape}")
    if f is not None:
        f = np.asarray(f, dtype=float)
        if f.shape != (h.shape[1], w.dim):
            raise ShapeMismatch(f"F must have shape ({h.shape[1]}, {w.dim}), got {f.shape}")
    return h, f


def _blocks(x, w):
    n, m, b = w.block_coords.shape
    return x.reshape(x.shape[:-1] + (m, b))


def frame_residual(h, f, w):
    """Residual ``sum_k H_ik Xi_k - log_q x_i`` in the frame of point i."""
    p = _blocks(h @ f, w)
    return np.einsum("icj,icjl->icl", p, w.overlap) - w.block_coords


def cc_objective(h, f, w):
    """Curvature corrected squared error of the factorization ``(H, F)``."""
    h, f = _check_hf(h, f, w)
    r = frame_residual(h, f, w)
    return float(np.sum(w.beta_sq * r * r))


def _factor_rhs(h, w):
    return np.einsum("ik,icj->kcj", h, w.weighted_data)


def _default_reg(h, w):
    k, d = h.shape[1], w.dim
    trace = np.sum(np.sum(h * h, axis=1) * np.einsum("icjj->i", w.weighted_gram))
    return 1e-10 * trace / (k * d)


def factor_system(h, w, reg=0.0):
    """Dense normal equations, one ``(K b, K b)`` system per block.

    Returns ``(a, rhs)`` with shapes ``(m, K b, K b)`` and ``(m, K b)``; the
    unknown vector of block ``c`` is ``F[:, c*b:(c+1)*b]`` flattened row-major.
    """
    k = h.shape[1]
    n, m, b = w.block_coords.shape
    a = np.einsum("ip,ik,icjl->cpjkl", h, h, w.weighted_gram, optimize=True)
    a = a.reshape(m, k * b, k * b) + reg * np.eye(k * b)
    rhs = _factor_rhs(h, w).transpose(1, 0, 2).reshape(m, k * b)
    return a, rhs


def apply_factor_operator(h, f_blocks, w, reg=0.0):
    """Matrix-free product of the normal-equation operator with ``F``.

    ``f_blocks`` has shape ``(K, m, b)``.
    """
    p = np.einsum("ik,kcj->icj", h, f_blocks)
    q = np.einsum("icjl,icl->icj", w.weighted_gram, p)
    return np.einsum("ik,icj->kcj", h, q) + reg * f_blocks


def conjugate_gradient(apply, rhs, x0=None, tol=1e-10, max_iter=None):
    """Conjugate gradients for a symmetric positive semidefinite operator.

    Stops once the residual norm drops below ``tol * ||rhs||``. Raises
    :class:`SolverFailure` when the residual did not shrink by at least a
    factor 100 within ``max_iter`` steps.
    """
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
    max_iter = 10 * rhs.size if max_iter is None else max_iter
    r = rhs - apply(x)
    p = r.copy()
    rr = float(np.sum(r * r))
    r0 = np.sqrt(rr)
    target = tol * max(float(np.linalg.norm(rhs)), np.finfo(float).tiny)
    it = 0
    while np.sqrt(rr) > target and it < max_iter:
        ap = apply(p)
        pap = float(np.sum(p * ap))
        if pap <= 0:
            break
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.sum(r * r))
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    res = np.sqrt(rr)
    if res > target and r0 > 0 and res > 1e-2 * r0:
        raise SolverFailure(f"conjugate gradients stalled: residual {res:.3e} after {it} steps")
    log.debug("cg finished in %d steps, residual %.3e", it, res)
    return x


def update_factors(h, w, reg=None, solver="auto", cg_tol=1e-10, max_cg_iter=None, f0=None):
    """Least-squares update of the tangent factor coordinates for fixed H.

    Solves the normal equations of the curvature corrected error in ``F``,
    with a small Tikhonov term ``reg`` (default ``1e-10 * trace(A) / (K d)``).
    ``solver`` is ``"dense"``, ``"cg"`` or ``"auto"``; auto factors each
    block directly when it has at most 4096 unknowns and runs matrix-free
    conjugate gradients otherwise.
    """
    h, _ = _check_hf(h, None, w)
    if np.any(h < 0):
        raise InvalidInput("H must be nonnegative")
    k = h.shape[1]
    n, m, b = w.block_coords.shape
    if reg is None:
        reg = _default_reg(h, w)
    if solver == "auto":
        solver = "dense" if k * b <= DENSE_LIMIT else "cg"
    if solver == "dense":
        a, rhs = factor_system(h, w, reg)
        sol = np.linalg.solve(a, rhs[..., None])[..., 0]
        # one refinement step against the unregularized system removes the
        # O(reg) bias while keeping the floor for rank-deficient H
        resid = rhs - np.einsum("cab,cb->ca", a, sol) + reg * sol
        sol += np.linalg.solve(a, resid[..., None])[..., 0]
        return sol.reshape(m, k, b).transpose(1, 0, 2).reshape(k, m * b)
    if solver == "cg":
        rhs = _factor_rhs(h, w)
        x0 = None if f0 is None else _blocks(np.asarray(f0, dtype=float), w)
        sol = conjugate_gradient(
            lambda x: apply_factor_operator(h, x, w, reg), rhs, x0=x0,
            tol=cg_tol, max_iter=max_cg_iter if max_cg_iter else 10 * k * w.dim,
        )
        return sol.reshape(k, m * b)
    raise InvalidInput(f"unknown solver {solver!r}")


def coefficient_terms(f, w):
    """Per-row Gram matrices and data terms for the coefficient update.

    Returns ``gram`` of shape ``(N, K, K)`` with
    ``gram[i, p, k] = sum_l beta_il^2 (Xi_p, Theta_il)(Xi_k, Theta_il)`` and
    ``v`` of shape ``(N, K)`` with
    ``v[i, k] = sum_l beta_il^2 (log_q x_i, Theta_il)(Xi_k, Theta_il)``.
    The gradient of the objective in ``H[i, k]`` is
    ``2 * (H[i] @ gram[i] - v[i])[k]``.
    """
    x = np.einsum("kcj,icjl->ikcl", _blocks(np.asarray(f, dtype=float), w), w.overlap)
    xb = x * w.beta_sq[:, None]
    gram = np.einsum("ipcl,ikcl->ipk", xb, x)
    v = np.einsum("ikcl,icl->ik", xb, w.block_coords)
    return gram, v


def _coefficient_step(h, gram, v):
    up = np.einsum("ip,ipk->ik", h, euclid.pos(gram))
    un = np.einsum("ip,ipk->ik", h, euclid.neg(gram))
    return euclid.multiplicative_step(h, euclid.pos(v) + un, euclid.neg(v) + up)


def update_coefficients(h, f, w):
    """One multiplicative update of the nonnegative coefficients.

    Each row is updated with its own curvature weighted Gram matrix ``G_i``,
    split into positive and negative parts before multiplying by ``H``::

        H_ik <- H_ik * sqrt((v_ik^+ + (H_i G_i^-)_k) / (v_ik^- + (H_i G_i^+)_k))

    The update keeps ``H`` nonnegative, leaves KKT points fixed and does not
    increase the objective for fixed ``F``.
    """
    h, f = _check_hf(h, f, w)
    gram, v = coefficient_terms(f, w)
    return _coefficient_step(h, gram, v)


def init_cc(manifold, data, q, k, delta=0.1, seed=0, restarts=10, rotation=None):
    """Relaxed tangent-space K-means start for :func:`cc_nmdf`.

    Zero entries of the cluster indicator matrix become ``delta`` and the
    rows are normalized to sum to one. Returns ``(h0, f0)`` where ``f0``
    holds the centroid coordinates.
    """
    if not (np.isfinite(delta) and delta > 0):
        raise InvalidInput(f"delta must be positive, got {delta}")
    m = euclid.coordinate_matrix(manifold, data, q, rotation)
    onehot, centroids = euclid.kmeans(m, k, restarts=restarts, seed=seed)
    h0 = np.where(onehot == 0, delta, onehot)
    h0 = h0 / h0.sum(axis=1, keepdims=True)
    return h0, centroids


@dataclass
class Factorization:
    """Result of :func:`t_nmdf` or :func:`cc_nmdf`.

    ``xi`` holds the tangent factors (shape ``(K, *shape)``), ``H_eff`` the
    cancellation corrected coefficients and ``Y`` the manifold-valued
    factors. ``initial_objective`` is the objective at the starting point
    (``None`` for T-NMDF).
    """

    manifold: object
    q: np.ndarray
    H: np.ndarray
    F: np.ndarray
    method: str
    objective_trace: list = field(default_factory=list)
    initial_objective: float = None
    seed: int = 0
    params: dict = field(default_factory=dict)
    rotation: np.ndarray = None
    xi: np.ndarray = field(init=False, repr=False)
    H_eff: np.ndarray = field(init=False, repr=False)
    Y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        self.xi = tangent_factors(self.manifold, self.F, self.q, self.rotation)
        self.H_eff = _effective_coordinates(self.manifold, self.H, self.xi, self.q, strict=False)
        self.Y = manifold_factors(self.manifold, self.H_eff, self.xi, self.q)

    @property
    def rank(self):
        return self.H.shape[1]

    def tangent_reconstruction(self):
        """``sum_k H_ik Xi_k`` for every data point."""
        coords = euclid.unrotate_coords(self.manifold, self.H @ self.F, self.rotation)
        return self.manifold.from_coords(self.q, coords)


def tangent_factors(manifold, f, q, rotation=None):
    coords = euclid.unrotate_coords(manifold, np.asarray(f, dtype=float), rotation)
    return manifold.from_coords(q, coords)


def t_nmdf(manifold, data, q, k, iters=50, seed=0, restarts=10, rotation=None, h0=None):
    """Tangent space factorization: semi-NMF of the log-map coordinates."""
    t0 = time.perf_counter()
    m = euclid.coordinate_matrix(manifold, data, q, rotation)
    res = euclid.semi_nmf(m, k, iters=iters, h0=h0, seed=seed, restarts=restarts)
    log.info("t-nmdf rank %d finished in %.2fs", k, time.perf_counter() - t0)
    return Factorization(
        manifold, np.asarray(q, dtype=float), res.H, res.F, "t-nmdf",
        objective_trace=res.objective_trace, seed=seed,
        params={"iters": iters, "restarts": restarts}, rotation=rotation,
    )


def cc_nmdf(
    manifold, data, q, k, delta=0.1, max_iter=50, max_sub_iter=5, seed=0,
    restarts=10, rotation=None, solver="auto", h0=None, workspace=None,
):
    """Curvature corrected factorization by alternating updates.

    Every outer iteration solves for ``F`` exactly and then applies
    ``max_sub_iter`` multiplicative updates to ``H``. The curvature
    corrected objective is recorded after each outer iteration.
    """
    t0 = time.perf_counter()
    data = np.asarray(data, dtype=float)
    n = len(data)
    if not 1 <= k <= min(n, manifold.dim):
        raise InvalidInput(f"rank {k} must be between 1 and min(N, d)={min(n, manifold.dim)}")
    w = workspace if workspace is not None else build_workspace(manifold, data, q, rotation)
    if h0 is None:
        h, f = init_cc(manifold, data, q, k, delta=delta, seed=seed, restarts=restarts,
                       rotation=rotation)
        initial = cc_objective(h, f, w)
    else:
        h = np.array(h0, dtype=float)
        f, initial = None, None
    # objective at H = 0; sets the floor below which changes are round-off
    floor = 1e-14 * float(np.sum(w.beta_sq * w.block_coords ** 2))
    trace = []
    for it in range(max_iter):
        f = update_factors(h, w, solver=solver, f0=f)
        gram, v = coefficient_terms(f, w)
        for _ in range(max_sub_iter):
            h = _coefficient_step(h, gram, v)
        trace.append(cc_objective(h, f, w))
        if it > 0 and trace[-1] > trace[-2] * (1 + 1e-6) + floor:
            log.warning("cc-nmdf objective increased at iteration %d: %.6g -> %.6g",
                        it, trace[-2], trace[-1])
    log.info("cc-nmdf rank %d finished in %.2fs", k, time.perf_counter() - t0)
    return Factorization(
        manifold, np.asarray(q, dtype=float), h, f, "cc-nmdf",
        objective_trace=trace, initial_objective=initial, seed=seed,
        params={"delta": delta, "max_iter": max_iter, "max_sub_iter": max_sub_iter,
                "restarts": restarts, "solver": solver},
        rotation=rotation,
    )


def _effective_coordinates(manifold, h, xi, q, strict):
    h = np.asarray(h, dtype=float)
    xi = np.asarray(xi, dtype=float)
    k = h.shape[1]
    if len(xi) != k:
        raise ShapeMismatch(f"{k} coefficient columns but {len(xi)} factors")
    gram = manifold.inner(q, xi[:, None], xi[None, :])
    norm_sq = np.diag(gram).copy()
    dead = np.sqrt(np.maximum(norm_sq, 0.0)) <= DEGENERATE_NORM
    if np.any(dead):
        if strict:
            raise DegenerateFactor(f"tangent factors {np.flatnonzero(dead).tolist()} vanish")
        warnings.warn("vanishing tangent factor left uncorrected", DegenerateFactorWarning)
    corr = np.minimum(gram, 0.0) / np.where(dead, 1.0, norm_sq)[None, :]
    np.fill_diagonal(corr, 0.0)
    corr[:, dead] = 0.0
    return h + h @ corr


def effective_coordinates(manifold, h, xi, q):
    """Coefficients corrected for cancellation between factors.

    ``Hhat_ik = H_ik + sum_{b != k} H_ib * min(0, (Xi_b, Xi_k)) / ||Xi_k||^2``.
    """
    return _effective_coordinates(manifold, h, xi, q, strict=True)


def manifold_factors(manifold, h_eff, xi, q):
    """``Y_k = exp_q(c_k Xi_k)`` with ``c_k`` the largest coefficient of
    column ``k``, clamped at zero."""
    c = np.max(np.asarray(h_eff, dtype=float), axis=0)
    if np.any(c < 0):
        warnings.warn("negative effective coefficient clamped to zero", DegenerateFactorWarning)
        c = np.maximum(c, 0.0)
    xi = np.asarray(xi, dtype=float)
    scaled = c.reshape((-1,) + (1,) * (xi.ndim - 1)) * xi
    return manifold.exp(q, scaled)


def verify_basepoint(manifold, data, q):
    """Check that all log-mapped data points have nonnegative inner products.

    Returns ``(ok, min_inner)`` where ``min_inner`` is the smallest
    ``(log_q x_i, log_q x_j)_q`` over pairs ``i <= j``.
    """
    data = np.asarray(data, dtype=float)
    coords = manifold.to_coords(q, manifold.log(q, data)).reshape(len(data), -1)
    gram = coords @ coords.T
    min_inner = float(np.min(gram[np.triu_indices(len(data))]))
    return min_inner >= -1e-12, min_inner
