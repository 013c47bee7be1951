"""Seeded generators for test data: SPD matrices, factor models, DTI-like fields."""

import numpy as np

from . import symlinalg as sl
from .manifolds import SPD, Power


def _shape(size):
    return () if size is None or size == () else tuple(int(s) for s in np.atleast_1d(size))


def random_rotation(rng, n, size=()):
    a = rng.normal(size=_shape(size) + (n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]


def random_spd(rng, n, size=(), cond=1e2, scale=1.0):
    """SPD matrices with log-uniform spectrum and condition number <= cond."""
    shape = _shape(size)
    logs = rng.uniform(0.0, np.log(cond), size=shape + (n,))
    logs -= logs.mean(axis=-1, keepdims=True)
    u = random_rotation(rng, n, size)
    return sl.symmetrize(scale * (u * np.exp(logs)[..., None, :]) @ np.swapaxes(u, -1, -2))


def random_symmetric(rng, n, size=(), scale=1.0):
    shape = _shape(size)
    return scale * sl.symmetrize(rng.normal(size=shape + (n, n)))


def random_tangent(rng, manifold, q, size=(), scale=1.0):
    """Tangent vectors at ``q`` with i.i.d. standard normal coordinates."""
    shape = _shape(size)
    c = scale * rng.normal(size=shape + (manifold.dim,))
    return manifold.from_coords(q, c)


def random_point(rng, manifold, size=(), cond=1e2):
    if isinstance(manifold, SPD):
        return random_spd(rng, manifold.n, size, cond)
    if isinstance(manifold, Power) and isinstance(manifold.base, SPD):
        shape = _shape(size)
        return random_spd(rng, manifold.base.n, shape + (manifold.m,), cond)
    return rng.normal(size=_shape(size) + manifold.shape)


def ball_data(rng, manifold, q, n_points, radius=1.0):
    """Points ``exp_q(v)`` with ``||v||_q`` uniform in ``[0.2 r, r]``."""
    v = random_tangent(rng, manifold, q, n_points)
    norms = manifold.norm(q, v)
    target = rng.uniform(0.2 * radius, radius, size=n_points)
    v = v * (target / norms).reshape((-1,) + (1,) * len(manifold.shape))
    return manifold.exp(q, v)


def archetype_data(rng, manifold, q, n_points, n_archetypes, spread=1.0, noise=0.1,
                   concentration=0.5):
    """Nonnegative mixtures of random tangent archetypes, mapped to the manifold.

    ``x_i = exp_q(sum_k w_ik Z_k + noise)`` with Dirichlet weights ``w``.
    """
    z = random_tangent(rng, manifold, q, n_archetypes, scale=spread / np.sqrt(manifold.dim))
    w = rng.dirichlet(np.full(n_archetypes, concentration), size=n_points)
    e = random_tangent(rng, manifold, q, n_points, scale=noise / np.sqrt(manifold.dim))
    v = np.tensordot(w, z, axes=1) + e
    return manifold.exp(q, v)


def _fiber_tensor(direction, axial, radial):
    d = direction / np.linalg.norm(direction, axis=-1, keepdims=True)
    outer = d[..., :, None] * d[..., None, :]
    return radial[..., None, None] * np.eye(3) + (axial - radial)[..., None, None] * outer


def dti_field(dims, seed=0, n_bundles=3, noise=0.05):
    """DTI-like tensor field on a ``dims`` grid, tensors in units of 1e-3 mm^2/s.

    Background voxels are nearly isotropic; a few tube-shaped fiber bundles
    with smoothly bending directions carry strongly anisotropic tensors.
    Returns an array of shape ``(X, Y, Z, 3, 3)``.
    """
    dims = tuple(int(x) for x in dims)
    rng = np.random.default_rng(seed)
    nx, ny, nz = dims
    grid = np.stack(np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"), -1)
    grid = grid.astype(float)
    field = _fiber_tensor(np.ones(dims + (3,)), np.full(dims, 0.8), np.full(dims, 0.7))
    extent = np.array(dims, dtype=float)
    for _ in range(n_bundles):
        start = rng.uniform(0, 1, 3) * extent
        axis = random_rotation(rng, 3)[:, 0]
        bend = rng.normal(size=3) * 0.05
        radius = rng.uniform(1.5, 3.0) * max(1.0, min(dims) / 8)
        rel = grid - start
        t = rel @ axis
        direction = axis + t[..., None] * bend
        centre = start + t[..., None] * axis + 0.5 * t[..., None] ** 2 * bend
        dist = np.linalg.norm(grid - centre, axis=-1)
        weight = np.exp(-0.5 * (dist / radius) ** 2)
        fiber = _fiber_tensor(direction, np.full(dims, 1.7), np.full(dims, 0.3))
        field = (1 - weight)[..., None, None] * field + weight[..., None, None] * fiber
    # multiplicative log-normal jitter keeps every voxel positive definite
    jitter = random_symmetric(rng, 3, dims, noise)
    s = sl.matfun_spd(field, "sqrt")
    return sl.symmetrize(s @ sl.matfun_spd(jitter, "exp") @ s)


def knockout_mask(dims, block, count, seed=0):
    """Validity mask with one voxel removed from ``count`` random blocks.

    Each affected block is dropped by :func:`ccnmdf.tfld.extract_blocks`, so a
    field of ``B`` complete blocks yields ``B - count`` data points.
    """
    dims = tuple(int(x) for x in dims)
    bx, by, bz = (int(b) for b in block)
    mask = np.ones(dims, dtype=bool)
    origins = [(x, y, z)
               for x in range(0, dims[0] - bx + 1, bx)
               for y in range(0, dims[1] - by + 1, by)
               for z in range(0, dims[2] - bz + 1, bz)]
    if count:
        rng = np.random.default_rng(seed)
        for i in rng.choice(len(origins), size=min(count, len(origins)), replace=False):
            mask[origins[i]] = False
    return mask
