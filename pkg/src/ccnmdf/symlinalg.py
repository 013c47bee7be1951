"""Dense linear algebra on small real symmetric matrices.

All functions accept stacks of matrices with shape ``(..., n, n)`` and work
on the whole stack at once.
"""

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

PD_TOL = 1e-12

_FUNCS = {
    "sqrt": np.sqrt,
    "inv_sqrt": lambda w: 1.0 / np.sqrt(w),
    "log": np.log,
    "exp": np.exp,
}


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def eig_sym(a):
    """Eigendecomposition of symmetric matrices with a fixed convention.

    Parameters
    ----------
    a : ndarray, shape (..., n, n)
        Symmetric matrices. Only the upper triangle is read.

    Returns
    -------
    w : ndarray, shape (..., n)
        Eigenvalues in descending order.
    q : ndarray, shape (..., n, n)
        Orthogonal matrices whose columns are the eigenvectors. Each column
        is signed so that its first entry of largest magnitude is
        nonnegative.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InvalidInput(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    w, q = np.linalg.eigh(a, UPLO="U")
    w = w[..., ::-1]
    q = q[..., ::-1]
    idx = np.argmax(np.abs(q), axis=-2)[..., None, :]
    lead = np.take_along_axis(q, idx, axis=-2)
    q = np.where(lead < 0, -q, q)
    return w, q


def _check_pd(w):
    lam_max = np.max(w, axis=-1, keepdims=True)
    tol = PD_TOL * np.maximum(1.0, lam_max)
    if np.any(w <= tol):
        raise NotPositiveDefinite(
            f"matrix is not positive definite (smallest eigenvalue {np.min(w):.3e})"
        )


def is_pd(a):
    """Boolean mask of the matrices in ``a`` that pass the positivity test."""
    a = np.asarray(a, dtype=float)
    finite = np.all(np.isfinite(a), axis=(-1, -2))
    safe = np.where(finite[..., None, None], a, 0.0)
    w = np.linalg.eigvalsh(safe)
    lam_max = w[..., -1:]
    return finite & np.all(w > PD_TOL * np.maximum(1.0, lam_max), axis=-1)


def matfun_spd(a, f):
    """Apply a scalar function to symmetric matrices through their spectrum.

    ``f`` is one of ``"sqrt"``, ``"inv_sqrt"``, ``"log"`` or ``"exp"``. All
    but ``"exp"`` require positive definite input.
    """
    try:
        fn = _FUNCS[f]
    except KeyError:
        raise InvalidInput(f"unknown matrix function {f!r}") from None
    w, q = eig_sym(a)
    if f != "exp":
        _check_pd(w)
    out = (q * fn(w)[..., None, :]) @ np.swapaxes(q, -1, -2)
    return symmetrize(out)


def sym_basis(n):
    """Frobenius-orthonormal basis of the symmetric n x n matrices.

    Diagonal units come first, then the scaled off-diagonal pairs in
    row-major order of the upper triangle. Returns an array of shape
    ``(n(n+1)/2, n, n)``.
    """
    if n < 1:
        raise InvalidInput("matrix order must be positive")
    d = n * (n + 1) // 2
    basis = np.zeros((d, n, n))
    for a in range(n):
        basis[a, a, a] = 1.0
    r = np.sqrt(0.5)
    for idx, (a, b) in enumerate(_offdiag_pairs(n), start=n):
        basis[idx, a, b] = basis[idx, b, a] = r
    return basis


def _offdiag_pairs(n):
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def sym_coords(a):
    """Coordinates of symmetric matrices in the ``sym_basis`` ordering."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    rows, cols = _coord_index(n)
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return a[..., rows, cols] * scale


def sym_from_coords(c):
    """Inverse of :func:`sym_coords`."""
    c = np.asarray(c, dtype=float)
    d = c.shape[-1]
    n = int(round((np.sqrt(8 * d + 1) - 1) / 2))
    if n * (n + 1) // 2 != d:
        raise InvalidInput(f"{d} is not a triangular number")
    rows, cols = _coord_index(n)
    off = rows != cols
    out = np.zeros(c.shape[:-1] + (n, n))
    vals = np.where(off, c / np.sqrt(2.0), c)
    out[..., rows, cols] = vals
    out[..., cols[off], rows[off]] = vals[..., off]
    return out


def _coord_index(n):
    pairs = [(a, a) for a in range(n)] + _offdiag_pairs(n)
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    return rows, cols


def pack_upper(a):
    """Upper triangle of symmetric matrices in row-major order."""
    a = np.asarray(a, dtype=float)
    rows, cols = np.triu_indices(a.shape[-1])
    return a[..., rows, cols]


def unpack_upper(v, n):
    v = np.asarray(v, dtype=float)
    rows, cols = np.triu_indices(n)
    out = np.zeros(v.shape[:-1] + (n, n))
    out[..., rows, cols] = v
    out[..., cols, rows] = v
    return out
