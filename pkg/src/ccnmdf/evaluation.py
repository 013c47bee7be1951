"""Reconstruction errors, rank sweeps and the curvature-consistency scan."""

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import euclid, nmdf
from .errors import InvalidInput, NMDFError

log = logging.getLogger(__name__)


@dataclass
class ErrorReport:
    rank: int
    exact: float
    tangent: float
    curvature_corrected: float
    wall_time: float
    failure: str = None


def _exact_sq(manifold, data, q, h, f, rotation=None):
    coords = euclid.unrotate_coords(manifold, h @ f, rotation)
    recon = manifold.exp(q, manifold.from_coords(q, coords))
    return float(np.sum(manifold.dist(data, recon) ** 2))


def _tangent_sq(manifold, data, q, h, f, rotation=None):
    m = euclid.coordinate_matrix(manifold, data, q, rotation).values
    return float(np.sum((m - h @ f) ** 2))


def exact_error(data, fac):
    """Power-manifold distance between the data and its reconstruction."""
    data = np.asarray(data, dtype=float)
    return np.sqrt(_exact_sq(fac.manifold, data, fac.q, fac.H, fac.F, fac.rotation))


def tangent_error(data, fac):
    """Norm of the tangent-space residual, summed over the data."""
    data = np.asarray(data, dtype=float)
    return np.sqrt(_tangent_sq(fac.manifold, data, fac.q, fac.H, fac.F, fac.rotation))


def cc_error(data, fac, workspace=None):
    w = workspace
    if w is None:
        w = nmdf.build_workspace(fac.manifold, data, fac.q, fac.rotation)
    return np.sqrt(nmdf.cc_objective(fac.H, fac.F, w))


def default_ranks(start=2, stop=35, count=12):
    """Ranks rounded from an evenly spaced grid; ``2, 5, ..., 35`` by default."""
    return [int(r) for r in np.rint(np.linspace(start, stop, count))]


def parse_ranks(text):
    """Parse ``start:stop:count`` or a comma separated list of ranks."""
    try:
        if ":" in text:
            start, stop, count = (int(p) for p in text.split(":"))
            return default_ranks(start, stop, count)
        return [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise InvalidInput(f"cannot parse rank list {text!r}") from exc


def run_method(manifold, data, q, k, method, **params):
    if method in ("t-nmdf", "t_nmdf"):
        keys = ("iters", "seed", "restarts", "rotation")
        return nmdf.t_nmdf(manifold, data, q, k, **{p: params[p] for p in keys if p in params})
    if method in ("cc-nmdf", "cc_nmdf"):
        return nmdf.cc_nmdf(manifold, data, q, k, **params)
    raise InvalidInput(f"unknown method {method!r}")


def report(data, fac, wall_time=0.0, workspace=None):
    return ErrorReport(
        fac.rank, exact_error(data, fac), tangent_error(data, fac),
        cc_error(data, fac, workspace), wall_time,
    )


def rank_sweep(manifold, data, q, ranks=None, method="cc-nmdf", **params):
    """Factorize at every rank and report the three errors.

    Failures at one rank are logged and recorded in the report's
    ``failure`` field; the sweep continues with the next rank.
    """
    data = np.asarray(data, dtype=float)
    ranks = default_ranks() if ranks is None else list(ranks)
    w = nmdf.build_workspace(manifold, data, q, params.get("rotation"))
    if method.replace("_", "-") == "cc-nmdf":
        params = dict(params, workspace=w)
    out = []
    for k in ranks:
        t0 = time.perf_counter()
        try:
            fac = run_method(manifold, data, q, k, method, **params)
            out.append(report(data, fac, time.perf_counter() - t0, w))
        except NMDFError as exc:
            log.warning("rank %d failed: %s", k, exc)
            nan = float("nan")
            out.append(ErrorReport(k, nan, nan, nan, time.perf_counter() - t0, str(exc)))
    return out


@dataclass
class ScanResult:
    """Errors of a shrinking family of datasets.

    ``rows`` has columns ``scale, exact, cc, tangent, |exact^2 - cc^2|,
    |exact^2 - tangent^2|``. The slopes are least-squares fits of the log
    discrepancies against the log tangent error.
    """

    rows: np.ndarray
    cc_slope: float
    tangent_slope: float

    COLUMNS = ("scale", "exact", "cc", "tangent", "cc_gap", "tangent_gap")


def _loglog_slope(x, y):
    x, y = np.asarray(x), np.asarray(y)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def consistency_scan(manifold, data, q, fac, scales=(1.0, 0.5, 0.25, 0.125, 0.0625)):
    """Shrink data and coefficients toward ``q`` and track the error gaps.

    At scale ``s`` the data become ``exp_q(s log_q x_i)`` and the
    coefficients ``s H``, so the tangent residual shrinks linearly. The
    curvature corrected error should match the exact error to higher order
    than the plain tangent error does.
    """
    scales = [float(s) for s in scales]
    if any(not 0 < s <= 1 for s in scales):
        raise InvalidInput("scales must lie in (0, 1]")
    if scales != sorted(scales, reverse=True):
        raise InvalidInput("scales must be sorted in descending order")
    data = np.asarray(data, dtype=float)
    logs = manifold.log(q, data)
    rows = []
    for s in scales:
        shrunk = manifold.exp(q, s * logs)
        h = s * fac.H
        ex = _exact_sq(manifold, shrunk, q, h, fac.F, fac.rotation)
        ta = _tangent_sq(manifold, shrunk, q, h, fac.F, fac.rotation)
        w = nmdf.build_workspace(manifold, shrunk, q, fac.rotation)
        cc = nmdf.cc_objective(h, fac.F, w)
        rows.append((s, np.sqrt(ex), np.sqrt(cc), np.sqrt(ta), abs(ex - cc), abs(ex - ta)))
    rows = np.array(rows)
    return ScanResult(
        rows,
        _loglog_slope(rows[:, 3], rows[:, 4]),
        _loglog_slope(rows[:, 3], rows[:, 5]),
    )
