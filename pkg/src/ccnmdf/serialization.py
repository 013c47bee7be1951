"""JSON datasets and factorizations, CSV error reports.

Floats are written with Python's shortest round-trip repr, so loading a
file gives back bit-identical arrays and writing is deterministic.
"""

import csv
import json

import numpy as np

from . import manifolds
from .errors import InvalidInput
from .nmdf import Factorization

REPORT_HEADER = ["rank", "exact", "tangent", "cc", "wall_time_s"]
COMPARE_HEADER = ["method", "basepoint"] + REPORT_HEADER


def _dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=1, allow_nan=False)
        fh.write("\n")


def _load(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: invalid JSON ({exc})") from None


def dataset_to_dict(manifold, points, **extra):
    out = {"descriptor": manifold.to_dict(), "n_points": len(points)}
    out.update({k: np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
                for k, v in extra.items()})
    out["points"] = np.asarray(points, dtype=float).tolist()
    return out


def save_dataset(path, manifold, points, **extra):
    _dump(dataset_to_dict(manifold, points, **extra), path)


def load_dataset(path):
    """Returns ``(manifold, points, meta)``; points are validated."""
    raw = _load(path)
    try:
        manifold = manifolds.from_dict(raw["descriptor"])
        points = np.array(raw["points"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: malformed dataset ({exc})") from None
    if points.ndim != 1 + len(manifold.shape) or points.shape[1:] != manifold.shape:
        raise InvalidInput(f"{path}: points do not match descriptor {manifold.to_dict()}")
    if len(points) == 0:
        raise InvalidInput(f"{path}: dataset is empty")
    points = manifold.check_point(points)
    meta = {k: v for k, v in raw.items() if k not in ("descriptor", "points")}
    return manifold, points, meta


def factorization_to_dict(fac):
    out = {
        "descriptor": fac.manifold.to_dict(),
        "basepoint": np.asarray(fac.q).tolist(),
        "H": fac.H.tolist(),
        "F": fac.F.tolist(),
        "rank": fac.rank,
        "method": fac.method,
        "seed": fac.seed,
        "params": fac.params,
        "objective_trace": [float(v) for v in fac.objective_trace],
    }
    if fac.initial_objective is not None:
        out["initial_objective"] = float(fac.initial_objective)
    if fac.rotation is not None:
        out["rotation"] = np.asarray(fac.rotation).tolist()
    return out


def save_factorization(path, fac):
    _dump(factorization_to_dict(fac), path)


def load_factorization(path):
    raw = _load(path)
    try:
        manifold = manifolds.from_dict(raw["descriptor"])
        rotation = raw.get("rotation")
        return Factorization(
            manifold,
            manifold.check_point(raw["basepoint"]),
            np.array(raw["H"], dtype=float),
            np.array(raw["F"], dtype=float),
            raw["method"],
            objective_trace=list(raw.get("objective_trace", [])),
            initial_objective=raw.get("initial_objective"),
            seed=raw.get("seed", 0),
            params=raw.get("params", {}),
            rotation=None if rotation is None else np.array(rotation, dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: malformed factorization ({exc})") from None


def _fmt(v):
    return "" if v is None else repr(float(v))


def report_row(rep, timing=True):
    return [rep.rank, _fmt(rep.exact), _fmt(rep.tangent), _fmt(rep.curvature_corrected),
            _fmt(rep.wall_time) if timing else ""]


def write_reports(path, reports, timing=True, prefix=None):
    """Write error reports as CSV. ``prefix`` maps a report to leading columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((COMPARE_HEADER if prefix else REPORT_HEADER))
        for rep in reports:
            lead = list(prefix(rep)) if prefix else []
            w.writerow(lead + report_row(rep, timing))


def read_reports(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
