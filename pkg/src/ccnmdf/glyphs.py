"""SVG ellipse glyphs for SPD(3) tensors.

Each tensor is drawn as the ellipse of its leading 2 x 2 block and colored by
fractional anisotropy on a blue (isotropic) to red (anisotropic) ramp. Every
factor becomes one ``<g>`` element holding a grid of glyphs.
"""

import math

import numpy as np

from . import symlinalg as sl
from .errors import InvalidLayout

CELL = 24.0
PAD = 12.0
LABEL = 14.0


def fractional_anisotropy(a):
    """``sqrt(3/2) * ||lam - mean(lam)|| / ||lam||`` of symmetric matrices."""
    lam = np.linalg.eigvalsh(np.asarray(a, dtype=float))
    dev = lam - lam.mean(axis=-1, keepdims=True)
    norm = np.linalg.norm(lam, axis=-1)
    fa = np.sqrt(1.5) * np.linalg.norm(dev, axis=-1) / np.where(norm > 0, norm, 1.0)
    return np.clip(fa, 0.0, 1.0)


def fa_color(fa):
    r = int(round(255 * float(fa)))
    return f"#{r:02x}00{255 - r:02x}"


def ellipse_params(a):
    """Semi-axes and rotation (degrees) of the leading 2 x 2 block of ``a``."""
    w, u = sl.eig_sym(np.asarray(a, dtype=float)[:2, :2])
    w = np.maximum(w, 0.0)
    angle = math.degrees(math.atan2(u[1, 0], u[0, 0]))
    return math.sqrt(w[0]), math.sqrt(w[1]), angle


def _layout(m, layout):
    if layout is None:
        side = math.isqrt(m)
        if side * side != m:
            raise InvalidLayout(f"{m} components do not form a square; give a layout")
        return side, side
    rows, cols = (int(v) for v in layout)
    if rows < 1 or cols < 1 or rows * cols != m:
        raise InvalidLayout(f"layout {rows}x{cols} does not hold {m} components")
    return rows, cols


def _num(v):
    return f"{v:.3f}"


def render_glyphs(points, layout=None, scale=None, command=None, labels=None):
    """Render tensors as an SVG document string.

    Parameters
    ----------
    points : ndarray, shape (K, m, 3, 3)
        ``K`` power-manifold points, each with ``m`` SPD(3) components.
    layout : (rows, cols), optional
        Grid of the components inside one factor; square by default.
    scale : float, optional
        Pixels per unit square-root eigenvalue. By default the largest
        semi-axis over all glyphs fills 45% of a grid cell.
    command : str, optional
        Generating command line, embedded as a comment.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 3:
        pts = pts[:, None]
    if pts.ndim != 4 or pts.shape[-2:] != (3, 3):
        raise InvalidLayout(f"expected (K, m, 3, 3) tensors, got {pts.shape}")
    k, m = pts.shape[:2]
    rows, cols = _layout(m, layout)
    params = [[ellipse_params(p) for p in factor] for factor in pts]
    fa = fractional_anisotropy(pts)
    if scale is None:
        biggest = max((rx for factor in params for rx, _, _ in factor), default=0.0)
        scale = 0.45 * CELL / biggest if biggest > 0 else 1.0
    fcols = max(1, math.ceil(math.sqrt(k)))
    frows = math.ceil(k / fcols)
    pw, ph = cols * CELL, rows * CELL + LABEL
    width = fcols * pw + (fcols + 1) * PAD
    height = frows * ph + (frows + 1) * PAD

    out = ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>']
    if command:
        out.append(f"<!-- generated by: {command.replace('--', '- -')} -->")
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}">'
    )
    out.append(f'<rect width="{_num(width)}" height="{_num(height)}" fill="#ffffff"/>')
    for f in range(k):
        ox = PAD + (f % fcols) * (pw + PAD)
        oy = PAD + (f // fcols) * (ph + PAD)
        label = labels[f] if labels else f"factor {f + 1}"
        out.append(f'<g id="factor-{f + 1}" transform="translate({_num(ox)},{_num(oy)})">')
        out.append(f'<text x="0" y="{_num(LABEL - 3)}" font-family="sans-serif" '
                   f'font-size="11">{label}</text>')
        for c, (rx, ry, ang) in enumerate(params[f]):
            cx = (c % cols + 0.5) * CELL
            cy = LABEL + (c // cols + 0.5) * CELL
            out.append(
                f'<ellipse cx="{_num(cx)}" cy="{_num(cy)}" rx="{_num(rx * scale)}" '
                f'ry="{_num(ry * scale)}" transform="rotate({_num(ang)} {_num(cx)} {_num(cy)})" '
                f'fill="{fa_color(fa[f, c])}"/>'
            )
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
