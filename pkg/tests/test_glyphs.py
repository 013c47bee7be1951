import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ccnmdf import glyphs
from ccnmdf.errors import InvalidLayout

SVG = "{http://www.w3.org/2000/svg}"


def test_fractional_anisotropy_values():
    assert glyphs.fractional_anisotropy(np.eye(3)) == 0.0
    assert np.isclose(glyphs.fractional_anisotropy(np.diag([1.0, 0.0, 0.0])), 1.0)
    lam = np.array([1.7, 0.3, 0.3])
    expected = np.sqrt(1.5) * np.linalg.norm(lam - lam.mean()) / np.linalg.norm(lam)
    assert np.isclose(glyphs.fractional_anisotropy(np.diag(lam)), expected)


def test_fa_color_ramp():
    assert glyphs.fa_color(0.0) == "#0000ff"
    assert glyphs.fa_color(1.0) == "#ff0000"
    assert glyphs.fa_color(0.5) == "#80007f"  # r + b = 255


def test_ellipse_params():
    rx, ry, ang = glyphs.ellipse_params(np.diag([4.0, 1.0, 9.0]))
    assert (rx, ry) == (2.0, 1.0) and ang == 0.0
    r = np.array([[0.0, -1.0], [1.0, 0.0]])
    a = np.eye(3)
    a[:2, :2] = r @ np.diag([4.0, 1.0]) @ r.T
    rx, ry, ang = glyphs.ellipse_params(a)
    assert np.isclose(rx, 2.0) and np.isclose(ry, 1.0) and np.isclose(abs(ang), 90.0)


def test_render_structure():
    pts = np.broadcast_to(np.diag([2.0, 1.0, 1.0]), (3, 4, 3, 3)).copy()
    pts[1] = np.eye(3)
    svg = glyphs.render_glyphs(pts, command="ccnmdf render --out a.svg")
    root = ET.fromstring(svg.split("\n", 1)[1].split("\n", 1)[1])
    groups = root.findall(f"{SVG}g")
    assert [g.get("id") for g in groups] == ["factor-1", "factor-2", "factor-3"]
    assert all(len(g.findall(f"{SVG}ellipse")) == 4 for g in groups)
    assert "<!-- generated by: ccnmdf render - -out a.svg -->" in svg
    # the widest semi-axis fills 45% of a cell
    widest = max(float(e.get("rx")) for e in root.iter(f"{SVG}ellipse"))
    assert np.isclose(widest, 0.45 * glyphs.CELL, atol=1e-3)
    isotropic = groups[1].find(f"{SVG}ellipse")
    assert isotropic.get("fill") == "#0000ff"


def test_render_layouts_and_determinism():
    pts = np.broadcast_to(np.eye(3), (2, 6, 3, 3))
    with pytest.raises(InvalidLayout):
        glyphs.render_glyphs(pts)
    with pytest.raises(InvalidLayout):
        glyphs.render_glyphs(pts, layout=(4, 2))
    a = glyphs.render_glyphs(pts, layout=(2, 3), scale=5.0)
    assert a == glyphs.render_glyphs(pts, layout=(2, 3), scale=5.0)
    assert 'rx="5.000"' in a
    with pytest.raises(InvalidLayout):
        glyphs.render_glyphs(np.ones((2, 4, 2, 2)))
