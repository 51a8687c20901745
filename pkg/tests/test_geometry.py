import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from csep.exceptions import DomainError
from csep.geometry import (Disk, GrimReaperU, HalfPlane, Interval, Parabola, Point, Polygon, Rectangle,
                           StripIm, StripRe, TruncatedU, bounding_box, contains, contains_points,
                           dist_to_boundary, distances, domain_from_dict, grim_reaper_height,
                           inscribed_rectangle, project_to_boundary, re_projection, slit_disk_polygon,
                           truncate_u)

ALL = [HalfPlane(), StripRe(-1, 1), StripIm(-1, 1), Rectangle(-1, 2, -1, 1), Disk(Point(0, 0), 1),
       GrimReaperU(1.0), GrimReaperU(2.0), TruncatedU(1.0, 6.0), Parabola(), slit_disk_polygon(1.0, 64)]


def test_point_rejects_nan():
    with pytest.raises(DomainError):
        Point(float("nan"), 0.0)


def test_height_formula():
    assert grim_reaper_height(0.0) == pytest.approx(-2 / math.pi * math.log(2))
    x = 0.3
    assert grim_reaper_height(x) == pytest.approx(-(2 / math.pi) * math.log(2 * math.cos(math.pi * x / 2)))
    assert grim_reaper_height(2 * x, 2.0) == pytest.approx(2 * grim_reaper_height(x))
    with pytest.raises(DomainError):
        grim_reaper_height(1.0)


def test_height_is_convex_and_blows_up():
    x = np.linspace(-0.999, 0.999, 2001)
    h = grim_reaper_height(x)
    assert np.all(np.diff(h, 2) > 0)
    assert grim_reaper_height(1 - 1e-9) > 10


@pytest.mark.parametrize("spec,p,inside", [
    (GrimReaperU(1.0), (0, 0), True),
    (GrimReaperU(1.0), (0, -0.5), False),
    (GrimReaperU(1.0), (0.99, 5.0), True),
    (GrimReaperU(1.0), (1.0, 5.0), False),
    (StripRe(-1, 1), (1.0, 0.0), False),
    (StripRe(-1, 1), (0.999, 1e6), True),
    (Parabola(), (0, 0), True),
    (Parabola(), (2, 1.4), False),
    (Parabola(), (2, 1.6), True),
    (Disk(Point(1, 1), 0.5), (1.2, 1.2), True),
    (TruncatedU(1.0, 6.0), (0, 6.0), False),
])
def test_contains(spec, p, inside):
    assert contains(spec, p) is inside


def test_slit_is_boundary():
    P = slit_disk_polygon(1.0, 64)
    assert not contains(P, (0.5, 0.0))
    assert contains(P, (0.5, 1e-3)) and contains(P, (0.5, -1e-3))
    assert contains(P, (-0.25, 0.0))
    assert dist_to_boundary(P, (0.5, 0.1)) == pytest.approx(0.1)


def test_dist_exact_cases():
    assert dist_to_boundary(StripRe(-1, 1), (0.25, 7.0)) == pytest.approx(0.75)
    assert dist_to_boundary(Disk(Point(0, 0), 1), (0, 0)) == pytest.approx(1.0)
    assert dist_to_boundary(Rectangle(-1, 2, -1, 1), (1.5, 0.0)) == pytest.approx(0.5)
    assert dist_to_boundary(HalfPlane(), (3.0, 2.0)) == pytest.approx(2.0)
    assert dist_to_boundary(StripRe(-1, 1), (2.0, 0.0)) == 0.0


def test_u_distance_close_to_true_distance():
    # brute force over a dense boundary sample
    xs = np.linspace(-1 + 1e-6, 1 - 1e-6, 400001)
    bx, by = xs, grim_reaper_height(xs)
    for p in [(0.0, 0.0), (0.5, 1.0), (-0.9, 3.0), (0.0, 5.0)]:
        true = np.min(np.hypot(bx - p[0], by - p[1]))
        true = min(true, 1 - abs(p[0]))
        d = dist_to_boundary(GrimReaperU(1.0), p)
        assert d <= true + 1e-9
        assert d >= 0.5 * true


def _interior(spec, rng, n):
    box = {"half_plane": (-3, 3, 0, 3), "strip_re": (-1, 1, -3, 3), "strip_im": (-3, 3, -1, 1),
           "parabola": (-3, 3, -0.5, 4), "grim_reaper_u": (-1, 1, -0.5, 4)}.get(spec.kind)
    if box is None:
        b = bounding_box(spec)
        box = (b.x0, b.x1, b.y0, b.y1)
    box = np.array(box, dtype=float) * (spec.scale if spec.kind == "grim_reaper_u" else 1)
    x = rng.uniform(box[0], box[1], n)
    y = rng.uniform(box[2], box[3], n)
    keep = contains_points(spec, x, y)
    return x[keep], y[keep]


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
def test_distance_disk_stays_inside(spec):
    # the certified disk around an interior point must not leave the domain
    rng = np.random.default_rng(1)
    x, y = _interior(spec, rng, 4000)
    d = distances(spec, x, y)
    assert np.all(d > 0)
    ang = rng.uniform(0, 2 * np.pi, len(x))
    px, py = x + 0.999 * d * np.cos(ang), y + 0.999 * d * np.sin(ang)
    assert contains_points(spec, px, py).all()


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
def test_projection_lands_on_boundary(spec):
    rng = np.random.default_rng(2)
    x, y = _interior(spec, rng, 200)
    for xi, yi in zip(x[:50], y[:50]):
        q = project_to_boundary(spec, (xi, yi))
        assert dist_to_boundary(spec, q) < 1e-7


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.999, 0.999), st.floats(0.0, 10.0))
def test_u_distance_certified_against_boundary_points(x, lift):
    p = (x, grim_reaper_height(x) + lift + 1e-3)
    d = dist_to_boundary(GrimReaperU(1.0), p)
    t = np.linspace(-0.999999, 0.999999, 20001)
    assert d <= np.min(np.hypot(t - p[0], grim_reaper_height(t) - p[1])) + 1e-12
    assert d <= 1 - abs(x) + 1e-12


def test_re_projection():
    assert re_projection(GrimReaperU(1.0)) == Interval(-1, 1)
    assert re_projection(GrimReaperU(2.0)) == Interval(-2, 2)
    assert re_projection(StripIm(-1, 1)).width == math.inf
    assert re_projection(Rectangle(-1, 2, -1, 1)) == Interval(-1, 2)
    H = 6.0
    half = re_projection(TruncatedU(1.0, H)).hi
    assert grim_reaper_height(half) == pytest.approx(H)


def test_truncated_u_mask_area():
    # mask count times dx^2 against the area between h and H by quadrature
    from csep.spectral import u_mask

    H, dx = 6.0, 0.01
    m = u_mask(1.0, dx, H)
    half = re_projection(TruncatedU(1.0, H)).hi
    area, _ = quad(lambda x: H - grim_reaper_height(x), -half, half)
    perimeter = 2 * H + 4
    assert abs(m.n_inside * dx * dx - area) <= 2 * dx * perimeter


def test_inscribed_rectangles_inside_u():
    for n in (2, 4, 10, 50):
        R = inscribed_rectangle(n)
        assert R.x1 - R.x0 == pytest.approx(2 * (1 - 1 / n))
        assert R.y1 - R.y0 == pytest.approx(n)
        xs = np.linspace(R.x0, R.x1, 101)[1:-1]
        for y in (R.y0 + 1e-9, R.y1 - 1e-9):
            assert contains_points(GrimReaperU(1.0), xs, np.full_like(xs, y)).all()


def test_round_trip_dict():
    for spec in ALL:
        d = json.loads(json.dumps(spec.to_dict()))
        assert domain_from_dict(d) == spec


def test_validation():
    with pytest.raises(DomainError):
        StripRe(1, -1)
    with pytest.raises(DomainError):
        Disk(Point(0, 0), -1)
    with pytest.raises(DomainError):
        Polygon((Point(0, 0), Point(0, 1), Point(1, 0)))  # clockwise
    with pytest.raises(DomainError):
        Polygon((Point(0, 0), Point(1, 1), Point(1, 0), Point(0, 1)))  # bow tie
    with pytest.raises(DomainError):
        truncate_u(1.0, -1.0)
    with pytest.raises(DomainError):
        domain_from_dict({"kind": "triangle"})
