"""Planar domain catalogue and the geometric predicates the solvers rely on.

Every domain is an open, simply connected subset of the plane described by a
small immutable spec. Membership, boundary distance and boundary projection
run in compiled kernels; this module holds the specs, their JSON form and the
vectorised wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import ClassVar

import numpy as np

from . import _kernels as K
from .exceptions import DomainError

__all__ = [
    "Point", "Interval", "DomainSpec", "HalfPlane", "StripRe", "StripIm",
    "Rectangle", "Disk", "GrimReaperU", "TruncatedU", "Parabola", "Polygon",
    "grim_reaper_height", "contains", "contains_points", "dist_to_boundary",
    "distances", "project_to_boundary", "re_projection", "truncate_u",
    "inscribed_rectangle", "bounding_box", "slit_disk_polygon", "domain_from_dict",
]

_NO_VERTS = np.zeros((0, 2))


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite point ({self.x}, {self.y})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    def to_dict(self):
        return {"x": self.x, "y": self.y}

    def __complex__(self):
        return complex(self.x, self.y)


@dataclass(frozen=True)
class Interval:
    """Interval with possibly infinite endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise DomainError(f"empty interval ({self.lo}, {self.hi})")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi}


def _as_point(p) -> Point:
    if isinstance(p, Point):
        return p
    if isinstance(p, complex):
        return Point(p.real, p.imag)
    x, y = p
    return Point(x, y)


class DomainSpec:
    """Base class of the domain variants.

    Subclasses are frozen dataclasses; ``kind`` is the JSON tag and
    ``code`` the kernel kind.
    """

    kind: ClassVar[str]
    code: ClassVar[int]
    # coordinate along which the domain is translation invariant, if any
    free_axis: ClassVar[int] = -1

    def params(self) -> np.ndarray:
        raise NotImplementedError

    def verts(self) -> np.ndarray:
        return _NO_VERTS

    def encode(self):
        return self.code, np.asarray(self.params(), dtype=float), self.verts()

    def scale_hint(self) -> float:
        """Characteristic length, used to scale default tolerances."""
        return 1.0

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for f in fields(self):
            out[f.name] = getattr(self, f.name)
        return out

    def contains(self, p) -> bool:
        return contains(self, p)

    def dist(self, p) -> float:
        return dist_to_boundary(self, p)


def _check(cond, msg):
    if not cond:
        raise DomainError(msg)


@dataclass(frozen=True)
class HalfPlane(DomainSpec):
    """The upper half-plane ``Im z > 0``."""

    kind: ClassVar[str] = "half_plane"
    code: ClassVar[int] = K.HALF_PLANE

    def params(self):
        return [0.0]


@dataclass(frozen=True)
class StripRe(DomainSpec):
    """Vertical strip ``a < Re z < b``."""

    a: float
    b: float
    kind: ClassVar[str] = "strip_re"
    code: ClassVar[int] = K.STRIP_RE
    free_axis: ClassVar[int] = 1

    def __post_init__(self):
        _check(self.a < self.b, "strip_re needs a < b")

    def params(self):
        return [self.a, self.b]

    def scale_hint(self):
        return self.b - self.a


@dataclass(frozen=True)
class StripIm(DomainSpec):
    """Horizontal strip ``c < Im z < d``."""

    c: float
    d: float
    kind: ClassVar[str] = "strip_im"
    code: ClassVar[int] = K.STRIP_IM
    free_axis: ClassVar[int] = 0

    def __post_init__(self):
        _check(self.c < self.d, "strip_im needs c < d")

    def params(self):
        return [self.c, self.d]

    def scale_hint(self):
        return self.d - self.c


@dataclass(frozen=True)
class Rectangle(DomainSpec):
    x0: float
    x1: float
    y0: float
    y1: float
    kind: ClassVar[str] = "rectangle"
    code: ClassVar[int] = K.RECTANGLE

    def __post_init__(self):
        _check(self.x0 < self.x1 and self.y0 < self.y1, "rectangle needs x0 < x1 and y0 < y1")

    def params(self):
        return [self.x0, self.x1, self.y0, self.y1]

    def scale_hint(self):
        return min(self.x1 - self.x0, self.y1 - self.y0)


@dataclass(frozen=True)
class Disk(DomainSpec):
    center: Point
    r: float
    kind: ClassVar[str] = "disk"
    code: ClassVar[int] = K.DISK

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        _check(self.r > 0, "disk radius must be positive")

    def params(self):
        return [self.center.x, self.center.y, self.r]

    def scale_hint(self):
        return self.r

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.to_dict(), "r": self.r}


@dataclass(frozen=True)
class GrimReaperU(DomainSpec):
    """The scaled domain ``scale * U`` above the Grim Reaper curve."""

    scale: float = 1.0
    kind: ClassVar[str] = "grim_reaper_u"
    code: ClassVar[int] = K.GRIM_REAPER_U

    def __post_init__(self):
        _check(self.scale > 0, "scale must be positive")

    def params(self):
        return [self.scale]

    def scale_hint(self):
        return self.scale


@dataclass(frozen=True)
class TruncatedU(DomainSpec):
    """``scale * U`` cut off above ``Im z = H``."""

    scale: float
    H: float
    kind: ClassVar[str] = "truncated_u"
    code: ClassVar[int] = K.TRUNCATED_U

    def __post_init__(self):
        _check(self.scale > 0, "scale must be positive")
        _check(self.H > grim_reaper_height(0.0, self.scale),
               "H must lie above the bottom of the curve")

    def params(self):
        return [self.scale, self.H]

    def scale_hint(self):
        return self.scale


@dataclass(frozen=True)
class Parabola(DomainSpec):
    """Region above ``y = x**2 / 2 - 1/2``."""

    kind: ClassVar[str] = "parabola"
    code: ClassVar[int] = K.PARABOLA

    def params(self):
        return [0.0]


@dataclass(frozen=True)
class Polygon(DomainSpec):
    """Positively oriented polygon.

    Edges may touch along a segment (a slit traversed in both directions) but
    may not cross.
    """

    vertices: tuple
    kind: ClassVar[str] = "polygon"
    code: ClassVar[int] = K.POLYGON

    def __post_init__(self):
        pts = tuple(_as_point(v) for v in self.vertices)
        object.__setattr__(self, "vertices", pts)
        _check(len(pts) >= 3, "polygon needs at least 3 vertices")
        v = self.verts()
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        _check(area > 0, "polygon must be positively oriented")
        _check(not _has_proper_crossing(v), "polygon edges cross")

    def params(self):
        return [0.0]

    def verts(self):
        return np.array([[p.x, p.y] for p in self.vertices], dtype=float)

    def scale_hint(self):
        v = self.verts()
        return float(min(np.ptp(v[:, 0]), np.ptp(v[:, 1])))

    def to_dict(self):
        return {"kind": self.kind, "vertices": [p.to_dict() for p in self.vertices]}


def _has_proper_crossing(v: np.ndarray) -> bool:
    m = len(v)

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    for i in range(m):
        a, b = v[i], v[(i + 1) % m]
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            c, d = v[j], v[(j + 1) % m]
            o1, o2 = orient(a, b, c), orient(a, b, d)
            o3, o4 = orient(c, d, a), orient(c, d, b)
            if o1 * o2 < 0 and o3 * o4 < 0:
                return True
    return False


_KINDS = {cls.kind: cls for cls in (HalfPlane, StripRe, StripIm, Rectangle, Disk,
                                    GrimReaperU, TruncatedU, Parabola, Polygon)}


def domain_from_dict(d: dict) -> DomainSpec:
    """Inverse of ``DomainSpec.to_dict``."""
    d = dict(d)
    try:
        cls = _KINDS[d.pop("kind")]
    except KeyError as exc:
        raise DomainError(f"unknown or missing domain kind in {d!r}") from exc
    if cls is Disk:
        c = d["center"]
        return Disk(Point(c["x"], c["y"]) if isinstance(c, dict) else _as_point(c), d["r"])
    if cls is Polygon:
        return Polygon(tuple(Point(v["x"], v["y"]) if isinstance(v, dict) else _as_point(v)
                             for v in d["vertices"]))
    return cls(**{k: float(v) for k, v in d.items()})


def grim_reaper_height(x, scale: float = 1.0):
    """Height ``scale * h(x / scale)`` of the boundary of ``scale * U``.

    ``h(x) = -(2/pi) log(2 cos(pi x / 2))``. Accepts scalars or arrays.
    """
    xa = np.asarray(x, dtype=float)
    if scale <= 0:
        raise DomainError("scale must be positive")
    if np.any(~(np.abs(xa) < scale)):
        raise DomainError("grim_reaper_height needs |x| < scale")
    out = -scale * (2.0 / math.pi) * np.log(2.0 * np.cos(0.5 * math.pi * xa / scale))
    return float(out) if out.ndim == 0 else out


def contains(spec: DomainSpec, p) -> bool:
    p = _as_point(p)
    code, prm, verts = spec.encode()
    return bool(K.contains(code, prm, verts, p.x, p.y))


def contains_points(spec: DomainSpec, xs, ys) -> np.ndarray:
    code, prm, verts = spec.encode()
    xs = np.ascontiguousarray(np.ravel(xs), dtype=float)
    ys = np.ascontiguousarray(np.ravel(ys), dtype=float)
    return K.kernels(code)["contains_many"](prm, verts, xs, ys)


def dist_to_boundary(spec: DomainSpec, p) -> float:
    """Lower bound on the distance from ``p`` to the boundary.

    Exact for half-plane, strips, rectangles, disks and polygons; a certified
    lower bound for the Grim Reaper domains and 0.9 times the exact value for
    the parabola. Returns 0 for points outside or on the boundary.
    """
    p = _as_point(p)
    code, prm, verts = spec.encode()
    return float(K.dist(code, prm, verts, p.x, p.y))


def distances(spec: DomainSpec, xs, ys) -> np.ndarray:
    code, prm, verts = spec.encode()
    xs = np.ascontiguousarray(np.ravel(xs), dtype=float)
    ys = np.ascontiguousarray(np.ravel(ys), dtype=float)
    return K.kernels(code)["dist_many"](prm, verts, xs, ys)


def project_to_boundary(spec: DomainSpec, p) -> Point:
    p = _as_point(p)
    code, prm, verts = spec.encode()
    return Point(*K.project(code, prm, verts, p.x, p.y))


def re_projection(spec: DomainSpec) -> Interval:
    """The open interval ``{Re z : z in D}``."""
    inf = math.inf
    if isinstance(spec, (HalfPlane, StripIm, Parabola)):
        return Interval(-inf, inf)
    if isinstance(spec, StripRe):
        return Interval(spec.a, spec.b)
    if isinstance(spec, Rectangle):
        return Interval(spec.x0, spec.x1)
    if isinstance(spec, Disk):
        return Interval(spec.center.x - spec.r, spec.center.x + spec.r)
    if isinstance(spec, GrimReaperU):
        return Interval(-spec.scale, spec.scale)
    if isinstance(spec, TruncatedU):
        s = spec.scale
        half = s * (2.0 / math.pi) * math.acos(0.5 * math.exp(-0.5 * math.pi * spec.H / s))
        return Interval(-half, half)
    if isinstance(spec, Polygon):
        v = spec.verts()
        return Interval(float(v[:, 0].min()), float(v[:, 0].max()))
    raise DomainError(f"no projection rule for {spec!r}")


def truncate_u(scale: float, H: float) -> TruncatedU:
    if not H > grim_reaper_height(0.0, scale):
        raise DomainError("truncation height must exceed the bottom of the curve")
    return TruncatedU(scale, H)


def inscribed_rectangle(n: int, scale: float = 1.0) -> Rectangle:
    """The rectangle ``R_n`` of width ``2(1 - 1/n)`` and height ``n`` inside ``U``, scaled."""
    if n < 2:
        raise DomainError("n must be at least 2")
    w = 1.0 - 1.0 / n
    base = grim_reaper_height(w)
    return Rectangle(-scale * w, scale * w, scale * base, scale * (base + n))


def bounding_box(spec: DomainSpec) -> Rectangle | None:
    """Smallest axis-aligned box containing a bounded domain, else None."""
    if isinstance(spec, Rectangle):
        return spec
    if isinstance(spec, Disk):
        c, r = spec.center, spec.r
        return Rectangle(c.x - r, c.x + r, c.y - r, c.y + r)
    if isinstance(spec, TruncatedU):
        iv = re_projection(spec)
        return Rectangle(-spec.scale, spec.scale, grim_reaper_height(0.0, spec.scale), spec.H) \
            if iv.width > 0 else None
    if isinstance(spec, Polygon):
        v = spec.verts()
        return Rectangle(v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())
    return None


def slit_disk_polygon(eps: float = 1.0, m: int = 256) -> Polygon:
    """Polygon circumscribing the disk of radius ``eps`` with the slit ``[0, R]`` removed.

    Vertices sit on the circle of radius ``R = eps / cos(pi/m)`` so the polygon
    contains the disk. The slit is traversed out and back.
    """
    R = eps / math.cos(math.pi / m)
    ang = 2.0 * math.pi * np.arange(1, m) / m
    pts = [Point(0.0, 0.0), Point(R, 0.0)]
    pts += [Point(R * math.cos(a), R * math.sin(a)) for a in ang]
    pts += [Point(R, 0.0)]
    return Polygon(tuple(pts))
