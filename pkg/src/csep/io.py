"""Parsing of command-line specs and deterministic file output."""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from . import analysis
from .exceptions import DomainError
from .geometry import (Disk, DomainSpec, GrimReaperU, HalfPlane, Parabola, Point, Polygon,
                       Rectangle, StripIm, StripRe, TruncatedU, domain_from_dict, slit_disk_polygon)

_INLINE = {
    "half_plane": (HalfPlane, 0),
    "strip_re": (StripRe, 2),
    "strip_im": (StripIm, 2),
    "rectangle": (Rectangle, 4),
    "grim_reaper_u": (GrimReaperU, (0, 1)),
    "truncated_u": (TruncatedU, 2),
    "parabola": (Parabola, 0),
}


def _floats(parts, what):
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise DomainError(f"non-numeric parameter in {what!r}") from exc


def parse_domain(text: str) -> DomainSpec:
    """Inline ``kind,p1,p2,...`` or the path of a JSON file holding ``DomainSpec.to_dict()``.

    Inline forms: ``half_plane``, ``strip_re,a,b``, ``strip_im,c,d``,
    ``rectangle,x0,x1,y0,y1``, ``disk,cx,cy,r``, ``grim_reaper_u[,scale]``,
    ``truncated_u,scale,H``, ``parabola``, ``polygon,x1,y1,x2,y2,...`` and
    ``slit_disk[,eps[,m]]``.
    """
    text = text.strip()
    if text.endswith(".json") or os.path.isfile(text):
        with open(text) as fh:
            return domain_from_dict(json.load(fh))
    kind, *parts = [p.strip() for p in text.split(",")]
    vals = _floats(parts, text)
    if kind == "disk":
        if len(vals) != 3:
            raise DomainError("disk takes cx,cy,r")
        return Disk(Point(vals[0], vals[1]), vals[2])
    if kind == "polygon":
        if len(vals) < 6 or len(vals) % 2:
            raise DomainError("polygon takes an even number (>= 6) of coordinates")
        return Polygon(tuple(Point(x, y) for x, y in zip(vals[::2], vals[1::2])))
    if kind == "slit_disk":
        if len(vals) > 2:
            raise DomainError("slit_disk takes [eps[,m]]")
        eps = vals[0] if vals else 1.0
        m = int(vals[1]) if len(vals) > 1 else 256
        return slit_disk_polygon(eps, m)
    if kind not in _INLINE:
        raise DomainError(f"unknown domain kind {kind!r}")
    cls, arity = _INLINE[kind]
    allowed = arity if isinstance(arity, tuple) else (arity,)
    if len(vals) not in allowed:
        raise DomainError(f"{kind} takes {' or '.join(map(str, allowed))} parameters")
    return cls(*vals)


def parse_target(text: str) -> analysis.TargetDistribution:
    """``uniform,a,b``, ``sech`` or ``cauchy[,location,scale]``."""
    kind, *parts = [p.strip() for p in text.strip().split(",")]
    vals = _floats(parts, text)
    if kind == "uniform":
        if len(vals) not in (0, 2):
            raise DomainError("uniform takes a,b")
        return analysis.Uniform(*vals)
    if kind == "sech":
        if vals:
            raise DomainError("sech takes no parameters")
        return analysis.SechDensity()
    if kind == "cauchy":
        if len(vals) not in (0, 2):
            raise DomainError("cauchy takes location,scale")
        return analysis.Cauchy(*vals)
    raise DomainError(f"unknown target {kind!r}")


def parse_point(text: str) -> Point:
    vals = _floats(text.split(","), text)
    if len(vals) != 2:
        raise DomainError("a point is written x,y")
    return Point(*vals)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no infinities; keep them readable and parseable
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def dumps(obj) -> str:
    """Sorted-key JSON; floats use the shortest repr that round-trips exactly."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def write_ecdf_csv(path, samples, target=None):
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    F = target.cdf(x) if target is not None else np.full(n, np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "ecdf", "target_cdf"])
        for i, (xi, fi) in enumerate(zip(x, F), start=1):
            w.writerow([f"{xi:.17g}", f"{i / n:.17g}", f"{fi:.17g}"])


def read_csv(path):
    """Header and float columns of a CSV written by this package."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path} is empty")
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, {h: data[:, j] for j, h in enumerate(header)}
