"""Goodness of fit, rate regression and numeric certificates for the bounds.

A ``Certificate`` records one inequality ``lhs <relation> rhs`` together with
its inputs, so every check can be serialised and re-run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import CensoredData, DomainError, VarianceUndefined, WindowTooNarrow
from .geometry import DomainSpec, Interval, re_projection
from .sampler import ExitBatch, SurvivalCurve

# ---------------------------------------------------------------- targets


class TargetDistribution:
    name = "target"

    def cdf(self, x):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        raise NotImplementedError

    def to_dict(self):
        return {"name": self.name}


@dataclass(frozen=True)
class Uniform(TargetDistribution):
    a: float = -1.0
    b: float = 1.0
    name = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError("uniform needs a < b")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    @property
    def mean(self):
        return 0.5 * (self.a + self.b)

    @property
    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def to_dict(self):
        return {"name": self.name, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class SechDensity(TargetDistribution):
    """Density ``sech(pi x / 2) / 2``; CDF ``(2/pi) arctan(exp(pi x / 2))``."""

    name = "sech"

    def cdf(self, x):
        return (2.0 / math.pi) * np.arctan(np.exp(0.5 * math.pi * np.asarray(x, dtype=float)))

    @property
    def mean(self):
        return 0.0

    @property
    def variance(self):
        return 1.0


@dataclass(frozen=True)
class Cauchy(TargetDistribution):
    location: float = 0.0
    scale: float = 1.0
    name = "cauchy"

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("cauchy scale must be positive")

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.location) / self.scale
        return 0.5 + np.arctan(z) / math.pi

    @property
    def mean(self):
        raise VarianceUndefined("the Cauchy law has no mean")

    @property
    def variance(self):
        raise VarianceUndefined("the Cauchy law has no variance")

    def to_dict(self):
        return {"name": self.name, "location": self.location, "scale": self.scale}


def _nonempty(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("samples must be nonempty")
    return x


def ks_statistic(samples, target: TargetDistribution) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|`` via the sorted-sample formula."""
    x = np.sort(_nonempty(samples))
    n = len(x)
    F = target.cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def empirical_support(samples) -> Interval:
    x = _nonempty(samples)
    return Interval(float(x.min()), float(x.max()))


# ---------------------------------------------------------------- rates


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    stderr: float
    window: tuple
    n_points: int
    intercept: float = 0.0

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise DomainError("window must satisfy t_lo < t_hi")
        if not math.isfinite(self.rate):
            raise DomainError("rate must be finite")

    def to_dict(self):
        return {"rate": self.rate, "stderr": self.stderr, "window": list(self.window),
                "n_points": self.n_points, "intercept": self.intercept}


def estimate_rate(curve: SurvivalCurve, p_lo: float = 1e-3, p_hi: float = 1e-1,
                  min_points: int = 4) -> RateEstimate:
    """Weighted least-squares slope of ``-log P(t)`` over ``p_lo <= P <= p_hi``.

    Weights are the inverse binomial delta-method variances
    ``n P / (1 - P)`` of ``log P``; the slope stderr follows from the same
    weights. Exact (noise-free) input recovers the slope exactly.
    """
    t = np.asarray(curve.times, dtype=float)
    p = np.asarray(curve.survivors, dtype=float) / curve.n_total
    use = (p >= p_lo) & (p <= p_hi) & (p > 0) & (p < 1)
    if use.sum() < min_points:
        raise WindowTooNarrow(f"only {int(use.sum())} grid points with P in [{p_lo:g}, {p_hi:g}]")
    t, p = t[use], p[use]
    y = -np.log(p)
    w = curve.n_total * p / (1.0 - p)
    W = w.sum()
    tb = (w * t).sum() / W
    yb = (w * y).sum() / W
    stt = (w * (t - tb) ** 2).sum()
    slope = (w * (t - tb) * (y - yb)).sum() / stt
    return RateEstimate(rate=float(slope), stderr=float(math.sqrt(1.0 / stt)),
                        window=(float(t[0]), float(t[-1])), n_points=int(use.sum()),
                        intercept=float(yb - slope * tb))


# ---------------------------------------------------------------- certificates

_RELATIONS = ("<=", ">=", "~=")


@dataclass(frozen=True)
class Certificate:
    """``holds`` is true iff ``lhs <relation> rhs`` up to ``tolerance``.

    ``slack`` is the margin in the direction of the relation (``rhs - lhs`` for
    ``<=``, ``lhs - rhs`` for ``>=``, ``-|lhs - rhs|`` for ``~=``).
    """

    name: str
    lhs: float
    rhs: float
    relation: str
    slack: float
    holds: bool
    tolerance: float = 0.0
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def make_certificate(name, lhs, rhs, relation, tolerance=0.0, inputs=None) -> Certificate:
    if relation not in _RELATIONS:
        raise DomainError(f"relation must be one of {_RELATIONS}")
    lhs, rhs = float(lhs), float(rhs)
    if relation == "<=":
        slack = rhs - lhs
    elif relation == ">=":
        slack = lhs - rhs
    else:
        slack = -abs(lhs - rhs)
    holds = bool(slack >= -tolerance)
    return Certificate(name, lhs, rhs, relation, float(slack), holds, float(tolerance), dict(inputs or {}))


def check_upper_bound(rate: float, mu: TargetDistribution, c2: float = 2.0379) -> Certificate:
    """``rate <= c2 / Var(mu)``. Raises ``VarianceUndefined`` when the variance is infinite."""
    var = mu.variance
    return make_certificate("upper_bound", rate, c2 / var, "<=",
                            inputs={"rate": float(rate), "target": mu.to_dict(), "c2": float(c2),
                                    "variance": float(var)})


def check_lower_bound(rate: float, support: Interval, tol: float = 0.0) -> Certificate:
    """``rate >= pi^2 / (2 width^2)``; an unbounded support gives ``rhs = 0``.

    ``tol`` is relative to the bound and absorbs discretisation error when the
    rate is itself a numerical estimate.
    """
    w = support.width
    if w <= 0:
        raise DomainError("support must have positive width")
    rhs = 0.0 if not math.isfinite(w) else math.pi ** 2 / (2.0 * w * w)
    return make_certificate("lower_bound", rate, rhs, ">=", tolerance=tol * rhs,
                            inputs={"rate": float(rate), "support": support.to_dict(),
                                    "relative_tolerance": float(tol)})


def _coordinate(batch: ExitBatch, axis):
    if axis in ("re", 0, "x"):
        return np.asarray(batch.re)
    if axis in ("im", 1, "y"):
        return np.asarray(batch.im)
    raise DomainError(f"unknown axis {axis!r}")


def check_davis(batch: ExitBatch, axis="re", origin: float = 0.0, n_sigma: float = 3.0) -> Certificate:
    """Optional-stopping inequality ``E[X_tau^2] <= E[tau]`` for one coordinate.

    ``sigma`` is the standard error of the paired difference ``X^2 - tau``.
    The certificate holds when ``lhs - rhs <= n_sigma sigma``. The equality gap
    ``|lhs - rhs| / sigma`` is reported in the inputs; for bounded coordinates
    it should be of order one.
    """
    if len(batch) == 0:
        raise DomainError("empty batch")
    if np.any(batch.censored):
        raise CensoredData(f"{int(np.sum(batch.censored))} censored paths")
    if not batch.has_times or np.any(np.isnan(batch.time)):
        raise CensoredData("batch carries no exit times")
    x2 = (_coordinate(batch, axis) - origin) ** 2
    t = np.asarray(batch.time)
    n = len(t)
    d = x2 - t
    sigma = float(d.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    lhs, rhs = float(x2.mean()), float(t.mean())
    gap = abs(lhs - rhs) / sigma if sigma > 0 else math.inf
    return make_certificate("davis", lhs, rhs, "<=", tolerance=n_sigma * sigma,
                            inputs={"axis": str(axis), "n": n, "sigma": sigma, "gap_sigma": gap,
                                    "lhs_stderr": float(x2.std(ddof=1) / math.sqrt(n)),
                                    "rhs_stderr": float(t.std(ddof=1) / math.sqrt(n))})


def beurling_lower_bound(r):
    """``1 - (2/pi) arctan(2 sqrt(r) / (1 - r))`` for ``0 <= r < 1``.

    Equal to ``1 - (4/pi) arctan(sqrt(r))``, which is the form evaluated.
    """
    r = np.asarray(r, dtype=float)
    if np.any(~((r >= 0) & (r < 1))):
        raise DomainError("beurling_lower_bound needs 0 <= r < 1")
    out = 1.0 - (4.0 / math.pi) * np.arctan(np.sqrt(r))
    return float(out) if out.ndim == 0 else out


def check_beurling(hits: int, n: int, r: float, n_sigma: float = 3.0) -> Certificate:
    """Empirical hitting frequency ``>=`` the bound, less ``n_sigma`` binomial errors.

    The bound is attained by the slit disk itself, so a one-sided test without
    the statistical allowance would fail about half of the time.
    """
    bound = beurling_lower_bound(r)
    freq = hits / n
    sigma = math.sqrt(bound * (1.0 - bound) / n)
    return make_certificate("beurling", freq, bound, ">=", tolerance=n_sigma * sigma,
                            inputs={"r": float(r), "hits": int(hits), "n": int(n), "sigma": sigma})


def support_tolerance(width: float, n: int, density_bounded_below: bool = False) -> float:
    """``3 width / n`` when the exit law has a density bounded below, else ``5 width / sqrt(n)``."""
    return 3.0 * width / n if density_bounded_below else 5.0 * width / math.sqrt(n)


def check_support_theorem(spec: DomainSpec, samples, tol: float | None = None,
                          density_bounded_below: bool = False) -> Certificate:
    """Finite endpoints of the real projection must match the empirical support.

    ``lhs`` is the largest endpoint gap, ``rhs`` the tolerance. Infinite
    endpoints are not checked here (see ``extremes_grow``).
    """
    x = _nonempty(samples)
    proj = re_projection(spec)
    emp = empirical_support(x)
    width = proj.width if math.isfinite(proj.width) else emp.hi - emp.lo
    if tol is None:
        tol = support_tolerance(width, len(x), density_bounded_below)
    gaps = []
    if math.isfinite(proj.lo):
        gaps.append(abs(emp.lo - proj.lo))
    if math.isfinite(proj.hi):
        gaps.append(abs(emp.hi - proj.hi))
    gap = max(gaps) if gaps else 0.0
    return make_certificate("support", gap, tol, "<=",
                            inputs={"domain": spec.to_dict(), "n": len(x), "projection": proj.to_dict(),
                                    "empirical": emp.to_dict(), "checked_endpoints": len(gaps)})


def extremes_grow(samples_small, samples_large) -> bool:
    """Qualitative check for unbounded support: both extremes widen with more samples."""
    a = empirical_support(samples_small)
    b = empirical_support(samples_large)
    return b.lo <= a.lo and b.hi >= a.hi and (b.lo < a.lo or b.hi > a.hi)


def check_torsion_product(rate: float, sup_norm: float, c2: float = 2.0379, tol: float = 0.0) -> Certificate:
    """``rate * ||u||_inf <= c2``."""
    return make_certificate("torsion_spectral_product", rate * sup_norm, c2, "<=", tolerance=tol,
                            inputs={"rate": float(rate), "sup_norm": float(sup_norm), "c2": float(c2)})


def check_ks(samples, target: TargetDistribution, threshold: float) -> Certificate:
    return make_certificate("ks", ks_statistic(samples, target), threshold, "<=",
                            inputs={"target": target.to_dict(), "n": int(np.size(samples))})


def certificates_hold(certs) -> bool:
    return all(c.holds for c in certs)


def slit_hits(batch: ExitBatch, eps: float = 1.0, band: float = 1e-4) -> np.ndarray:
    """Exits that land on the slit ``[0, eps)`` rather than on the circle."""
    re, im = np.asarray(batch.re), np.asarray(batch.im)
    return (np.abs(im) < band * eps) & (re > -band * eps) & (np.hypot(re, im) < (1.0 - 1e-3) * eps)


def beurling_monte_carlo(r: float = 0.25, n: int = 10**5, rng=None, eps: float = 1.0,
                         m: int = 256, threads=None) -> Certificate:
    """Walk-on-spheres estimate of the probability of hitting the slit from ``-r eps``."""
    from .geometry import slit_disk_polygon
    from .sampler import wos_batch

    batch = wos_batch(slit_disk_polygon(eps, m), (-r * eps, 0.0), n, rng=rng, threads=threads)
    cert = check_beurling(int(slit_hits(batch, eps).sum()), n, r)
    cert.inputs.update({"eps": float(eps), "polygon_vertices": int(m)})
    return cert
