"""Finite-difference Dirichlet solvers on rasterised domains.

The rate of a domain is the principal eigenvalue of ``-1/2 Laplacian`` with
Dirichlet conditions; the torsion function solves ``-1/2 Laplacian u = 1``.
Both are discretised with the 5-point stencil on a uniform node grid; nodes
outside the open domain (or on the edge of the computational box) are pinned
to zero.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from .exceptions import ConvergenceFailure, DomainError, EmptyMask, MonotonicityViolation
from .geometry import (Disk, DomainSpec, Point, Rectangle, StripIm, StripRe, TruncatedU,
                       bounding_box, contains_points, grim_reaper_height)

# first positive zero of J0; re-derived by bisection on the power series in the tests
J01 = 2.404825557695773
BEST_KNOWN_C2 = 2.0379


@dataclass
class GridMask:
    """Node grid ``origin + (i dx, j dx)``; ``inside[j, i]`` marks unknowns."""

    dx: float
    origin: Point
    nx: int
    ny: int
    inside: np.ndarray

    def __post_init__(self):
        if self.inside.shape != (self.ny, self.nx):
            raise DomainError("mask shape does not match (ny, nx)")
        if not self.inside.any():
            raise EmptyMask("mask has no inside nodes")

    @property
    def n_inside(self) -> int:
        return int(self.inside.sum())

    @property
    def xs(self) -> np.ndarray:
        return self.origin.x + self.dx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.origin.y + self.dx * np.arange(self.ny)

    def is_connected(self) -> bool:
        _, n = ndimage.label(self.inside)
        return n == 1

    def subset_of(self, other: "GridMask") -> bool:
        """Node-wise inclusion; both masks must share spacing and node lattice."""
        if not math.isclose(self.dx, other.dx):
            raise DomainError("masks use different spacings")
        oi = (self.origin.x - other.origin.x) / self.dx
        oj = (self.origin.y - other.origin.y) / self.dx
        i0, j0 = int(round(oi)), int(round(oj))
        if abs(oi - i0) > 1e-6 or abs(oj - j0) > 1e-6:
            raise DomainError("masks are not on the same lattice")
        jj, ii = np.nonzero(self.inside)
        ii = ii + i0
        jj = jj + j0
        ok = (ii >= 0) & (ii < other.nx) & (jj >= 0) & (jj < other.ny)
        if not ok.all():
            return False
        return bool(other.inside[jj, ii].all())


@dataclass
class EigResult:
    rate: float
    raw_eigenvalue: float
    iterations: int
    residual: float
    eigenvector: np.ndarray = field(repr=False, default=None)
    mask: GridMask = field(repr=False, default=None)

    def to_dict(self):
        return {"rate": self.rate, "raw_eigenvalue": self.raw_eigenvalue,
                "iterations": self.iterations, "residual": self.residual}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def to_csv(self, path):
        write_field_csv(path, self.mask, self.eigenvector)


@dataclass
class TorsionField:
    values: np.ndarray = field(repr=False)
    sup_norm: float
    value_at_origin: float
    iterations: int = 0
    residual: float = 0.0
    mask: GridMask = field(repr=False, default=None)

    def to_dict(self):
        return {"sup_norm": self.sup_norm, "value_at_origin": self.value_at_origin,
                "iterations": self.iterations, "residual": self.residual}

    def to_csv(self, path):
        write_field_csv(path, self.mask, self.values)

    def at(self, x, y):
        return bilinear(self.mask, self.values, x, y)


def write_field_csv(path, mask: GridMask, values: np.ndarray):
    xs, ys = mask.xs, mask.ys
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for j, i in zip(*np.nonzero(mask.inside)):
            w.writerow([f"{xs[i]:.17g}", f"{ys[j]:.17g}", f"{values[j, i]:.17g}"])


def bilinear(mask: GridMask, values: np.ndarray, x, y):
    """Bilinear interpolation of a node field (zero outside the grid)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fi = (x - mask.origin.x) / mask.dx
    fj = (y - mask.origin.y) / mask.dx
    i0 = np.floor(fi).astype(int)
    j0 = np.floor(fj).astype(int)
    tx = fi - i0
    ty = fj - j0
    padded = np.pad(values, 1)

    def at(j, i):
        jj = np.clip(j + 1, 0, mask.ny + 1)
        ii = np.clip(i + 1, 0, mask.nx + 1)
        return padded[jj, ii]

    out = ((1 - tx) * (1 - ty) * at(j0, i0) + tx * (1 - ty) * at(j0, i0 + 1)
           + (1 - tx) * ty * at(j0 + 1, i0) + tx * ty * at(j0 + 1, i0 + 1))
    return float(out) if out.ndim == 0 else out


def rasterize(spec: DomainSpec, dx: float, bbox: Rectangle) -> GridMask:
    """Mark grid nodes of ``bbox`` lying in the open domain.

    Nodes on the edge of the box are treated as boundary. When the origin is in
    the box only the 4-connected component holding the origin node is kept.
    """
    if not dx > 0:
        raise DomainError("dx must be positive")
    nx = int(math.floor((bbox.x1 - bbox.x0) / dx + 1e-9)) + 1
    ny = int(math.floor((bbox.y1 - bbox.y0) / dx + 1e-9)) + 1
    if nx < 3 or ny < 3:
        raise EmptyMask("box too small for the spacing")
    xs = bbox.x0 + dx * np.arange(nx)
    ys = bbox.y0 + dx * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    inside = contains_points(spec, X, Y).reshape(ny, nx)
    inside[0, :] = inside[-1, :] = False
    inside[:, 0] = inside[:, -1] = False
    if not inside.any():
        raise EmptyMask("no grid node falls inside the domain")
    if bbox.x0 <= 0 <= bbox.x1 and bbox.y0 <= 0 <= bbox.y1:
        i = int(round(-bbox.x0 / dx))
        j = int(round(-bbox.y0 / dx))
        i, j = min(i, nx - 1), min(j, ny - 1)
        if inside[j, i]:
            labels, _ = ndimage.label(inside)
            inside = labels == labels[j, i]
    return GridMask(float(dx), Point(bbox.x0, bbox.y0), nx, ny, inside)


def _snap(lo, hi, dx):
    return dx * math.floor(lo / dx + 1e-9), dx * math.ceil(hi / dx - 1e-9)


def default_bbox(spec: DomainSpec, dx: float, strip_aspect: float = 20.0) -> Rectangle:
    """Computational box for ``spec`` whose nodes include the origin.

    Strips are cut to a box ``strip_aspect`` times as long as they are wide.
    Rectangles are used as they are.
    """
    if isinstance(spec, Rectangle):
        return spec
    if isinstance(spec, StripRe):
        w = spec.b - spec.a
        y0, y1 = _snap(-0.5 * strip_aspect * w, 0.5 * strip_aspect * w, dx)
        x0, x1 = _snap(spec.a, spec.b, dx)
        return Rectangle(x0, x1, y0, y1)
    if isinstance(spec, StripIm):
        w = spec.d - spec.c
        x0, x1 = _snap(-0.5 * strip_aspect * w, 0.5 * strip_aspect * w, dx)
        y0, y1 = _snap(spec.c, spec.d, dx)
        return Rectangle(x0, x1, y0, y1)
    box = bounding_box(spec)
    if box is None:
        raise DomainError(f"{spec.kind} is unbounded; truncate it first")
    x0, x1 = _snap(box.x0, box.x1, dx)
    y0, y1 = _snap(box.y0, box.y1, dx)
    return Rectangle(x0, x1, y0, y1)


def laplacian(mask: GridMask) -> sp.csr_matrix:
    """5-point ``-Laplacian`` on the inside nodes with zero Dirichlet data."""
    idx = -np.ones(mask.inside.shape, dtype=np.int64)
    jj, ii = np.nonzero(mask.inside)
    n = len(jj)
    idx[jj, ii] = np.arange(n)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, 4.0)]
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        j2, i2 = jj + dj, ii + di
        ok = (j2 >= 0) & (j2 < mask.ny) & (i2 >= 0) & (i2 < mask.nx)
        nb = np.full(n, -1, dtype=np.int64)
        nb[ok] = idx[j2[ok], i2[ok]]
        keep = nb >= 0
        rows.append(np.nonzero(keep)[0])
        cols.append(nb[keep])
        vals.append(np.full(keep.sum(), -1.0))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return A / (mask.dx * mask.dx)


def conjugate_gradient(A, b, x0=None, tol=1e-10, maxiter=None, M=None):
    """Preconditioned conjugate gradient for symmetric positive definite ``A``.

    Stops when ``||b - A x|| <= tol ||b||``. Returns ``(x, iterations, relres)``
    and raises ``ConvergenceFailure`` past ``maxiter``.
    """
    n = len(b)
    maxiter = 10 * n if maxiter is None else maxiter
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    z = r if M is None else M @ r
    p = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        relres = np.linalg.norm(r) / bnorm
        if relres <= tol:
            return x, k, relres
        z = r if M is None else M @ r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceFailure(f"CG did not reach {tol:g} in {maxiter} iterations (relres {relres:.3g})")


LU_MAX_UNKNOWNS = 1_500_000


def _preconditioner(A, kind):
    """``"lu"``: sparse LU (minimum-degree ordering) used as an exact preconditioner,
    so CG converges in one or two steps. ``"amg"``: smoothed aggregation V-cycle,
    for systems too large to factor. ``"auto"`` picks by size."""
    if kind == "auto":
        kind = "lu" if A.shape[0] <= LU_MAX_UNKNOWNS else "amg"
    if kind == "lu":
        lu = splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        return LinearOperator(A.shape, matvec=lu.solve, dtype=float)
    if kind == "amg":
        import pyamg

        return pyamg.smoothed_aggregation_solver(A, symmetry="hermitian").aspreconditioner(cycle="V")
    if kind in (None, "none"):
        return None
    raise DomainError(f"unknown preconditioner {kind!r}")


def principal_rate(mask: GridMask, tol: float = 1e-8, method: str = "lanczos",
                   maxiter: int = 2000, cg_tol: float = 1e-10, precond: str = "auto") -> EigResult:
    """Smallest Dirichlet eigenvalue of the discrete ``-1/2 Laplacian`` on ``mask``.

    Inverse iteration: every application of ``A^{-1}`` is a preconditioned CG
    solve. ``method="power"`` runs plain normalised inverse iteration;
    ``method="lanczos"`` feeds the same CG solves to a shift-invert Lanczos
    driver (ARPACK), which copes with the small spectral gaps of long thin
    domains. Both stop on the eigen-residual ``||A v - mu v|| / (mu ||v||) <= tol``.
    """
    A = laplacian(mask)
    M = _preconditioner(A, precond)
    n = A.shape[0]
    solves = [0]

    def solve(v):
        solves[0] += 1
        x, _, _ = conjugate_gradient(A, np.asarray(v, dtype=float).ravel(), tol=cg_tol, M=M)
        return x

    v = np.ones(n) / math.sqrt(n)
    if n == 1:
        mu = float(A[0, 0])
    elif method == "power":
        mu = np.inf
        for _ in range(maxiter):
            y = solve(v)
            v = y / np.linalg.norm(y)
            Av = A @ v
            mu = float(v @ Av)
            if np.linalg.norm(Av - mu * v) <= tol * mu:
                break
        else:
            raise ConvergenceFailure(f"inverse iteration did not converge in {maxiter} steps")
    elif method == "lanczos":
        op = LinearOperator((n, n), matvec=solve, dtype=float)
        try:
            w, vecs = eigsh(A, k=1, sigma=0.0, which="LM", OPinv=op, v0=v,
                            tol=0.1 * tol, maxiter=maxiter)
        except Exception as exc:  # ARPACK raises its own error types
            raise ConvergenceFailure(str(exc)) from exc
        v = vecs[:, 0]
        v /= np.linalg.norm(v)
        mu = float(v @ (A @ v))
    else:
        raise DomainError(f"unknown method {method!r}")
    residual = float(np.linalg.norm(A @ v - mu * v) / mu)
    if residual > tol:
        raise ConvergenceFailure(f"eigen-residual {residual:.3g} above {tol:g}")
    if v.sum() < 0:
        v = -v
    vec = np.zeros(mask.inside.shape)
    vec[mask.inside] = v / np.abs(v).max()
    return EigResult(rate=0.5 * mu, raw_eigenvalue=mu, iterations=solves[0],
                     residual=residual, eigenvector=vec, mask=mask)


def torsion(mask: GridMask, tol: float = 1e-10, precond: str = "auto") -> TorsionField:
    """Discrete torsion function: ``-1/2 Laplacian u = 1`` with zero Dirichlet data."""
    A = laplacian(mask)
    M = _preconditioner(A, precond)
    b = np.full(A.shape[0], 2.0)
    u, its, relres = conjugate_gradient(A, b, tol=tol, M=M)
    values = np.zeros(mask.inside.shape)
    values[mask.inside] = u
    origin = bilinear(mask, values, 0.0, 0.0)
    return TorsionField(values=values, sup_norm=float(u.max()), value_at_origin=float(origin),
                        iterations=its, residual=float(relres), mask=mask)


def vogt_constant(d: int) -> float:
    """Explicit upper bound ``d/8 + sqrt(5 (1 + log(2)/4) d)/4 + 1`` on the torsion constant ``C_d``."""
    if d < 1:
        raise DomainError("dimension must be at least 1")
    return d / 8.0 + 0.25 * math.sqrt(5.0 * (1.0 + 0.25 * math.log(2.0)) * d) + 1.0


def best_known_c2() -> float:
    return BEST_KNOWN_C2


def closed_form_rate(spec: DomainSpec) -> float | None:
    """Exact rate for strips, rectangles and disks; None otherwise."""
    half_pi2 = 0.5 * math.pi ** 2
    if isinstance(spec, StripRe):
        return half_pi2 / (spec.b - spec.a) ** 2
    if isinstance(spec, StripIm):
        return half_pi2 / (spec.d - spec.c) ** 2
    if isinstance(spec, Rectangle):
        return half_pi2 * (1.0 / (spec.x1 - spec.x0) ** 2 + 1.0 / (spec.y1 - spec.y0) ** 2)
    if isinstance(spec, Disk):
        return 0.5 * (J01 / spec.r) ** 2
    return None


def rectangle_rate(n: int) -> float:
    """Rate of the inscribed rectangle ``R_n`` of width ``2(1 - 1/n)`` and height ``n``."""
    return 0.5 * math.pi ** 2 * (1.0 / (4.0 * (1.0 - 1.0 / n) ** 2) + 1.0 / n ** 2)


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: float = 2.0) -> float:
    """Extrapolate two estimates whose error scales like ``h**order``."""
    f = ratio ** order
    return (f * fine - coarse) / (f - 1.0)


def u_mask(scale: float, dx: float, H: float) -> GridMask:
    """Rasterised truncated domain ``scale * (U ∩ {Im z < H})`` with spacing ``scale * dx``."""
    spec = TruncatedU(scale, scale * H)
    h = scale * dx
    y0 = h * (math.floor(grim_reaper_height(0.0, scale) / h) - 1)
    x0, x1 = _snap(-scale, scale, h)
    return rasterize(spec, h, Rectangle(x0, x1, y0, scale * H))


@dataclass
class URateResult:
    heights: list
    rates: list
    rate_at_max: float
    limit: float
    lower_envelope: float
    upper_envelope: float
    inscribed_n: list
    scale: float = 1.0
    results: list = field(repr=False, default=None)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "results"}

    def sandwich(self, n: int = 10, rel_tol: float = 0.02) -> bool:
        """``pi^2/(8 s^2) <= limit <= rate(R_n)/s^2`` up to ``rel_tol``; the raw
        value at the largest height must clear the strip bound outright."""
        lo = self.lower_envelope
        hi = rectangle_rate(n) / self.scale ** 2
        return (self.rate_at_max >= lo and self.limit >= lo * (1.0 - rel_tol)
                and self.limit <= hi * (1.0 + rel_tol))


def rate_of_u(scale: float = 1.0, dx: float = 0.01, H_list=(2.0, 4.0, 6.0, 8.0),
              tol: float = 1e-8, mono_tol: float = 1e-7) -> URateResult:
    """Rate of ``scale * U`` from a sweep of truncation heights.

    ``dx`` and the heights are given for the unit domain and scaled with
    ``scale``. Truncation shrinks the domain, so the rates must not increase
    with the height; the limit is a Richardson extrapolation in ``1/H**2`` on
    the two largest heights. The sandwich bounds are the strip rate from below
    and the smallest inscribed-rectangle rate that fits under the largest
    height from above.
    """
    H_list = sorted(float(h) for h in H_list)
    if not (scale > 0 and dx > 0) or any(h <= 0 for h in H_list):
        raise DomainError("scale, dx and heights must be positive")
    if len(H_list) < 2:
        raise DomainError("need at least two truncation heights")
    results = [principal_rate(u_mask(scale, dx, H), tol=tol) for H in H_list]
    rates = [r.rate for r in results]
    for lo, hi in zip(rates, rates[1:]):
        if hi > lo * (1.0 + mono_tol):
            raise MonotonicityViolation(f"rates increase with truncation height: {rates}")
    H1, H2 = H_list[-2], H_list[-1]
    r1, r2 = rates[-2], rates[-1]
    limit = (H2 ** 2 * r2 - H1 ** 2 * r1) / (H2 ** 2 - H1 ** 2)
    ns = [n for n in range(2, 1000) if grim_reaper_height(1.0 - 1.0 / n) + n <= H2]
    upper = min(rectangle_rate(n) for n in ns) / scale ** 2 if ns else math.inf
    return URateResult(heights=H_list, rates=rates, rate_at_max=rates[-1], limit=limit,
                       lower_envelope=math.pi ** 2 / (8.0 * scale ** 2), upper_envelope=upper,
                       inscribed_n=ns, scale=float(scale), results=results)


def domain_rate(spec: DomainSpec, dx: float, **kw) -> EigResult:
    return principal_rate(rasterize(spec, dx, default_bbox(spec, dx)), **kw)


def domain_torsion(spec: DomainSpec, dx: float, **kw) -> TorsionField:
    return torsion(rasterize(spec, dx, default_bbox(spec, dx)), **kw)
