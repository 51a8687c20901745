"""Compiled scalar geometry and path kernels.

Domains are passed to the kernels as ``(kind, prm, verts)``: an integer kind
code, a float parameter vector and an ``(m, 2)`` vertex array (empty unless the
domain is a polygon). ``geometry.DomainSpec.encode`` produces this triple.
"""

import math

import numpy as np
from numba import njit

HALF_PLANE = 0
STRIP_RE = 1
STRIP_IM = 2
RECTANGLE = 3
DISK = 4
GRIM_REAPER_U = 5
TRUNCATED_U = 6
PARABOLA = 7
POLYGON = 8

HALF_PI = 0.5 * math.pi
TWO_OVER_PI = 2.0 / math.pi
TWO_PI = 2.0 * math.pi


@njit(cache=True)
def unit_height(x):
    return -TWO_OVER_PI * math.log(2.0 * math.cos(HALF_PI * x))


@njit(cache=True)
def _unit_u_contains(x, y):
    if abs(x) >= 1.0:
        return False
    return y > unit_height(x)


@njit(cache=True)
def _unit_u_dist(x, y):
    # Over the window [x - r, x + r] the boundary slope is at most
    # tan(pi (|x| + r) / 2), so the graph stays below a cone with that slope and
    # dist >= min(r, g cos(pi (|x| + r) / 2)) for every r. Newton picks the r
    # where both terms agree; the final min keeps the bound certified.
    a = abs(x)
    if a >= 1.0:
        return 0.0
    c0 = math.cos(HALF_PI * a)
    g = y + TWO_OVER_PI * math.log(2.0 * c0)
    if not g > 0.0:
        return 0.0
    room = 1.0 - a
    # the root lies below g cos(pi a / 2); starting there keeps Newton on the
    # right of the root, where it converges monotonically
    r = min(g * c0, room)
    for _ in range(8):
        c = math.cos(HALF_PI * (a + r))
        psi = g * c - r
        dpsi = -g * HALF_PI * math.sqrt(max(0.0, 1.0 - c * c)) - 1.0
        step = psi / dpsi
        r_new = r - step
        if r_new < 0.0:
            r_new = 0.5 * r
        if abs(r_new - r) <= 1e-9 * r:
            r = r_new
            break
        r = r_new
    phi = g * math.cos(HALF_PI * (a + r))
    d = min(r, phi)
    return d if d > 0.0 else 0.0


@njit(cache=True)
def _unit_u_foot(x, y):
    # Nearest point on the graph of the unit height function, by Newton on the
    # stationarity condition. Intended for points close to the boundary.
    t = x
    lim = 1.0 - 1e-15
    for _ in range(50):
        c = math.cos(HALF_PI * t)
        hp = math.tan(HALF_PI * t)
        hv = -TWO_OVER_PI * math.log(2.0 * c)
        hpp = HALF_PI / (c * c)
        gval = (t - x) + (hv - y) * hp
        gder = 1.0 + hp * hp + (hv - y) * hpp
        if not gder > 0.0:
            break
        t_new = t - gval / gder
        if t_new > lim:
            t_new = 0.5 * (t + lim)
        elif t_new < -lim:
            t_new = 0.5 * (t - lim)
        if abs(t_new - t) <= 1e-16:
            t = t_new
            break
        t = t_new
    if not math.isfinite(t):
        t = x
    return t, unit_height(t)


@njit(cache=True)
def _parabola_roots(x, y, roots):
    # Foot points of (x, y) on y = t^2/2 - 1/2 solve t^3 + p t + q = 0.
    p = 1.0 - 2.0 * y
    q = -2.0 * x
    disc = 0.25 * q * q + p * p * p / 27.0
    if disc >= 0.0:
        s = math.sqrt(disc)
        u = -0.5 * q + s
        v = -0.5 * q - s
        t = math.copysign(abs(u) ** (1.0 / 3.0), u) + math.copysign(abs(v) ** (1.0 / 3.0), v)
        roots[0] = t
        nr = 1
    else:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg) / 3.0
        for k in range(3):
            roots[k] = m * math.cos(theta - TWO_PI * k / 3.0)
        nr = 3
    for k in range(nr):
        t = roots[k]
        for _ in range(3):
            f = t * t * t + p * t + q
            fp = 3.0 * t * t + p
            if fp == 0.0:
                break
            t -= f / fp
        roots[k] = t
    return nr


@njit(cache=True)
def _parabola_foot(x, y):
    roots = np.empty(3)
    nr = _parabola_roots(x, y, roots)
    best = np.inf
    bx = x
    by = y
    for k in range(nr):
        t = roots[k]
        fy = 0.5 * t * t - 0.5
        d2 = (t - x) ** 2 + (fy - y) ** 2
        if d2 < best:
            best = d2
            bx = t
            by = fy
    return bx, by, math.sqrt(best)


@njit(cache=True)
def _seg_nearest(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    ll = ex * ex + ey * ey
    if ll == 0.0:
        s = 0.0
    else:
        s = ((px - ax) * ex + (py - ay) * ey) / ll
        s = min(1.0, max(0.0, s))
    qx = ax + s * ex
    qy = ay + s * ey
    return qx, qy, math.hypot(px - qx, py - qy)


@njit(cache=True)
def _polygon_dist(verts, x, y):
    m = verts.shape[0]
    best = np.inf
    for i in range(m):
        j = (i + 1) % m
        _, _, d = _seg_nearest(x, y, verts[i, 0], verts[i, 1], verts[j, 0], verts[j, 1])
        if d < best:
            best = d
    return best


@njit(cache=True)
def _polygon_winding(verts, x, y):
    m = verts.shape[0]
    wn = 0
    for i in range(m):
        j = (i + 1) % m
        ax = verts[i, 0]
        ay = verts[i, 1]
        bx = verts[j, 0]
        by = verts[j, 1]
        cross = (bx - ax) * (y - ay) - (x - ax) * (by - ay)
        if ay <= y:
            if by > y and cross > 0.0:
                wn += 1
        else:
            if by <= y and cross < 0.0:
                wn -= 1
    return wn


@njit(cache=True, inline='always')
def contains(kind, prm, verts, x, y):
    if not (math.isfinite(x) and math.isfinite(y)):
        return False
    if kind == HALF_PLANE:
        return y > 0.0
    if kind == STRIP_RE:
        return prm[0] < x < prm[1]
    if kind == STRIP_IM:
        return prm[0] < y < prm[1]
    if kind == RECTANGLE:
        return prm[0] < x < prm[1] and prm[2] < y < prm[3]
    if kind == DISK:
        dx = x - prm[0]
        dy = y - prm[1]
        return dx * dx + dy * dy < prm[2] * prm[2]
    if kind == GRIM_REAPER_U:
        s = prm[0]
        return _unit_u_contains(x / s, y / s)
    if kind == TRUNCATED_U:
        s = prm[0]
        return y < prm[1] and _unit_u_contains(x / s, y / s)
    if kind == PARABOLA:
        return y > 0.5 * x * x - 0.5
    if kind == POLYGON:
        if _polygon_winding(verts, x, y) == 0:
            return False
        return _polygon_dist(verts, x, y) > 0.0
    return False


@njit(cache=True, inline='always')
def dist(kind, prm, verts, x, y):
    """Positive lower bound on the distance to the boundary, 0 outside."""
    if not contains(kind, prm, verts, x, y):
        return 0.0
    if kind == HALF_PLANE:
        return y
    if kind == STRIP_RE:
        return min(x - prm[0], prm[1] - x)
    if kind == STRIP_IM:
        return min(y - prm[0], prm[1] - y)
    if kind == RECTANGLE:
        return min(min(x - prm[0], prm[1] - x), min(y - prm[2], prm[3] - y))
    if kind == DISK:
        dx = x - prm[0]
        dy = y - prm[1]
        return prm[2] - math.sqrt(dx * dx + dy * dy)
    if kind == GRIM_REAPER_U:
        s = prm[0]
        return s * _unit_u_dist(x / s, y / s)
    if kind == TRUNCATED_U:
        s = prm[0]
        return min(s * _unit_u_dist(x / s, y / s), prm[1] - y)
    if kind == PARABOLA:
        _, _, d = _parabola_foot(x, y)
        return 0.9 * d
    if kind == POLYGON:
        return _polygon_dist(verts, x, y)
    return 0.0


@njit(cache=True, inline='always')
def project(kind, prm, verts, x, y):
    """Nearest boundary point of a point close to the boundary."""
    if kind == HALF_PLANE:
        return x, 0.0
    if kind == STRIP_RE:
        if x - prm[0] <= prm[1] - x:
            return prm[0], y
        return prm[1], y
    if kind == STRIP_IM:
        if y - prm[0] <= prm[1] - y:
            return x, prm[0]
        return x, prm[1]
    if kind == RECTANGLE:
        dl = abs(x - prm[0])
        dr = abs(prm[1] - x)
        db = abs(y - prm[2])
        dt = abs(prm[3] - y)
        m = min(min(dl, dr), min(db, dt))
        qx = min(max(x, prm[0]), prm[1])
        qy = min(max(y, prm[2]), prm[3])
        if m == dl:
            return prm[0], qy
        if m == dr:
            return prm[1], qy
        if m == db:
            return qx, prm[2]
        return qx, prm[3]
    if kind == DISK:
        dx = x - prm[0]
        dy = y - prm[1]
        rr = math.hypot(dx, dy)
        if rr == 0.0:
            return prm[0] + prm[2], prm[1]
        return prm[0] + prm[2] * dx / rr, prm[1] + prm[2] * dy / rr
    if kind == GRIM_REAPER_U or kind == TRUNCATED_U:
        s = prm[0]
        tx, ty = _unit_u_foot(x / s, y / s)
        fx = s * tx
        fy = s * ty
        if kind == TRUNCATED_U:
            top = abs(prm[1] - y)
            if top < math.hypot(fx - x, fy - y):
                return x, prm[1]
        return fx, fy
    if kind == PARABOLA:
        fx, fy, _ = _parabola_foot(x, y)
        return fx, fy
    if kind == POLYGON:
        m = verts.shape[0]
        best = np.inf
        bx = x
        by = y
        for i in range(m):
            j = (i + 1) % m
            qx, qy, d = _seg_nearest(x, y, verts[i, 0], verts[i, 1], verts[j, 0], verts[j, 1])
            if d < best:
                best = d
                bx = qx
                by = qy
        return bx, by
    return x, y


_SPECIALISED = {}


def kernels(kind):
    """Path and array kernels compiled for one domain kind.

    The kind is baked in as a constant so the dispatch in ``contains``,
    ``dist`` and ``project`` folds away; a generic kind argument costs an order
    of magnitude per step.
    """
    if kind in _SPECIALISED:
        return _SPECIALISED[kind]

    @njit
    def contains_many(prm, verts, xs, ys):
        out = np.empty(xs.shape[0], dtype=np.bool_)
        for i in range(xs.shape[0]):
            out[i] = contains(kind, prm, verts, xs[i], ys[i])
        return out

    @njit
    def dist_many(prm, verts, xs, ys):
        out = np.empty(xs.shape[0])
        for i in range(xs.shape[0]):
            out[i] = dist(kind, prm, verts, xs[i], ys[i])
        return out

    @njit
    def project_many(prm, verts, xs, ys):
        ox = np.empty(xs.shape[0])
        oy = np.empty(xs.shape[0])
        for i in range(xs.shape[0]):
            ox[i], oy[i] = project(kind, prm, verts, xs[i], ys[i])
        return ox, oy

    @njit(nogil=True)
    def wos_paths(prm, verts, x0, y0, eps, cap, max_steps, rng,
                  out_re, out_im, out_steps, out_ok):
        n = out_re.shape[0]
        for i in range(n):
            x = x0
            y = y0
            k = 0
            ok = False
            while True:
                d = dist(kind, prm, verts, x, y)
                if d < eps:
                    ok = True
                    break
                if k >= max_steps:
                    break
                if d > cap:
                    d = cap
                th = TWO_PI * rng.random()
                x += d * math.cos(th)
                y += d * math.sin(th)
                k += 1
            if ok:
                x, y = project(kind, prm, verts, x, y)
            out_re[i] = x
            out_im[i] = y
            out_steps[i] = k
            out_ok[i] = ok

    @njit(nogil=True)
    def euler_paths(prm, verts, x0, y0, dt, max_time, free_axis, rng,
                    out_re, out_im, out_time, out_steps, out_cens):
        # free_axis: 0 when the domain is invariant under x-translation, 1 for
        # y, -1 otherwise. The free coordinate is drawn exactly at the exit time.
        n = out_re.shape[0]
        sq = math.sqrt(dt)
        nmax = int(max_time / dt + 1e-9)
        for i in range(n):
            x = x0
            y = y0
            k = 0
            t_exit = -1.0
            dprev = dist(kind, prm, verts, x, y)
            if dprev <= 0.0:
                t_exit = 0.0
                x, y = project(kind, prm, verts, x, y)
            while t_exit < 0.0 and k < nmax:
                ddx = 0.0 if free_axis == 0 else sq * rng.standard_normal()
                ddy = 0.0 if free_axis == 1 else sq * rng.standard_normal()
                xn = x + ddx
                yn = y + ddy
                dcur = dist(kind, prm, verts, xn, yn)
                if not dcur > 0.0:
                    lo = 0.0
                    hi = 1.0
                    for _ in range(50):
                        mid = 0.5 * (lo + hi)
                        if contains(kind, prm, verts, x + mid * ddx, y + mid * ddy):
                            lo = mid
                        else:
                            hi = mid
                    t_exit = (k + hi) * dt
                    x, y = project(kind, prm, verts, x + hi * ddx, y + hi * ddy)
                    k += 1
                    break
                e = 2.0 * dprev * dcur / dt
                if e < 40.0:
                    if rng.random() < math.exp(-e):
                        s = dprev / (dprev + dcur)
                        t_exit = (k + s) * dt
                        x, y = project(kind, prm, verts, x + s * ddx, y + s * ddy)
                        k += 1
                        break
                x = xn
                y = yn
                dprev = dcur
                k += 1
            cens = t_exit < 0.0
            if cens:
                t_exit = nmax * dt
            if free_axis == 0:
                x = x0 + math.sqrt(t_exit) * rng.standard_normal()
            elif free_axis == 1:
                y = y0 + math.sqrt(t_exit) * rng.standard_normal()
            out_re[i] = x
            out_im[i] = y
            out_time[i] = t_exit
            out_steps[i] = k
            out_cens[i] = cens

    ns = dict(contains_many=contains_many, dist_many=dist_many, project_many=project_many,
              wos_paths=wos_paths, euler_paths=euler_paths)
    _SPECIALISED[kind] = ns
    return ns
