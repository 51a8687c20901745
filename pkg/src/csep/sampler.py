"""Monte Carlo engines for Brownian exit positions and exit times.

Exit positions come from walk-on-spheres, exit times from an Euler scheme
with a Brownian-bridge crossing correction. Batches are split into fixed-size
chunks, each driven by its own random stream derived from ``(seed, stream,
chunk)``, so results do not depend on how many threads run the chunks.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .exceptions import DomainError, MaxStepsExceeded, TimeBudgetExceeded
from .geometry import DomainSpec, Point, _as_point, contains

CHUNK_SIZE = 4096
WOS_RADIUS_CAP = 1e3
DEFAULT_DT = 1e-4
DEFAULT_MAX_STEPS = 10**6
DEFAULT_MAX_TIME = 50.0


class RandomStream:
    """Reproducible source of random numbers.

    The same ``(seed, stream)`` pair always yields the same draws.
    ``generator()`` returns a persistent sequential generator; ``chunk(i)``
    returns an independent generator for batch chunk ``i``.
    """

    algorithm = "pcg64"

    def __init__(self, seed: int = 0, stream: int = 0):
        if not 0 <= int(seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = None

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream={self.stream})"

    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = self.chunk(-1)
        return self._gen

    def chunk(self, index: int) -> np.random.Generator:
        key = (self.stream,) if index < 0 else (self.stream, int(index))
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, stream: int) -> "RandomStream":
        return RandomStream(self.seed, stream)


def _as_stream(rng) -> RandomStream:
    if isinstance(rng, RandomStream):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RandomStream(0 if rng is None else int(rng))
    raise TypeError("expected a RandomStream or an integer seed")


def default_threads() -> int:
    return max(1, int(os.environ.get("CSEP_THREADS", "1")))


@dataclass(frozen=True)
class ExitSample:
    position: Point
    time: float
    steps: int
    censored: bool = False


@dataclass
class ExitBatch:
    """Column store for many exits. ``time`` is NaN for walk-on-spheres."""

    re: np.ndarray
    im: np.ndarray
    time: np.ndarray
    steps: np.ndarray
    censored: np.ndarray

    def __len__(self):
        return len(self.re)

    def __getitem__(self, i) -> ExitSample:
        return ExitSample(Point(self.re[i], self.im[i]), float(self.time[i]),
                          int(self.steps[i]), bool(self.censored[i]))

    @property
    def has_times(self) -> bool:
        return not np.all(np.isnan(self.time))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im", "time", "steps", "censored"])
            for r, i, t, s, c in zip(self.re, self.im, self.time, self.steps, self.censored):
                w.writerow([f"{r:.17g}", f"{i:.17g}", f"{t:.17g}", int(s), int(c)])


@dataclass
class SurvivalCurve:
    times: np.ndarray
    survivors: np.ndarray
    n_total: int

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.survivors = np.asarray(self.survivors)
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("survival grid must be strictly ascending")
        if np.any(np.diff(self.survivors) > 0) or (len(self.survivors) and self.survivors[0] > self.n_total):
            raise DomainError("survivor counts must be nonincreasing and at most n_total")

    @property
    def fraction(self) -> np.ndarray:
        return self.survivors / self.n_total

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "survivors", "n_total"])
            for t, s in zip(self.times, self.survivors):
                w.writerow([f"{t:.17g}", s if isinstance(s, (int, np.integer)) else f"{s:.17g}",
                            self.n_total])


def _run_chunks(n, work, threads):
    n_chunks = (n + CHUNK_SIZE - 1) // CHUNK_SIZE
    bounds = [(c, c * CHUNK_SIZE, min(n, (c + 1) * CHUNK_SIZE)) for c in range(n_chunks)]
    if threads <= 1 or n_chunks <= 1:
        for b in bounds:
            work(*b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: work(*b), bounds))


def wos_batch(spec: DomainSpec, start, n: int, shell_eps: float | None = None,
              max_steps: int = DEFAULT_MAX_STEPS, rng=None, threads: int | None = None,
              strict: bool = True) -> ExitBatch:
    """Walk-on-spheres exit positions of ``n`` independent paths.

    Each path jumps to a uniform point on the largest certified disk until it
    is within ``shell_eps`` of the boundary, then snaps to the nearest boundary
    point. Paths that exhaust ``max_steps`` are flagged in ``censored``; with
    ``strict`` they raise ``MaxStepsExceeded`` instead.
    """
    start = _as_point(start)
    if n < 1:
        raise DomainError("n must be positive")
    if not contains(spec, start):
        raise DomainError("start point must lie inside the domain")
    stream = _as_stream(rng)
    eps = 1e-6 * spec.scale_hint() if shell_eps is None else float(shell_eps)
    code, prm, verts = spec.encode()
    re = np.empty(n)
    im = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    ok = np.empty(n, dtype=np.bool_)

    def work(c, lo, hi):
        K.kernels(code)["wos_paths"](prm, verts, start.x, start.y, eps, WOS_RADIUS_CAP, int(max_steps),
                    stream.chunk(c), re[lo:hi], im[lo:hi], steps[lo:hi], ok[lo:hi])

    _run_chunks(n, work, threads or default_threads())
    batch = ExitBatch(re, im, np.full(n, np.nan), steps, ~ok)
    if strict and not ok.all():
        err = MaxStepsExceeded(f"{int((~ok).sum())} of {n} walks did not reach the shell")
        err.batch = batch
        raise err
    return batch


def wos_exit_position(spec, start, shell_eps=None, max_steps=DEFAULT_MAX_STEPS, rng=None) -> ExitSample:
    """One walk-on-spheres exit. The time field is NaN (not produced by this method)."""
    stream = _as_stream(rng)
    batch = ExitBatch(*(np.empty(1) for _ in range(2)), np.full(1, np.nan),
                      np.empty(1, dtype=np.int64), np.empty(1, dtype=np.bool_))
    start = _as_point(start)
    if not contains(spec, start):
        raise DomainError("start point must lie inside the domain")
    eps = 1e-6 * spec.scale_hint() if shell_eps is None else float(shell_eps)
    code, prm, verts = spec.encode()
    ok = np.empty(1, dtype=np.bool_)
    K.kernels(code)["wos_paths"](prm, verts, start.x, start.y, eps, WOS_RADIUS_CAP, int(max_steps),
                stream.generator(), batch.re, batch.im, batch.steps, ok)
    if not ok[0]:
        raise MaxStepsExceeded(f"walk did not reach the shell within {max_steps} steps")
    return batch[0]


def euler_batch(spec: DomainSpec, start, n: int, dt: float = DEFAULT_DT,
                max_time: float = DEFAULT_MAX_TIME, rng=None, threads: int | None = None) -> ExitBatch:
    """Euler exit times and positions of ``n`` independent paths.

    Gaussian increments of variance ``dt`` per coordinate. A step landing
    outside exits at the crossing point of the segment. A step staying inside
    exits with the Brownian-bridge probability ``exp(-2 d0 d1 / dt)`` computed
    from the boundary distances at both ends. Paths alive at ``max_time`` are
    censored. For strips the coordinate along the strip does not affect the
    exit and is drawn exactly as ``N(0, tau)`` at the exit time.
    """
    start = _as_point(start)
    if n < 1:
        raise DomainError("n must be positive")
    if not (dt > 0 and max_time > 0):
        raise DomainError("dt and max_time must be positive")
    if not contains(spec, start):
        raise DomainError("start point must lie inside the domain")
    stream = _as_stream(rng)
    code, prm, verts = spec.encode()
    re = np.empty(n)
    im = np.empty(n)
    tm = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    cens = np.empty(n, dtype=np.bool_)

    def work(c, lo, hi):
        K.kernels(code)["euler_paths"](prm, verts, start.x, start.y, float(dt), float(max_time),
                      spec.free_axis, stream.chunk(c),
                      re[lo:hi], im[lo:hi], tm[lo:hi], steps[lo:hi], cens[lo:hi])

    _run_chunks(n, work, threads or default_threads())
    return ExitBatch(re, im, tm, steps, cens)


def euler_exit(spec, start, dt=DEFAULT_DT, max_time=DEFAULT_MAX_TIME, rng=None) -> ExitSample:
    """One Euler exit. Raises ``TimeBudgetExceeded`` (carrying the censored sample) past ``max_time``."""
    stream = _as_stream(rng)
    start = _as_point(start)
    if not contains(spec, start):
        raise DomainError("start point must lie inside the domain")
    code, prm, verts = spec.encode()
    out = [np.empty(1) for _ in range(3)]
    steps = np.empty(1, dtype=np.int64)
    cens = np.empty(1, dtype=np.bool_)
    K.kernels(code)["euler_paths"](prm, verts, start.x, start.y, float(dt), float(max_time), spec.free_axis,
                  stream.generator(), out[0], out[1], out[2], steps, cens)
    sample = ExitSample(Point(out[0][0], out[1][0]), float(out[2][0]), int(steps[0]), bool(cens[0]))
    if sample.censored:
        raise TimeBudgetExceeded(f"path survived past max_time={max_time}", sample)
    return sample


def survival_counts(times, censored, grid) -> np.ndarray:
    """Number of paths alive at each grid time; censored paths count as alive throughout."""
    grid = np.asarray(grid, dtype=float)
    t = np.sort(np.asarray(times, dtype=float)[~np.asarray(censored, dtype=bool)])
    n_cens = int(np.count_nonzero(censored))
    return (len(t) - np.searchsorted(t, grid, side="right")) + n_cens


def survival_curve(spec: DomainSpec, start, dt: float, grid, n: int, rng=None,
                   threads: int | None = None, return_batch: bool = False):
    """Empirical ``P(tau > t)`` on ``grid`` from ``n`` Euler paths run up to ``max(grid)``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be a nonempty ascending sequence")
    if n < 1:
        raise DomainError("n must be positive")
    max_time = float(grid[-1]) + 0.5 * dt
    batch = euler_batch(spec, start, n, dt=dt, max_time=max_time, rng=rng, threads=threads)
    curve = SurvivalCurve(grid, survival_counts(batch.time, batch.censored, grid), n)
    return (curve, batch) if return_batch else curve


def brownian_mean_exit_time_strip(width: float) -> float:
    """``E[tau]`` from the centre of a strip of the given width (interval torsion)."""
    return width * width / 4.0


def ecdf(samples):
    """Sorted sample values and their ECDF heights ``i/n``."""
    x = np.sort(np.asarray(samples, dtype=float))
    return x, np.arange(1, len(x) + 1) / len(x)


def sqrt_dt_extrapolate(m_coarse, m_fine, ratio=4.0):
    """Remove an ``O(sqrt(dt))`` bias from two estimates at ``dt`` and ``dt/ratio``."""
    r = math.sqrt(ratio)
    return (r * m_fine - m_coarse) / (r - 1.0)
