"""Command-line driver: ``csep VERB [options]``.

Verbs write their outputs into ``--output-dir`` (or ``$CSEP_OUTPUT_DIR``).
Any failure prints an error JSON on stderr, also saved as ``error.json``,
and exits nonzero: 2 for usage errors, 3 for runtime failures. ``verify``
exits 1 when a certificate does not hold.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis, io, plot, sampler, spectral
from .exceptions import CSEPError, DomainError
from .geometry import (Disk, DomainSpec, GrimReaperU, Point, Rectangle, StripIm, StripRe, TruncatedU,
                       contains, re_projection)

VERBS = ("sample", "rate-mc", "rate-eig", "torsion", "verify", "plot")
DEFAULT_HEIGHTS = (2.0, 4.0, 6.0, 8.0)


class UsageError(CSEPError):
    pass


@dataclass
class RunConfig:
    command: str
    domain: DomainSpec | None = None
    seed: int = 0
    samples: int = 100_000
    dt: float = sampler.DEFAULT_DT
    shell_eps: float | None = None
    grid_dx: float = 0.01
    truncation_heights: tuple = DEFAULT_HEIGHTS
    output_dir: str = "csep_out"
    format: str = "csv"
    threads: int = 1
    target: analysis.TargetDistribution | None = None
    method: str = "wos"
    start: Point = field(default_factory=lambda: Point(0.0, 0.0))
    t_max: float | None = None
    euler_samples: int = 20_000
    beurling_samples: int = 100_000
    input: str | None = None

    def validate(self):
        if self.command not in VERBS:
            raise UsageError(f"unknown verb {self.command!r}")
        if self.command != "plot" and self.domain is None:
            raise UsageError("--domain is required")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        for name in ("samples", "euler_samples", "beurling_samples", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        for name in ("dt", "grid_dx"):
            if not getattr(self, name) > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.shell_eps is not None and not self.shell_eps > 0:
            raise UsageError("--shell-eps must be positive")
        if self.t_max is not None and not self.t_max > 0:
            raise UsageError("--t-max must be positive")
        if len(self.truncation_heights) < 2 or any(h <= 0 for h in self.truncation_heights):
            raise UsageError("--heights needs at least two positive values")
        if self.format not in ("csv", "json", "svg"):
            raise UsageError("--format is one of csv, json, svg")
        if self.method not in ("wos", "euler"):
            raise UsageError("--method is wos or euler")
        return self

    def to_dict(self):
        return {"command": self.command, "domain": self.domain, "seed": self.seed,
                "samples": self.samples, "dt": self.dt, "shell_eps": self.shell_eps,
                "grid_dx": self.grid_dx, "truncation_heights": list(self.truncation_heights),
                "format": self.format, "target": self.target, "method": self.method,
                "start": self.start, "t_max": self.t_max, "euler_samples": self.euler_samples,
                "beurling_samples": self.beurling_samples}


def _out(config, name):
    return os.path.join(config.output_dir, name)


def _stream(config, k):
    return sampler.RandomStream(config.seed, k)


def _is_u(spec):
    return isinstance(spec, GrimReaperU)


# ---------------------------------------------------------------- verbs


def _draw(config, spec, n, stream=0):
    if config.method == "euler":
        return sampler.euler_batch(spec, config.start, n, dt=config.dt, rng=_stream(config, stream),
                                   threads=config.threads)
    return sampler.wos_batch(spec, config.start, n, shell_eps=config.shell_eps,
                             rng=_stream(config, stream), threads=config.threads)


def cmd_sample(config):
    spec = config.domain
    batch = _draw(config, spec, config.samples)
    batch.to_csv(_out(config, "samples.csv"))
    io.write_ecdf_csv(_out(config, "ecdf.csv"), batch.re, config.target)
    report = {"config": config, "n": len(batch), "censored": int(batch.censored.sum()),
              "support": analysis.empirical_support(batch.re)}
    if config.target is not None:
        report["ks"] = analysis.ks_statistic(batch.re, config.target)
    io.write_json(_out(config, "ks.json"), report)
    return 0


def _rate_guess(spec):
    exact = spectral.closed_form_rate(spec)
    if exact is not None:
        return exact
    w = re_projection(spec).width
    if math.isfinite(w):
        return math.pi ** 2 / (2.0 * w * w)
    return None


def cmd_rate_mc(config):
    spec = config.domain
    t_max = config.t_max
    if t_max is None:
        guess = _rate_guess(spec)
        if guess is None:
            raise UsageError(f"no rate guess for {spec.kind}; pass --t-max")
        t_max = 10.0 / guess
    grid = np.linspace(0.0, t_max, 401)[1:]
    curve = sampler.survival_curve(spec, config.start, config.dt, grid, config.samples,
                                   rng=_stream(config, 1), threads=config.threads)
    curve.to_csv(_out(config, "survival.csv"))
    est = analysis.estimate_rate(curve)
    io.write_json(_out(config, "rate.json"), {"config": config, "estimate": est,
                                              "closed_form": spectral.closed_form_rate(spec)})
    return 0


def _eig(config, spec):
    """Rate and eigen result; ``U`` goes through the truncation sweep."""
    if _is_u(spec):
        sweep = spectral.rate_of_u(spec.scale, config.grid_dx, config.truncation_heights)
        return sweep.limit, sweep.results[-1], sweep
    res = spectral.domain_rate(spec, config.grid_dx)
    return res.rate, res, None


def cmd_rate_eig(config):
    spec = config.domain
    rate, res, sweep = _eig(config, spec)
    res.to_csv(_out(config, "eigenvector.csv"))
    payload = {"config": config, "rate": rate, "result": res,
               "closed_form": spectral.closed_form_rate(spec)}
    if sweep is not None:
        payload["truncation"] = sweep
    io.write_json(_out(config, "eig.json"), payload)
    return 0


def _torsion_mask(config, spec):
    if _is_u(spec):
        return spectral.u_mask(spec.scale, config.grid_dx, max(config.truncation_heights))
    return spectral.rasterize(spec, config.grid_dx, spectral.default_bbox(spec, config.grid_dx))


def cmd_torsion(config):
    spec = config.domain
    tf = spectral.torsion(_torsion_mask(config, spec))
    tf.to_csv(_out(config, "torsion.csv"))
    io.write_json(_out(config, "torsion.json"), {"config": config, "torsion": tf})
    return 0


def run_verify(config) -> dict:
    """The certificate suite for one domain. Timings go under ``timing`` only."""
    spec = config.domain
    if not isinstance(spec, (GrimReaperU, TruncatedU, StripRe, StripIm, Rectangle, Disk)):
        raise UsageError(f"verify does not support {spec.kind}")
    if not contains(spec, config.start):
        raise UsageError("start point must lie inside the domain")
    timing = {}
    certs = []

    t0 = time.perf_counter()
    rate, _, sweep = _eig(config, spec)
    timing["spectral"] = time.perf_counter() - t0
    # numerical rates carry discretisation error; the sweep's stated accuracy is 2%
    rate_tol = 0.02 if sweep is not None else 0.005

    t0 = time.perf_counter()
    wos = sampler.wos_batch(spec, config.start, config.samples, shell_eps=config.shell_eps,
                            rng=_stream(config, 0), threads=config.threads)
    timing["walk_on_spheres"] = time.perf_counter() - t0
    support = analysis.empirical_support(wos.re)
    target = config.target
    if target is None and _is_u(spec):
        target = analysis.Uniform(-spec.scale, spec.scale)

    try:
        certs.append(analysis.check_upper_bound(rate, target))
    except (AttributeError, CSEPError):
        # no target, or one without a variance: use the sample variance of the exits
        var = float(np.var(wos.re, ddof=1))
        c = analysis.make_certificate("upper_bound", rate, spectral.BEST_KNOWN_C2 / var, "<=",
                                      inputs={"rate": rate, "variance": var, "variance_source": "sample"})
        certs.append(c)
    certs.append(analysis.check_lower_bound(rate, support, tol=rate_tol))
    if math.isfinite(re_projection(spec).width):
        certs.append(analysis.check_support_theorem(spec, wos.re))
    if target is not None:
        threshold = max(0.005, 1.95 / math.sqrt(config.samples))
        certs.append(analysis.check_ks(wos.re, target, threshold))

    t0 = time.perf_counter()
    eul = sampler.euler_batch(spec, config.start, config.euler_samples, dt=config.dt,
                              rng=_stream(config, 1), threads=config.threads)
    timing["euler"] = time.perf_counter() - t0
    axis = "im" if isinstance(spec, StripIm) else "re"
    try:
        certs.append(analysis.check_davis(eul, axis, origin=0.0))
    except CSEPError as exc:
        certs.append(analysis.Certificate("davis", math.nan, math.nan, "<=", math.nan, False,
                                          inputs={"error": str(exc)}))

    t0 = time.perf_counter()
    r = np.linspace(0.0, 1.0, 10_001)[:-1]
    b = analysis.beurling_lower_bound(r)
    steps = np.diff(b)
    certs.append(analysis.make_certificate("beurling_monotone", float(steps.max()), 0.0, "<=",
                                           inputs={"grid_points": len(r)}))
    certs.append(analysis.beurling_monte_carlo(0.25, config.beurling_samples, rng=_stream(config, 2),
                                               threads=config.threads))
    timing["beurling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tf = spectral.torsion(_torsion_mask(config, spec))
    timing["torsion"] = time.perf_counter() - t0
    mask_rate = rate if sweep is None else sweep.rate_at_max
    certs.append(analysis.check_torsion_product(mask_rate, tf.sup_norm))

    report = {"config": config, "rate": rate, "empirical_support": support,
              "torsion_at_start": tf.at(config.start.x, config.start.y),
              "certificates": certs, "all_hold": analysis.certificates_hold(certs)}
    if sweep is not None:
        report["truncation"] = sweep
    report["timing"] = timing
    return report


def cmd_verify(config):
    report = run_verify(config)
    io.write_json(_out(config, "verify.json"), report)
    return 0 if report["all_hold"] else 1


def cmd_plot(config):
    out = _out(config, "plot.svg")
    if config.input:
        plot.plot_csv(config.input, out)
    elif config.domain is not None:
        plot.plot_boundary(config.domain, out, height=max(config.truncation_heights))
    else:
        raise UsageError("plot needs --input CSV or --domain")
    return 0


_COMMANDS = {"sample": cmd_sample, "rate-mc": cmd_rate_mc, "rate-eig": cmd_rate_eig,
             "torsion": cmd_torsion, "verify": cmd_verify, "plot": cmd_plot}


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="csep", description="Numerical laboratory for conformal Skorokhod embeddings.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for verb in VERBS:
        s = sub.add_parser(verb)
        s.add_argument("--domain", help="inline kind,params or a JSON file")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--n", type=int, default=100_000, dest="samples")
        s.add_argument("--dt", type=float, default=sampler.DEFAULT_DT)
        s.add_argument("--shell-eps", type=float, default=None)
        s.add_argument("--dx", type=float, default=0.01, dest="grid_dx")
        s.add_argument("--heights", default=",".join(str(h) for h in DEFAULT_HEIGHTS))
        s.add_argument("--output-dir", default=None)
        s.add_argument("--format", default=None)
        s.add_argument("--threads", type=int, default=None)
        s.add_argument("--target", default=None, help="uniform,a,b | sech | cauchy,loc,scale")
        s.add_argument("--method", default="wos", choices=("wos", "euler"))
        s.add_argument("--start", default="0,0")
        s.add_argument("--t-max", type=float, default=None)
        s.add_argument("--n-euler", type=int, default=20_000, dest="euler_samples")
        s.add_argument("--n-beurling", type=int, default=100_000, dest="beurling_samples")
        s.add_argument("--input", default=None, help="CSV to render (plot)")
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    try:
        heights = tuple(float(h) for h in ns.heights.split(","))
    except ValueError as exc:
        raise UsageError("--heights is a comma list of numbers") from exc
    threads = ns.threads if ns.threads is not None else int(os.environ.get("CSEP_THREADS", "1"))
    fmt = ns.format or {"plot": "svg", "verify": "json", "rate-mc": "json", "rate-eig": "json"}.get(
        ns.command, "csv")
    try:
        config = RunConfig(
            command=ns.command,
            domain=io.parse_domain(ns.domain) if ns.domain else None,
            seed=ns.seed, samples=ns.samples, dt=ns.dt, shell_eps=ns.shell_eps,
            grid_dx=ns.grid_dx, truncation_heights=heights,
            output_dir=ns.output_dir or os.environ.get("CSEP_OUTPUT_DIR", "csep_out"),
            format=fmt, threads=threads,
            target=io.parse_target(ns.target) if ns.target else None,
            method=ns.method, start=io.parse_point(ns.start), t_max=ns.t_max,
            euler_samples=ns.euler_samples, beurling_samples=ns.beurling_samples, input=ns.input)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    return config.validate()


def run(config: RunConfig) -> int:
    os.makedirs(config.output_dir, exist_ok=True)
    if not os.access(config.output_dir, os.W_OK):
        raise UsageError(f"output directory {config.output_dir} is not writable")
    if config.domain is not None:
        io.write_json(_out(config, "run_config.json"), config)
    return _COMMANDS[config.command](config)


def _fail(exc, code, output_dir=None):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_status": code}
    text = io.dumps(payload)
    sys.stderr.write(text)
    if output_dir:
        try:
            os.makedirs(output_dir, exist_ok=True)
            with open(os.path.join(output_dir, "error.json"), "w") as fh:
                fh.write(text)
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_config(argv)
    except UsageError as exc:
        return _fail(exc, 2)
    try:
        return run(config)
    except UsageError as exc:
        return _fail(exc, 2, config.output_dir)
    except (CSEPError, ValueError, ArithmeticError, OSError) as exc:
        return _fail(exc, 3, config.output_dir)


if __name__ == "__main__":
    sys.exit(main())
