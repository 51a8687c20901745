"""Acceptance criteria, one test per criterion (5 has two parts).

Each test prints a single ``[ACCEPT n] PASS|FAIL`` line with the measured
numbers before asserting, so the run log doubles as the acceptance report.
Slow: the whole module takes roughly ten minutes on one core.
"""

import json
import math
import time

import numpy as np
import pytest

from csep import analysis, spectral
from csep.analysis import SechDensity, Uniform
from csep.cli import main
from csep.conformal import exact_exit_sampler_u, foliation_image, inverse_map_h_to_u, map_u_to_h
from csep.geometry import (Disk, GrimReaperU, Interval, Point, Rectangle, StripIm, StripRe, grim_reaper_height,
                           inscribed_rectangle)
from csep.sampler import RandomStream, euler_batch, survival_curve, wos_batch

pytestmark = pytest.mark.slow

PI2_8 = math.pi ** 2 / 8
DISK_RATE = 0.5 * spectral.J01 ** 2


@pytest.fixture
def report(capsys):
    def emit(cid, ok, name, detail):
        with capsys.disabled():
            print(f"\n[ACCEPT {cid}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return emit


@pytest.fixture(scope="session")
def u_exits():
    t0 = time.perf_counter()
    b = wos_batch(GrimReaperU(1.0), (0, 0), 10 ** 6, shell_eps=1e-6, rng=RandomStream(2024))
    return b, time.perf_counter() - t0


@pytest.fixture(scope="session")
def u_rate():
    t0 = time.perf_counter()
    r = spectral.rate_of_u(1.0, dx=0.01, H_list=(2, 4, 6, 8))
    return r, time.perf_counter() - t0


def test_c01_uniform_embedding(u_exits, report):
    b, secs = u_exits
    ks = analysis.ks_statistic(b.re, Uniform(-1, 1))
    ok = ks <= 0.005 and secs <= 120
    report(1, ok, "WoS exits from U vs U[-1,1]", f"KS={ks:.5f} (<=0.005), n={len(b)}, {secs:.1f}s (<=120s)")
    assert ok


def test_c02_sharp_rate_of_u(u_rate, report):
    r, secs = u_rate
    rel = abs(r.limit / PI2_8 - 1)
    monotone = all(a >= b for a, b in zip(r.rates, r.rates[1:]))
    upper = spectral.rectangle_rate(10)
    sandwich = PI2_8 <= r.rate_at_max <= upper and PI2_8 * (1 - 0.02) <= r.limit <= upper
    ok = rel <= 0.02 and monotone and sandwich and secs <= 300
    report(2, ok, "rate of U by truncation sweep",
           f"limit={r.limit:.5f} rel.err={rel:.4%} (<=2%), rates={[round(x, 5) for x in r.rates]} "
           f"monotone={monotone}, pi^2/8<=rate(H=8)={r.rate_at_max:.5f}<=rate(R_10)={upper:.5f}, {secs:.1f}s")
    assert ok


def test_c03_closed_form_spectral(report):
    t0 = time.perf_counter()
    cases = []
    strip = StripRe(-1, 1)
    cases.append(("strip w=2", spectral.domain_rate(strip, 2 / 200).rate, spectral.closed_form_rate(strip)))
    rect = Rectangle(0, 1.5, 0, 4)
    cases.append(("rect 1.5x4", spectral.domain_rate(rect, 1.5 / 200).rate, spectral.closed_form_rate(rect)))
    r4 = inscribed_rectangle(4)
    cases.append(("R_4", spectral.domain_rate(r4, 1 / 200).rate, spectral.rectangle_rate(4)))
    disk = Disk(Point(0, 0), 1)
    cases.append(("disk", spectral.domain_rate(disk, 1 / 400).rate, DISK_RATE))
    secs = time.perf_counter() - t0
    errs = {name: abs(got / want - 1) for name, got, want in cases}
    ok = max(errs.values()) <= 0.005 and secs <= 180
    report(3, ok, "closed-form rates",
           ", ".join(f"{k} err={v:.3%}" for k, v in errs.items()) + f" (<=0.5%), {secs:.1f}s (<=180s)")
    assert ok


def test_c04_torsion(report):
    t0 = time.perf_counter()
    masks = {
        "strip": spectral.rasterize(StripRe(-1, 1), 0.01, spectral.default_bbox(StripRe(-1, 1), 0.01)),
        "disk": spectral.rasterize(Disk(Point(0, 0), 1), 1 / 200,
                                   spectral.default_bbox(Disk(Point(0, 0), 1), 1 / 200)),
        "rect": spectral.rasterize(Rectangle(-1, 2, -1, 1), 0.01, Rectangle(-1, 2, -1, 1)),
        "U(H=8)": spectral.u_mask(1.0, 0.01, 8.0),
    }
    fields = {k: spectral.torsion(m) for k, m in masks.items()}
    products = {k: spectral.principal_rate(m).rate * fields[k].sup_norm for k, m in masks.items()}
    secs = time.perf_counter() - t0
    strip_err = abs(fields["strip"].sup_norm - 1.0)
    disk_err = abs(fields["disk"].value_at_origin / 0.5 - 1)
    ok = strip_err <= 0.01 and disk_err <= 0.01 and max(products.values()) <= 2.0379 and secs <= 120
    report(4, ok, "torsion",
           f"strip sup={fields['strip'].sup_norm:.5f} (1 +-1%), disk u(0)={fields['disk'].value_at_origin:.5f} "
           f"(0.5 +-1%), rate*sup={ {k: round(v, 4) for k, v in products.items()} } (<=2.0379), {secs:.1f}s")
    assert ok


def test_c05a_upper_bound_corollary(u_rate, report):
    r, _ = u_rate
    cert = analysis.check_upper_bound(r.limit, Uniform(-1, 1), spectral.best_known_c2())
    v2 = spectral.vogt_constant(2)
    ok = cert.holds and abs(cert.rhs - 6.1137) <= 1e-4 and abs(v2 - 2.1063) <= 1e-3
    report("5a", ok, "upper bound for U and Vogt d=2",
           f"rate={cert.lhs:.5f} <= rhs={cert.rhs:.6f} (6.1137), holds={cert.holds}, vogt(2)={v2:.5f} (2.1063)")
    assert ok


@pytest.mark.xfail(strict=True, reason="the displayed Vogt formula gives 1.7305 at d=1, not 1.8899")
def test_c05b_vogt_d1(report):
    v1 = spectral.vogt_constant(1)
    ok = abs(v1 - 1.8899) <= 1e-3
    report("5b", ok, "Vogt d=1", f"vogt(1)={v1:.5f}, criterion expects 1.8899 +-1e-3")
    assert ok


def test_c06_lower_bound_sharpness(u_rate, u_exits, report):
    r, _ = u_rate
    b, _ = u_exits
    support = analysis.empirical_support(b.re)
    cert = analysis.check_lower_bound(r.limit, support, tol=0.03)
    rel_slack = abs(cert.slack) / cert.rhs
    synthetic = analysis.check_lower_bound(1.0, Interval(-1, 1))
    ok = cert.holds and rel_slack <= 0.03 and not synthetic.holds
    report(6, ok, "lower bound sharp at U",
           f"rate={cert.lhs:.5f}, bound={cert.rhs:.5f}, |slack|/bound={rel_slack:.3%} (<=3%), "
           f"synthetic (1.0, [-1,1]) holds={synthetic.holds} (must fail)")
    assert ok


def _mc_rate(spec, exact, seed):
    grid = np.linspace(0.0, 7.0 / exact, 401)[1:]
    curve = survival_curve(spec, (0, 0), 1e-4, grid, 10 ** 6, rng=RandomStream(seed))
    return analysis.estimate_rate(curve)


def test_c07_monte_carlo_rate(report):
    t0 = time.perf_counter()
    strip = _mc_rate(StripRe(-1, 1), PI2_8, 71)
    disk = _mc_rate(Disk(Point(0, 0), 1), DISK_RATE, 72)
    secs = time.perf_counter() - t0
    es = abs(strip.rate / PI2_8 - 1)
    ed = abs(disk.rate / DISK_RATE - 1)
    ok = es <= 0.05 and ed <= 0.05 and secs <= 600
    report(7, ok, "survival-curve rate, n=1e6, dt=1e-4",
           f"strip {strip.rate:.4f}+-{strip.stderr:.4f} err={es:.2%}, disk {disk.rate:.4f}+-{disk.stderr:.4f} "
           f"err={ed:.2%} (<=5%), {secs:.1f}s (<=600s)")
    assert ok


def test_c08_sech_embedding(report):
    t0 = time.perf_counter()
    b = euler_batch(StripIm(-1, 1), (0, 0), 10 ** 5, dt=1e-4, rng=RandomStream(8))
    secs = time.perf_counter() - t0
    ks = analysis.ks_statistic(b.re, SechDensity())
    ok = ks <= 0.01 and not b.censored.any() and secs <= 300
    report(8, ok, "Euler exits from horizontal strip vs sech law", f"KS={ks:.5f} (<=0.01), {secs:.1f}s (<=300s)")
    assert ok


def test_c09_optional_stopping(report):
    certs = {}
    certs["strip"] = analysis.check_davis(euler_batch(StripRe(-1, 1), (0, 0), 10 ** 5, rng=RandomStream(91)))
    certs["disk"] = analysis.check_davis(euler_batch(Disk(Point(0, 0), 1), (0, 0), 10 ** 5, rng=RandomStream(92)))
    u = euler_batch(GrimReaperU(1.0), (0, 0), 30_000, rng=RandomStream(93))
    certs["U"] = analysis.check_davis(u)
    # cross-check the U exit time against the torsion solve, extrapolated in dx
    t1 = spectral.torsion(spectral.u_mask(1.0, 0.01, 8.0)).value_at_origin
    t2 = spectral.torsion(spectral.u_mask(1.0, 0.005, 8.0)).value_at_origin
    torsion_u, torsion_err = 2 * t2 - t1, abs(t2 - t1)
    mc_err = certs["U"].inputs["rhs_stderr"]
    agree = abs(certs["U"].rhs - torsion_u) <= 3 * math.hypot(mc_err, torsion_err)
    strip_gap = certs["strip"].inputs["gap_sigma"]
    ok = all(c.holds for c in certs.values()) and strip_gap < 3 and agree
    report(9, ok, "E[X^2] <= E[tau]",
           "; ".join(f"{k}: {c.lhs:.4f} <= {c.rhs:.4f} (3 sigma={c.tolerance:.4f}) holds={c.holds}"
                     for k, c in certs.items())
           + f"; strip gap={strip_gap:.2f} sigma (<3); U torsion={torsion_u:.4f}+-{torsion_err:.4f} agrees={agree}")
    assert ok


def test_c10_support_theorem(u_exits, report):
    b, _ = u_exits
    emp = analysis.empirical_support(b.re)
    gap_u = max(abs(emp.lo + 1), abs(emp.hi - 1))
    cert_u = analysis.check_support_theorem(GrimReaperU(1.0), b.re)
    rect = Rectangle(-1, 2, -1, 1)
    rb = wos_batch(rect, (0, 0), 10 ** 5, rng=RandomStream(101))
    cert_r = analysis.check_support_theorem(rect, rb.re)
    small = wos_batch(StripIm(-1, 1), (0, 0), 10 ** 3, rng=RandomStream(102)).re
    large = wos_batch(StripIm(-1, 1), (0, 0), 10 ** 5, rng=RandomStream(103)).re
    grows = analysis.extremes_grow(small, np.concatenate([small, large]))
    wide = -large.min() > 2 and large.max() > 2
    ok = gap_u < 0.01 and cert_u.holds and cert_r.holds and grows and wide
    report(10, ok, "support theorem",
           f"U support=[{emp.lo:.6f}, {emp.hi:.6f}] gap={gap_u:.2e} (<0.01); rectangle gap={cert_r.lhs:.4f} "
           f"<= {cert_r.rhs:.4f}; strip-Im extremes grow={grows}, min={large.min():.2f}, max={large.max():.2f} "
           "(beyond +-2)")
    assert ok


def test_c11_beurling(report):
    grid = np.linspace(0.0, 1.0, 10_001)[:-1]
    mono = bool(np.all(np.diff(analysis.beurling_lower_bound(grid)) < 0))
    t0 = time.perf_counter()
    cert = analysis.beurling_monte_carlo(0.25, 10 ** 5, rng=RandomStream(11))
    secs = time.perf_counter() - t0
    ok = mono and cert.holds
    report(11, ok, "Beurling estimate",
           f"strictly decreasing on 1e4 grid={mono}; slit-disk hit frequency={cert.lhs:.5f} vs bound "
           f"{cert.rhs:.5f} (one-sided, 3 sigma={cert.tolerance:.5f}), {secs:.1f}s")
    assert ok


def test_c12_conformal_identities(report):
    rng = np.random.default_rng(12)
    x = rng.uniform(-0.999, 0.999, 10 ** 5)
    z = x + 1j * (grim_reaper_height(x) + rng.exponential(1.0, x.size) + 1e-9)
    rt = float(np.max(np.abs(inverse_map_h_to_u(map_u_to_h(z)) - z)))
    xf = rng.uniform(-0.99, 0.99, 10 ** 4)
    yf = rng.uniform(0.0, 3.0, 10 ** 4)
    direct = map_u_to_h(xf + 1j * (grim_reaper_height(xf) + yf))
    fol = foliation_image(xf, yf)
    fol_err = float(np.max(np.abs(direct - fol) / np.maximum(1.0, np.abs(direct))))
    ks = analysis.ks_statistic(exact_exit_sampler_u(RandomStream(12), 10 ** 6), Uniform(-1, 1))
    ok = rt < 1e-12 and fol_err < 1e-12 and ks <= 0.002
    report(12, ok, "conformal identities",
           f"round trip max err={rt:.2e} (<1e-12), foliation rel err={fol_err:.2e} (<1e-12), "
           f"exact sampler KS={ks:.5f} (<=0.002)")
    assert ok


def test_c13_reproducible_verify(tmp_path, report):
    codes = []
    for threads in (1, 2):
        codes.append(main(["verify", "--domain", "grim_reaper_u", "--seed", "7", "--threads", str(threads),
                           "--output-dir", str(tmp_path / f"t{threads}")]))
    reps = []
    for threads in (1, 2):
        rep = json.load(open(tmp_path / f"t{threads}" / "verify.json"))
        rep.pop("timing")
        reps.append(rep)
    same = reps[0] == reps[1]
    ok = same and codes == [0, 0]
    report(13, ok, "verify reproducible across thread counts",
           f"identical certificate JSON={same}, exit codes={codes}")
    assert ok
