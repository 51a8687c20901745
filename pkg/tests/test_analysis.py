import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from csep import analysis
from csep.analysis import (Cauchy, SechDensity, Uniform, beurling_lower_bound, check_davis, check_lower_bound,
                           check_support_theorem, check_upper_bound, empirical_support, estimate_rate,
                           extremes_grow, ks_statistic, make_certificate)
from csep.exceptions import CensoredData, DomainError, VarianceUndefined, WindowTooNarrow
from csep.geometry import GrimReaperU, Interval, Rectangle, StripIm
from csep.sampler import ExitBatch, SurvivalCurve
from csep.spectral import vogt_constant


def test_target_cdfs():
    for tgt in (Uniform(-1, 1), SechDensity(), Cauchy(0.5, 2.0)):
        x = np.linspace(-50, 50, 2001)
        F = tgt.cdf(x)
        assert np.all(np.diff(F) >= 0)
        assert F[0] < 0.02 and F[-1] > 0.98


def test_sech_cdf_is_antiderivative_of_density():
    # sech(a)/2 written without overflow
    dens = lambda t: math.exp(-math.pi * abs(t) / 2) / (1 + math.exp(-math.pi * abs(t)))
    for x in (-2.0, -0.3, 0.0, 1.1, 4.0):
        val, _ = quad(dens, -np.inf, x)
        assert SechDensity().cdf(x) == pytest.approx(val, abs=1e-10)
    var, _ = quad(lambda t: t * t * dens(t), -np.inf, np.inf)
    assert SechDensity().variance == pytest.approx(var, rel=1e-8)


def test_moments():
    assert Uniform(-1, 1).variance == pytest.approx(1 / 3)
    assert Uniform(0, 3).mean == 1.5
    with pytest.raises(VarianceUndefined):
        Cauchy().variance
    with pytest.raises(DomainError):
        Uniform(1, 0)


def test_ks_on_quantiles():
    n = 100
    q = -1 + 2 * (np.arange(1, n + 1) - 0.5) / n
    assert ks_statistic(q, Uniform(-1, 1)) == pytest.approx(1 / (2 * n))
    with pytest.raises(DomainError):
        ks_statistic([], Uniform())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(-5, 5), st.integers(0, 1000))
def test_ks_invariant_under_affine_maps(a, b, seed):
    x = np.random.default_rng(seed).uniform(-1, 1, 200)
    base = ks_statistic(x, Uniform(-1, 1))
    moved = ks_statistic(a * x + b, Uniform(b - a, b + a))
    assert moved == pytest.approx(base, abs=1e-12)


def test_estimate_rate_exact_exponential():
    t = np.linspace(0.1, 3.0, 300)
    n = 10 ** 6
    curve = SurvivalCurve(t, n * np.exp(-3 * t), n)
    est = estimate_rate(curve)
    assert est.rate == pytest.approx(3.0, rel=1e-12)
    assert est.n_points >= 4 and est.window[0] < est.window[1]
    assert est.stderr > 0


def test_estimate_rate_window_too_narrow():
    curve = SurvivalCurve([0.1, 0.2, 0.3], [50, 20, 5], 100)
    with pytest.raises(WindowTooNarrow):
        estimate_rate(curve)


def test_empirical_support():
    assert empirical_support([0.0]) == Interval(0, 0)
    assert empirical_support([3, -1, 2]) == Interval(-1, 3)


def test_upper_bound_certificates():
    c = check_upper_bound(math.pi ** 2 / 8, Uniform(-1, 1), 2.0379)
    assert c.holds and c.rhs == pytest.approx(6.1137)
    c = check_upper_bound(math.pi ** 2 / 8, Uniform(-1, 1), vogt_constant(2))
    assert c.holds and c.rhs == pytest.approx(6.319, abs=1e-3)
    assert not check_upper_bound(7.0, Uniform(-1, 1)).holds
    with pytest.raises(VarianceUndefined):
        check_upper_bound(1.0, Cauchy())


def test_lower_bound_certificates():
    c = check_lower_bound(math.pi ** 2 / 8, Interval(-1, 1))
    assert c.holds and c.slack == pytest.approx(0.0, abs=1e-15)
    assert not check_lower_bound(1.0, Interval(-1, 1)).holds
    c = check_lower_bound(0.4, Interval(-math.inf, math.inf))
    assert c.holds and c.rhs == 0.0
    # relative tolerance for numerical rates
    assert check_lower_bound(1.23, Interval(-1, 1), tol=0.01).holds
    with pytest.raises(DomainError):
        check_lower_bound(1.0, Interval(0, 0))


def _batch(x, t, cens=None):
    n = len(x)
    return ExitBatch(np.asarray(x, float), np.zeros(n), np.asarray(t, float), np.ones(n, dtype=np.int64),
                     np.zeros(n, bool) if cens is None else np.asarray(cens))


def test_davis_certificate():
    rng = np.random.default_rng(0)
    x = rng.choice([-1.0, 1.0], 1000)
    t = rng.exponential(1.0, 1000)
    c = check_davis(_batch(x, t))
    assert c.holds and c.lhs == 1.0
    assert c.inputs["gap_sigma"] < 3
    # a second moment far above the mean time must fail
    assert not check_davis(_batch(3 * x, t)).holds
    with pytest.raises(CensoredData):
        check_davis(_batch(x, t, cens=np.r_[True, np.zeros(999, bool)]))
    with pytest.raises(CensoredData):
        check_davis(_batch(x, np.full(1000, np.nan)))


def test_beurling_bound():
    assert beurling_lower_bound(0.0) == 1.0
    assert 0 < beurling_lower_bound(1 - 1e-12) < 1e-5
    r = 0.25
    direct = 1 - (2 / math.pi) * math.atan(2 * math.sqrt(r) / (1 - r))
    assert beurling_lower_bound(r) == pytest.approx(direct, rel=1e-14)
    assert beurling_lower_bound(r) == pytest.approx(1 - (2 / math.pi) * math.atan(4 / 3))
    assert beurling_lower_bound(r) == pytest.approx(0.4097, abs=1e-4)
    grid = np.linspace(0, 1, 10001)[:-1]
    assert np.all(np.diff(beurling_lower_bound(grid)) < 0)
    with pytest.raises(DomainError):
        beurling_lower_bound(1.0)


def test_beurling_check():
    assert analysis.check_beurling(4200, 10000, 0.25).holds
    assert not analysis.check_beurling(3500, 10000, 0.25).holds


def test_support_theorem():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, 10 ** 5)
    c = check_support_theorem(GrimReaperU(1.0), x)
    assert c.holds and c.lhs < 1e-3
    assert not check_support_theorem(GrimReaperU(1.0), 0.5 * x).holds
    c = check_support_theorem(Rectangle(-1, 2, -1, 1), rng.uniform(-1, 2, 1000))
    assert c.holds
    assert analysis.support_tolerance(2.0, 100) == pytest.approx(1.0)
    assert analysis.support_tolerance(2.0, 100, True) == pytest.approx(0.06)
    # unbounded projections: no endpoint is checked
    assert check_support_theorem(StripIm(-1, 1), x).inputs["checked_endpoints"] == 0


def test_extremes_grow():
    rng = np.random.default_rng(2)
    big = rng.standard_cauchy(10 ** 4)
    assert extremes_grow(big[:100], big)
    assert not extremes_grow(big, big[:100])


def test_certificates_are_pure():
    a = check_upper_bound(1.2, Uniform(-1, 1)).to_dict()
    b = check_upper_bound(1.2, Uniform(-1, 1)).to_dict()
    assert a == b
    with pytest.raises(DomainError):
        make_certificate("x", 1, 2, "<")
    c = make_certificate("x", 1.0, 1.0 + 1e-9, "~=", tolerance=1e-6)
    assert c.holds and c.slack < 0
