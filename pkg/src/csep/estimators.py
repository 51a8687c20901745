"""scikit-learn style wrappers around the samplers, solvers and tests.

The solvers take a domain rather than a data matrix, so ``fit`` accepts a
``DomainSpec`` there; ``predict``/``transform`` evaluate the fitted field at
an ``(n, 2)`` array of points.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analysis, spectral
from .exceptions import DomainError
from .geometry import DomainSpec, domain_from_dict
from .sampler import SurvivalCurve, survival_counts


def _as_spec(domain) -> DomainSpec:
    if isinstance(domain, DomainSpec):
        return domain
    if isinstance(domain, dict):
        return domain_from_dict(domain)
    raise DomainError("expected a DomainSpec or its dict form")


def _points(X):
    return check_array(X, dtype=float, ensure_min_features=2)[:, :2]


class SurvivalRateEstimator(BaseEstimator):
    """Exponential tail rate from exit times.

    ``fit(X)`` takes exit times of shape ``(n,)`` or ``(n, 2)`` with a censoring
    flag in the second column, evaluates survival counts on ``grid`` and fits
    the slope of ``-log P(t)``. ``predict(t)`` returns the fitted ``P(tau > t)``.
    """

    def __init__(self, grid=None, p_lo=1e-3, p_hi=1e-1, min_points=4):
        self.grid = grid
        self.p_lo = p_lo
        self.p_hi = p_hi
        self.min_points = min_points

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_2d=False)
        if X.ndim == 1:
            times, cens = X, np.zeros(len(X), dtype=bool)
        else:
            times, cens = X[:, 0], X[:, 1].astype(bool)
        grid = self.grid
        if grid is None:
            grid = np.linspace(0.0, np.quantile(times[~cens], 0.9995), 201)[1:]
        grid = np.asarray(grid, dtype=float)
        self.curve_ = SurvivalCurve(grid, survival_counts(times, cens, grid), len(times))
        self.estimate_ = analysis.estimate_rate(self.curve_, self.p_lo, self.p_hi, self.min_points)
        self.rate_ = self.estimate_.rate
        self.stderr_ = self.estimate_.stderr
        return self

    def predict(self, X):
        check_is_fitted(self, "estimate_")
        t = check_array(X, dtype=float, ensure_2d=False).ravel()
        return np.exp(-self.estimate_.intercept - self.rate_ * t)


class DirichletRateSolver(BaseEstimator, TransformerMixin):
    """Principal Dirichlet eigenpair of a rasterised domain.

    ``fit(domain)`` stores ``rate_`` and ``result_``; ``transform(X)`` returns
    the eigenfunction (max-normalised) at the points ``X``.
    """

    def __init__(self, dx=0.01, method="lanczos", tol=1e-8, strip_aspect=20.0):
        self.dx = dx
        self.method = method
        self.tol = tol
        self.strip_aspect = strip_aspect

    def fit(self, X, y=None):
        spec = _as_spec(X)
        if not self.dx > 0:
            raise DomainError("dx must be positive")
        mask = spectral.rasterize(spec, self.dx, spectral.default_bbox(spec, self.dx, self.strip_aspect))
        self.result_ = spectral.principal_rate(mask, tol=self.tol, method=self.method)
        self.rate_ = self.result_.rate
        self.domain_ = spec
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        P = _points(X)
        return spectral.bilinear(self.result_.mask, self.result_.eigenvector, P[:, 0], P[:, 1])


class TorsionSolver(BaseEstimator):
    """Expected exit time ``E_x[tau]``; ``predict(X)`` interpolates the torsion field."""

    def __init__(self, dx=0.01, tol=1e-10, strip_aspect=20.0):
        self.dx = dx
        self.tol = tol
        self.strip_aspect = strip_aspect

    def fit(self, X, y=None):
        spec = _as_spec(X)
        if not self.dx > 0:
            raise DomainError("dx must be positive")
        mask = spectral.rasterize(spec, self.dx, spectral.default_bbox(spec, self.dx, self.strip_aspect))
        self.field_ = spectral.torsion(mask, tol=self.tol)
        self.sup_norm_ = self.field_.sup_norm
        return self

    def predict(self, X):
        check_is_fitted(self, "field_")
        P = _points(X)
        return np.asarray(self.field_.at(P[:, 0], P[:, 1]), dtype=float).reshape(-1)


class EmbeddingTest(BaseEstimator, TransformerMixin):
    """Goodness of fit of exit abscissae against a target law.

    ``fit`` records the KS distance and the empirical support; ``transform``
    is the probability integral transform ``F(x)``, uniform under the null.
    """

    def __init__(self, target=None, threshold=0.005):
        self.target = target
        self.threshold = threshold

    def fit(self, X, y=None):
        x = check_array(X, dtype=float, ensure_2d=False).ravel()
        target = self.target if self.target is not None else analysis.Uniform(-1.0, 1.0)
        self.target_ = target
        self.ks_ = analysis.ks_statistic(x, target)
        self.support_ = analysis.empirical_support(x)
        self.certificate_ = analysis.check_ks(x, target, self.threshold)
        return self

    def transform(self, X):
        check_is_fitted(self, "target_")
        x = check_array(X, dtype=float, ensure_2d=False)
        return self.target_.cdf(x)
