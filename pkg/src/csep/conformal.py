"""The conformal map of U onto the upper half-plane and the laws it transports.

``f(z) = 2i exp(-i pi z / 2) - i`` sends U onto the upper half-plane with
``f(0) = i``. Pulling the Cauchy harmonic measure of the half-plane back
through ``f`` shows that the real part of the exit position from U is uniform
on ``[-1, 1]``.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError

_HALF_PI = 0.5 * np.pi


def map_u_to_h(z):
    """Evaluate ``f(z) = 2i exp(-i pi z / 2) - i``. Accepts scalars or arrays."""
    z = np.asarray(z, dtype=complex)
    out = 2j * np.exp(-1j * _HALF_PI * z) - 1j
    return complex(out) if out.ndim == 0 else out


def map_u_to_h_derivative(z):
    z = np.asarray(z, dtype=complex)
    out = np.pi * np.exp(-1j * _HALF_PI * z)
    return complex(out) if out.ndim == 0 else out


def foliation_image(x, y):
    """Image under ``f`` of the point ``x + i(h(x) + y)`` on the lifted boundary curve.

    Equals ``exp(pi y/2) tan(pi x/2) + i (exp(pi y/2) - 1)``, so each translate
    of the boundary lands on a horizontal line.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(np.abs(x) < 1.0)) or np.any(y < 0):
        raise DomainError("foliation_image needs |x| < 1 and y >= 0")
    g = np.exp(_HALF_PI * y)
    out = g * np.tan(_HALF_PI * x) + 1j * (g - 1.0)
    return complex(out) if out.ndim == 0 else out


def inverse_map_h_to_u(w):
    """Inverse of ``f`` on the open upper half-plane (principal logarithm)."""
    w = np.asarray(w, dtype=complex)
    if np.any(~(w.imag > 0)):
        raise DomainError("inverse_map_h_to_u needs Im w > 0")
    out = (2j / np.pi) * np.log((w + 1j) / 2j)
    return complex(out) if out.ndim == 0 else out


def exact_cdf_re_exit_u(x):
    """CDF of ``Re W`` at the exit from U started at 0, i.e. the U[-1, 1] CDF."""
    x = np.asarray(x, dtype=float)
    out = np.clip(0.5 * (x + 1.0), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def cauchy_to_exit(c):
    """Push a half-plane exit abscissa (pole at i) back to ``Re`` of the U exit."""
    c = np.asarray(c, dtype=float)
    out = (2.0 / np.pi) * np.arctan(c)
    return float(out) if out.ndim == 0 else out


def exact_exit_sampler_u(rng, size=None):
    """Draw ``Re W`` at the exit from U exactly.

    A standard Cauchy variate is produced by inverse CDF, ``tan(pi (U - 1/2))``,
    and mapped through ``(2/pi) arctan``. ``rng`` is a ``numpy`` Generator or a
    ``RandomStream``.
    """
    gen = rng.generator() if hasattr(rng, "generator") else rng
    u = gen.random(size)
    c = np.tan(np.pi * (u - 0.5))
    return cauchy_to_exit(c)
