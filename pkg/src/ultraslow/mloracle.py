"""Mittag-Leffler reference values for single-order relaxation.

For a point mass at ``alpha0`` the relaxation solution is
``E_alpha0(-lam t**alpha0)``.  This module evaluates it independently of
the branch-cut machinery in :mod:`ultraslow.laplace` (power series for
small arguments, the classical integral representation through
:func:`scipy.integrate.quad` otherwise) so narrow-box weights can be
checked against it.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import erfcx, rgamma

SERIES_MAX = 1.0


def _series(alpha, x, terms=80):
    k = np.arange(terms)
    return float(np.sum((-x) ** k * rgamma(alpha * k + 1.0)))


def _integral(alpha, x):
    # E_a(-t^a) = (sin(a pi)/pi) int_0^inf e^{-rt} r^(a-1) / (r^(2a) + 2 r^a cos(a pi) + 1) dr
    t = x ** (1.0 / alpha)
    s, c = math.sin(alpha * math.pi), math.cos(alpha * math.pi)

    def f(u):
        # r = e^u
        ra = math.exp(alpha * u)
        return math.exp(-math.exp(u) * t) * ra / (ra * ra + 2.0 * ra * c + 1.0)

    hi = math.log(50.0 / t)
    val = 0.0
    for a, b in ((-np.inf, hi - 10.0), (hi - 10.0, hi)):
        part, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        val += part
    return s / math.pi * val


def mittag_leffler_neg(alpha, x):
    """``E_alpha(-x)`` for ``0 < alpha <= 1`` and ``x >= 0``.

    Uses ``exp(-x)`` at ``alpha = 1`` and ``erfcx(x) = e^{x^2} erfc(x)`` at
    ``alpha = 1/2``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("x must be nonnegative")
    if alpha == 1.0:
        return np.exp(-x_arr)
    if alpha == 0.5:
        return erfcx(x_arr)
    flat = [
        1.0 if xi == 0 else (_series(alpha, xi) if xi <= SERIES_MAX else _integral(alpha, xi))
        for xi in x_arr.ravel()
    ]
    out = np.asarray(flat).reshape(x_arr.shape)
    return out if out.ndim else float(out)


def single_order_relaxation(alpha, lam, t):
    """``E_alpha(-lam t**alpha)``: relaxation under a point-mass weight at ``alpha``."""
    t = np.asarray(t, dtype=float)
    return mittag_leffler_neg(alpha, lam * t**alpha)


def single_order_limit_gap(alpha0, width, lam, t_grid):
    """Sup over ``t_grid`` of ``|v_box - E_alpha0(-lam t**alpha0)|``.

    ``v_box`` is the relaxation solution (``v0 = 1``) for the uniform weight
    of unit mass on ``[alpha0 - width/2, alpha0 + width/2]``.
    """
    from .relaxation import solve_integral
    from .weight import box

    sol = solve_integral(box(alpha0, width), lam, 1.0, t_grid, with_residual=False)
    ref = single_order_relaxation(alpha0, lam, sol.t_grid)
    return float(np.max(np.abs(sol.values - ref)))
