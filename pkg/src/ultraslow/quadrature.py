"""Quadrature building blocks.

Composite Gauss-Legendre rules on geometrically graded panels (used for every
integral over the order variable alpha) and a vectorized adaptive
Gauss-Kronrod integrator (used for the semi-infinite integrals along the
branch cut).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exceptions import QuadratureDivergence

# Kronrod 15-point nodes on [0, 1] (symmetric), embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights scattered onto the 15 Kronrod nodes (zero at Kronrod-only nodes).
_G_ON_K = np.zeros(15)
_G_ON_K[[1, 3, 5]] = _WG[:3]
_G_ON_K[[9, 11, 13]] = _WG[2::-1]
_G_ON_K[7] = _WG[3]


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def graded_breakpoints(lo, hi, levels_lo=16, levels_hi=16, max_width=0.125):
    """Panel breakpoints on ``[lo, hi]`` refined dyadically toward both ends.

    The outer eighth of the interval on each side is split into ``levels``
    dyadic panels (widths halving toward the endpoint); the middle part is
    cut into equal panels no wider than ``max_width``.
    """
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    d = hi - lo
    edge = d / 8.0
    left = [lo] + [lo + edge * 2.0 ** (-k) for k in range(levels_lo, 0, -1)] if levels_lo else [lo]
    right = [hi - edge * 2.0 ** (-k) for k in range(1, levels_hi + 1)] + [hi] if levels_hi else [hi]
    a, b = lo + edge if levels_lo else lo, hi - edge if levels_hi else hi
    m = max(1, int(np.ceil((b - a) / max_width)))
    middle = list(np.linspace(a, b, m + 1))
    pts = np.array(left + middle + right)
    return np.unique(pts)


def composite_rule(breaks, n=16):
    """Composite ``n``-point Gauss-Legendre rule over consecutive breakpoints."""
    breaks = np.asarray(breaks, dtype=float)
    x0, w0 = gauss_legendre(n)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b) + half * x0).ravel()
    w = (half * w0).ravel()
    return x, w


def adaptive_gauss_kronrod(f, a, b, rtol=1e-10, atol=0.0, n_init=16, max_panels=20000):
    """Adaptive G7/K15 integration of a vector-valued integrand.

    Parameters
    ----------
    f : callable
        Maps an array of nodes ``x`` of shape ``(n,)`` to values of shape
        ``(n, m)``; one column per simultaneously integrated output.
    a, b : float
        Finite integration limits.
    rtol, atol : float
        Per-output target ``|error| <= max(atol, rtol * |integral|)``.
    n_init : int
        Number of equal panels to start from.

    Returns
    -------
    integral : ndarray, shape (m,)
    nodes, weights : ndarray
        The final Kronrod nodes and weights, so the converged mesh can be
        reused for other integrands with the same character.
    """
    edges = np.linspace(a, b, n_init + 1)
    done_lo, done_hi, done_val = [], [], []
    lo, hi = edges[:-1], edges[1:]
    total_len = b - a
    while True:
        half = 0.5 * (hi - lo)
        x = (0.5 * (lo + hi))[:, None] + half[:, None] * GK_NODES
        vals = np.asarray(f(x.ravel()), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        vals = vals.reshape(len(lo), 15, -1)
        k = np.einsum("pjm,j->pm", vals, GK_WEIGHTS) * half[:, None]
        g = np.einsum("pjm,j->pm", vals, _G_ON_K) * half[:, None]
        if not np.all(np.isfinite(k)):
            raise QuadratureDivergence("non-finite integrand values")
        err = np.abs(k - g)
        running = k.sum(axis=0) + (np.sum(done_val, axis=0) if done_val else 0.0)
        target = np.maximum(atol, rtol * np.abs(running))
        share = (2.0 * half / total_len)[:, None]
        ok = np.all(err <= target * share, axis=1) | (half < 1e-14 * total_len)
        done_lo.extend(lo[ok])
        done_hi.extend(hi[ok])
        done_val.extend(k[ok])
        if ok.all():
            break
        mid = 0.5 * (lo[~ok] + hi[~ok])
        lo, hi = np.concatenate([lo[~ok], mid]), np.concatenate([mid, hi[~ok]])
        if len(done_lo) + len(lo) > max_panels:
            raise QuadratureDivergence(
                f"adaptive quadrature exceeded {max_panels} panels on [{a}, {b}]"
            )
    order = np.argsort(done_lo)
    plo, phi = np.asarray(done_lo)[order], np.asarray(done_hi)[order]
    half = 0.5 * (phi - plo)
    nodes = ((0.5 * (plo + phi))[:, None] + half[:, None] * GK_NODES).ravel()
    weights = (half[:, None] * GK_WEIGHTS).ravel()
    integral = np.asarray(done_val)[order].sum(axis=0)
    return integral, nodes, weights
