"""Scalar relaxation ``D^(mu) v + lam v = 0``, ``v(0) = v0``.

Three solvers share the :class:`RelaxationSolution` container:

* :func:`solve_integral` -- the closed-form spectral representation
  ``v(t) = v0 (lam/pi) int_0^inf e^{-rt} G(r) dr / r``;
* :func:`solve_series` -- the Volterra equation ``v = v0 - lam g * v``
  (whose Neumann series is the power series in ``g``), discretized by
  product integration against exact moments of ``g``;
* :func:`solve_l1` -- the L1 time-stepping scheme, the scalar counterpart
  of the Galerkin solver in :mod:`ultraslow.diffusion`.

:class:`L1Operator` discretizes the distributed Caputo derivative on an
arbitrary grid and is reused by the diffusion solver.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import laplace
from .exceptions import NoConvergence

RESIDUAL_MAX_NODES = 6000


def default_grid(T=5.0, n=1000, graded_fraction=0.5, t_graded=None):
    """Time grid graded quadratically near 0 with a uniform tail.

    The first ``graded_fraction * n`` intervals cover ``[0, t_graded]`` with
    ``t_i = t_graded (i/m)**2``; the remaining ones are uniform.
    ``t_graded`` defaults to the value that makes the step continuous.
    """
    m = max(2, int(round(graded_fraction * n)))
    rest = n - m
    if rest <= 0:
        return T * (np.arange(n + 1) / n) ** 2
    if t_graded is None:
        # step continuity: 2 t_g / m == (T - t_g) / rest
        t_graded = T * m / (m + 2 * rest)
    head = t_graded * (np.arange(m + 1) / m) ** 2
    tail = np.linspace(t_graded, T, rest + 1)[1:]
    return np.concatenate([head, tail])


def geometric_grid(t_first, T, ratio=1.05, n_head=10):
    """``0``, ``n_head`` uniform steps up to ``t_first``, then geometric growth to ``T``."""
    head = np.linspace(0.0, t_first, n_head + 1)
    n_geo = int(np.ceil(np.log(T / t_first) / np.log(ratio)))
    geo = np.geomspace(t_first, T, n_geo + 1)[1:]
    return np.concatenate([head, geo])


def _check_grid(t):
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing and start at 0")
    return t


def _table_or_zero(table, s):
    out = np.zeros(s.shape)
    pos = s > 0
    out[pos] = table(s[pos])
    return out


class L1Operator:
    """L1 discretization of ``D^(mu)`` on a fixed grid.

    ``(D f)(t_n) ~= sum_{j<n} a[n, j] (f_{j+1} - f_j)`` with
    ``a[n, j] = (K(t_n - t_j) - K(t_n - t_{j+1})) / (t_{j+1} - t_j)`` the
    panel average of ``k(t_n - .)``.  On a uniform grid ``a[n, n-1-j]`` are
    the weights ``int mu h^-alpha ((j+1)^(1-alpha) - j^(1-alpha)) /
    Gamma(2-alpha)``.
    """

    def __init__(self, mu, t):
        self.mu = mu
        self.t = t = _check_grid(t)
        n = len(t)
        h = np.diff(t)
        ii, jj = np.tril_indices(n, -1)  # pairs n > j
        s_far = t[ii] - t[jj + 1]  # distance to the panel end nearest t_n
        hj = h[jj]
        # panel averages of k, by K differences when the panel is near t_n,
        # by 3-point Gauss on k when it is far (K difference would cancel)
        near = hj > 1e-3 * s_far
        s_min, s_max = h.min() * 0.5, t[-1] - t[0]
        big_k = laplace.LogLogTable(lambda x: laplace.k_integral(mu, x), s_min, s_max)
        small_k = laplace.LogLogTable(lambda x: laplace.k_kernel(mu, x), s_min, s_max)
        vals = np.empty(len(ii))
        s0 = t[ii[near]] - t[jj[near]]
        vals[near] = (big_k(s0) - _table_or_zero(big_k, s_far[near])) / hj[near]
        far = ~near
        if np.any(far):
            x, w = np.polynomial.legendre.leggauss(3)
            s_mid = s_far[far] + 0.5 * hj[far]
            pts = s_mid[:, None] + 0.5 * hj[far][:, None] * x
            vals[far] = small_k(pts) @ (0.5 * w)
        a = np.zeros((n, n - 1))
        a[ii, jj] = vals
        self.a = a

    @property
    def b0(self):
        """Diagonal weights ``a[n, n-1]`` (n >= 1)."""
        return self.a[np.arange(1, len(self.t)), np.arange(len(self.t) - 1)]

    def __call__(self, f):
        """Apply to samples ``f`` of shape ``(len(t),)`` or ``(len(t), m)``."""
        f = np.asarray(f, dtype=float)
        df = np.diff(f, axis=0)
        return np.einsum("nj,j...->n...", self.a, df)

    def at(self, n, f):
        """``(D f)(t_n)`` only."""
        df = np.diff(np.asarray(f, dtype=float)[: n + 1], axis=0)
        return np.einsum("j,j...->...", self.a[n, :n], df)


@dataclass
class RelaxationSolution:
    """Samples of a relaxation solution on a time grid."""

    t_grid: np.ndarray
    values: np.ndarray
    lam: float
    v0: float
    method: str
    residual_sup: float = field(default=float("nan"))

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)

    def scaled(self, v0):
        """Same solution for another initial value (the problem is linear)."""
        factor = v0 / self.v0 if self.v0 != 0 else 0.0
        return RelaxationSolution(self.t_grid, self.values * factor, self.lam, v0, self.method,
                                  abs(factor) * self.residual_sup)

    def to_csv(self, path=None):
        """Write ``t,v,method,lambda,v0`` rows with 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "v", "method", "lambda", "v0"])
        for t, v in zip(self.t_grid, self.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}", self.method, f"{self.lam:.17g}", f"{self.v0:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [float(r["t"]) for r in rows],
            [float(r["v"]) for r in rows],
            float(rows[0]["lambda"]),
            float(rows[0]["v0"]),
            rows[0]["method"],
        )


def residual(mu, lam, t, values, op=None):
    """Discrete residual ``D^(mu) v + lam v`` at ``t_1, ..., t_N``."""
    op = op or L1Operator(mu, t)
    return (op(values) + lam * np.asarray(values))[1:]


def _attach_residual(mu, sol, op=None):
    if len(sol.t_grid) <= RESIDUAL_MAX_NODES:
        sol.residual_sup = float(np.max(np.abs(residual(mu, sol.lam, sol.t_grid, sol.values, op))))
    return sol


def solve_integral(mu, lam, v0, t_grid, rtol=laplace.DEFAULT_RTOL, with_residual=True):
    """Evaluate the spectral representation of the solution on ``t_grid``.

    ``t_grid`` must start at 0; ``v(0) = v0`` is assigned directly (the
    integral is continuous there).  Integrability of ``mu/alpha`` is not
    required for evaluation.
    """
    t = _check_grid(t_grid)
    rule = laplace.CutRule(laplace.relaxation_log_density(mu, lam), laplace._probe_grid(t[1:]), rtol=rtol)
    unit = np.concatenate([[1.0], rule(t[1:])])
    sol = RelaxationSolution(t, v0 * unit, lam, v0, "Integral")
    return _attach_residual(mu, sol) if with_residual else sol


def solve_l1(mu, lam, v0, t_grid, op=None, with_residual=True):
    """L1 time stepping: ``(b0 + lam) v_n = b0 v_{n-1} - history``."""
    t = _check_grid(t_grid)
    op = op or L1Operator(mu, t)
    a = op.a
    v = np.empty(len(t))
    v[0] = v0
    dv = np.zeros(len(t) - 1)
    for n in range(1, len(t)):
        b0 = a[n, n - 1]
        hist = a[n, : n - 1] @ dv[: n - 1]
        v[n] = (b0 * v[n - 1] - hist) / (b0 + lam)
        dv[n - 1] = v[n] - v[n - 1]
    if not np.all(np.isfinite(v)):
        raise NoConvergence("L1 stepping produced non-finite values")
    sol = RelaxationSolution(t, v, lam, v0, "L1")
    return _attach_residual(mu, sol, op) if with_residual else sol


def volterra_weights(mu, t, rtol=laplace.DEFAULT_RTOL):
    """Product-integration weights for ``(g * v)(t_n)`` with ``v`` piecewise linear.

    Returns ``(w_left, w_right)``, each ``(len(t), len(t)-1)``, such that
    ``(g*v)(t_n) ~= sum_j w_left[n, j] v_j + w_right[n, j] v_{j+1}``.  The
    moments ``int g`` and ``int s g`` over each panel come from the first
    and second antiderivatives of ``g``, evaluated exactly through the cut
    representation.
    """
    t = _check_grid(t)
    n = len(t)
    ii, jj = np.tril_indices(n, -1)
    s_hi = t[ii] - t[jj]  # sigma = t_n - tau at the panel's left end
    s_lo = t[ii] - t[jj + 1]
    s_min, s_max = 0.5 * np.diff(t).min(), t[-1]
    rule = laplace.g_rule(mu, s_min, s_max, rtol=rtol, moments=True)
    p1 = laplace.LogLogTable(lambda x: rule.apply(laplace.primitive_kernel, x), s_min, s_max)
    p2 = laplace.LogLogTable(lambda x: rule.apply(laplace.second_primitive_kernel, x), s_min, s_max)
    g1_lo, g1_hi = _table_or_zero(p1, s_lo), p1(s_hi)
    g2_lo, g2_hi = _table_or_zero(p2, s_lo), p2(s_hi)
    m0 = g1_hi - g1_lo
    m1 = (s_hi * g1_hi - g2_hi) - (s_lo * g1_lo - g2_lo)
    h = s_hi - s_lo
    # tau = t_n - sigma: left node (tau = t_j) sits at sigma = s_hi
    wl = np.zeros((n, n - 1))
    wr = np.zeros((n, n - 1))
    wl[ii, jj] = (m1 - s_lo * m0) / h
    wr[ii, jj] = (s_hi * m0 - m1) / h
    return wl, wr


def solve_series(mu, lam, v0, t_grid, rtol=laplace.DEFAULT_RTOL, with_residual=True):
    """Solve ``v = v0 - lam (g * v)`` on ``t_grid``.

    The discrete Volterra system is lower triangular and is solved by
    forward substitution, which is the limit of the Picard iteration
    ``v <- v0 - lam g * v`` (and so of the Neumann series in powers of
    ``g``) without its floating-point cancellation for large ``lam t``.
    Any real ``lam`` is accepted.
    """
    t = _check_grid(t_grid)
    if lam == 0:
        sol = RelaxationSolution(t, np.full(len(t), float(v0)), lam, v0, "Series")
        return _attach_residual(mu, sol) if with_residual else sol
    wl, wr = volterra_weights(mu, t, rtol=rtol)
    v = np.empty(len(t))
    v[0] = v0
    for n in range(1, len(t)):
        known = wl[n, :n] @ v[:n] + wr[n, : n - 1] @ v[1:n]
        v[n] = (v0 - lam * known) / (1.0 + lam * wr[n, n - 1])
    if not np.all(np.isfinite(v)):
        raise NoConvergence("Volterra marching produced non-finite values")
    sol = RelaxationSolution(t, v, lam, v0, "Series")
    return _attach_residual(mu, sol) if with_residual else sol


def normalization_check(mu, lam, rtol=laplace.DEFAULT_RTOL):
    """``(lam/pi) int_0^inf G(r) dr / r``; equals 1 for every ``lam > 0``."""
    rule = laplace.CutRule(laplace.relaxation_log_density(mu, lam), [0.0], rtol=rtol)
    return float(rule(0.0)[0])


def distributed_caputo(mu, f, t_grid):
    """L1 approximation of ``D^(mu) f`` at every node (0 at ``t_0``)."""
    return L1Operator(mu, t_grid)(f)
