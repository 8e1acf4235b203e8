"""Spectral Galerkin solver for distributed-order diffusion on an interval.

Solves ``D^(mu) u = (a(x,t) u_x)_x + c(x,t) u`` on ``(0, L)`` with
homogeneous Dirichlet data, in the sine basis
``phi_n = sqrt(2/L) sin(n pi x / L)``.  Time stepping is the L1 scheme of
:class:`ultraslow.relaxation.L1Operator` with the stiffness treated
implicitly.

Also provided: the comparison bound ``||u(t)|| <= v(t)`` from the scalar
relaxation problem with rate ``lam1 (pi/L)**2``, and discrete checks of the
``L^p`` inequality for ``D^(mu)`` and of the extremum principle.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import linalg

from .exceptions import NotSPD, SolveFailure
from .quadrature import composite_rule
from .relaxation import L1Operator, solve_integral

Coefficient = Union[float, Callable]

SYMMETRY_TOL = 1e-13
TOL_FACTOR = 10.0


def basis(L, n_modes, x):
    """``phi_k(x)`` for ``k = 1..n_modes``, shape ``(n_modes, len(x))``."""
    k = np.arange(1, n_modes + 1)[:, None]
    return np.sqrt(2.0 / L) * np.sin(k * np.pi * np.asarray(x) / L)


def basis_dx(L, n_modes, x):
    k = np.arange(1, n_modes + 1)[:, None]
    return np.sqrt(2.0 / L) * (k * np.pi / L) * np.cos(k * np.pi * np.asarray(x) / L)


def eigenvalues(L, n_modes):
    """Dirichlet eigenvalues ``(k pi / L)**2`` of ``-d^2/dx^2`` on ``(0, L)``."""
    return (np.arange(1, n_modes + 1) * np.pi / L) ** 2


def poincare_constant(L):
    """``1 / sqrt(first eigenvalue) = L / pi``."""
    return L / np.pi


def _as_field(coef):
    if callable(coef):
        return coef
    value = float(coef)
    return lambda x, t: np.full(np.broadcast(np.asarray(x), np.asarray(t)).shape, value)


@dataclass
class SpectralProblem:
    """Problem data for the Galerkin solver.

    Parameters
    ----------
    L : float
        Interval length.
    n_modes : int
        Number of retained sine modes.
    mu : WeightFunction
    u0 : array_like
        Modal coefficients of the initial data (padded with zeros).
    a, c : float or callable
        Diffusion and reaction coefficients, constants or ``(x, t) -> value``.
    lam1, lam2 : float, optional
        Declared ellipticity bounds ``lam1 <= a <= lam2``; inferred for
        constant ``a``.
    """

    L: float
    n_modes: int
    mu: object
    u0: np.ndarray
    a: Coefficient = 1.0
    c: Coefficient = 0.0
    lam1: float = None
    lam2: float = None
    x_panels: int = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if int(self.n_modes) < 1:
            raise ValueError("need at least one mode")
        self.n_modes = int(self.n_modes)
        u0 = np.zeros(self.n_modes)
        given = np.asarray(self.u0, dtype=float).ravel()
        if len(given) > self.n_modes:
            raise ValueError("more initial coefficients than modes")
        u0[: len(given)] = given
        self.u0 = u0
        if self.lam1 is None or self.lam2 is None:
            if callable(self.a):
                raise ValueError("declare lam1 and lam2 for a variable coefficient a")
            self.lam1 = self.lam2 = float(self.a)
        if not 0 < self.lam1 <= self.lam2:
            raise ValueError("need 0 < lam1 <= lam2")
        # panels with 16 Gauss points resolve products of the retained modes
        if self.x_panels is None:
            self.x_panels = max(4, self.n_modes)
        self.x, self.wx = composite_rule(np.linspace(0.0, self.L, self.x_panels + 1), 16)
        self._phi = basis(self.L, self.n_modes, self.x)
        self._dphi = basis_dx(self.L, self.n_modes, self.x)

    @property
    def constant_coefficients(self):
        return not callable(self.a) and not callable(self.c)

    def check_coefficients(self, t_grid, n_times=64):
        """Sample ellipticity and ``c <= 0`` on a space-time lattice."""
        ts = np.unique(np.quantile(np.asarray(t_grid, dtype=float), np.linspace(0, 1, n_times)))
        xs = np.linspace(0.0, self.L, 257)
        X, T = np.meshgrid(xs, ts)
        a = _as_field(self.a)(X, T)
        c = _as_field(self.c)(X, T)
        if np.any(a < self.lam1 * (1 - 1e-12)) or np.any(a > self.lam2 * (1 + 1e-12)):
            raise NotSPD("diffusion coefficient leaves the declared ellipticity bounds")
        if np.any(c > 0):
            raise NotSPD("reaction coefficient must be nonpositive")

    def field(self, coeffs, x):
        """Reconstruct ``u(x)`` from modal coefficients (last axis = modes)."""
        return np.asarray(coeffs) @ basis(self.L, self.n_modes, x)


def assemble_stiffness(p, t):
    """``A[m, k] = int a phi_m' phi_k' - int c phi_m phi_k`` at time ``t``."""
    a = _as_field(p.a)(p.x, t)
    c = _as_field(p.c)(p.x, t)
    A = (p._dphi * (p.wx * a)) @ p._dphi.T - (p._phi * (p.wx * c)) @ p._phi.T
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * scale:
        raise NotSPD("assembled stiffness is not symmetric")
    A = 0.5 * (A + A.T)
    if np.linalg.eigvalsh(A)[0] <= 0:
        raise NotSPD("assembled stiffness is not positive definite")
    return A


@dataclass
class GalerkinState:
    """Modal coefficients ``coeffs[k, j]`` of mode ``k+1`` at ``t_grid[j]``."""

    problem: SpectralProblem
    t_grid: np.ndarray
    coeffs: np.ndarray
    op: L1Operator = field(repr=False, default=None)

    def field(self, x, j=None):
        """``u(x, t_j)``; all times when ``j`` is None (shape ``(len(t), len(x))``)."""
        c = self.coeffs.T if j is None else self.coeffs[:, j]
        return self.problem.field(c, x)


def march(p, t_grid, op=None, check=True):
    """Implicit L1 stepping of the Galerkin system.

    At step ``n`` solves ``(b0 I + A(t_n)) c_n = b0 c_{n-1} - history`` with
    ``history = sum_{j<n-1} a[n, j] (c_{j+1} - c_j)``.
    """
    t = np.asarray(t_grid, dtype=float)
    if check:
        p.check_coefficients(t)
    op = op or L1Operator(p.mu, t)
    w = op.a
    n_t, m = len(t), p.n_modes
    coeffs = np.empty((m, n_t))
    coeffs[:, 0] = p.u0
    dc = np.zeros((n_t - 1, m))
    A_fixed = assemble_stiffness(p, t[0]) if p.constant_coefficients else None
    eye = np.eye(m)
    for n in range(1, n_t):
        A = A_fixed if A_fixed is not None else assemble_stiffness(p, t[n])
        b0 = w[n, n - 1]
        rhs = b0 * coeffs[:, n - 1] - w[n, : n - 1] @ dc[: n - 1]
        try:
            cf = linalg.cho_factor(b0 * eye + A)
            coeffs[:, n] = linalg.cho_solve(cf, rhs)
        except linalg.LinAlgError as exc:
            raise SolveFailure(f"step {n}: {exc}") from None
        if not np.all(np.isfinite(coeffs[:, n])):
            raise SolveFailure(f"step {n}: non-finite coefficients")
        dc[n - 1] = coeffs[:, n] - coeffs[:, n - 1]
    return GalerkinState(p, t, coeffs, op)


def l2_trajectory(s):
    """``||u(., t_j)||_{L^2}`` by Parseval."""
    return np.linalg.norm(s.coeffs, axis=0)


def comparison_bound(mu, lam1, c_p, u0_norm, t_grid):
    """Scalar relaxation solution with rate ``lam1 / c_p**2`` and ``v(0) = ||u0||``."""
    if not (lam1 > 0 and c_p > 0):
        raise ValueError("lam1 and c_p must be positive")
    return solve_integral(mu, lam1 / c_p**2, u0_norm, t_grid, with_residual=False)


def comparison_margins(s, bound):
    """``v(t) - ||u(t)||`` on the shared grid, with ``nan`` where ``||u|| < 1e-12``."""
    norm = l2_trajectory(s)
    margin = bound.values - norm
    return np.where(norm < 1e-12, np.nan, margin)


def trajectory_to_csv(s, bound=None, path=None):
    """Write ``t,l2_norm,bound,margin`` plus one column per mode."""
    norm = l2_trajectory(s)
    bvals = bound.values if bound is not None else np.full(len(norm), np.nan)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "l2_norm", "bound", "margin"] + [f"mode_{k + 1}" for k in range(s.problem.n_modes)])
    for j, t in enumerate(s.t_grid):
        row = [t, norm[j], bvals[j], bvals[j] - norm[j]] + list(s.coeffs[:, j])
        w.writerow([f"{v:.17g}" for v in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# -- discrete inequalities -----------------------------------------------------


def lp_G(s, p):
    """``|s|**p / p - s + 1 - 1/p``: nonnegative, zero only at ``s = 1`` (for ``p > 1``)."""
    if np.any(np.asarray(p) < 1):
        raise ValueError("p must be at least 1")
    s = np.asarray(s, dtype=float)
    return np.abs(s) ** p / p - s + 1.0 - 1.0 / p


def truncation_estimate(op, f, n):
    """Rough local error of the L1 derivative of ``f`` at node ``n``.

    Compares the full-grid value with the one from the grid keeping every
    other node (and node ``n``); the difference over-estimates the
    full-grid error for a first-order-or-better scheme.
    """
    f = np.asarray(f, dtype=float)
    if n < 2:
        return 0.0
    keep = np.unique(np.concatenate([np.arange(0, n + 1, 2), [n]]))
    coarse = L1Operator(op.mu, op.t[keep])
    return float(np.max(np.abs(coarse.at(len(keep) - 1, f[keep]) - op.at(n, f[: n + 1]))))


@dataclass
class InequalityReport:
    """Both sides of a discrete inequality at one node."""

    t: float
    lhs: float
    rhs: float
    tol: float

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return bool(self.margin >= -self.tol)


def lp_inequality_check(s, p, t):
    """``||w||_p^{p-1} D||w||_p <= int D w |w|^{p-2} w`` at the grid node nearest ``t``.

    ``D`` is the L1 operator of the run, applied to the norm trajectory
    (left) and pointwise in ``x`` (right); spatial integrals use the
    problem's Gauss rule.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    prob = s.problem
    n = int(np.argmin(np.abs(s.t_grid - t)))
    if n == 0:
        raise ValueError("t must be bounded away from 0")
    op = s.op or L1Operator(prob.mu, s.t_grid)
    w = s.coeffs[:, : n + 1].T @ prob._phi  # (n+1, n_x)
    norms = (np.abs(w) ** p @ prob.wx) ** (1.0 / p)
    d_norm = op.at(n, norms)
    d_w = op.at(n, w)
    lhs = norms[n] ** (p - 1) * d_norm
    rhs = float(np.sum(prob.wx * d_w * np.abs(w[n]) ** (p - 2) * w[n]))
    tol = TOL_FACTOR * max(
        norms[n] ** (p - 1) * truncation_estimate(op, norms, n),
        np.finfo(float).eps * (abs(lhs) + abs(rhs)),
    )
    return InequalityReport(float(s.t_grid[n]), float(lhs), rhs, tol)


@dataclass
class ExtremumReport:
    """``D f`` at the discrete maximum of ``f``."""

    index: int
    t0: float
    value: float
    tol: float
    skipped: bool

    @property
    def passed(self):
        return self.skipped or bool(self.value >= -self.tol)


def extremum_principle_check(f, mu, t_grid, op=None):
    """Evaluate ``D^(mu) f`` at the node where ``f`` is largest.

    Maxima at ``t_0 = 0`` are outside the statement and reported as skipped.
    """
    f = np.asarray(f, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    n = int(np.argmax(f))
    if n == 0:
        return ExtremumReport(0, float(t[0]), float("nan"), 0.0, True)
    op = op or L1Operator(mu, t)
    value = float(op.at(n, f))
    tol = TOL_FACTOR * max(truncation_estimate(op, f, n), np.finfo(float).eps * abs(value))
    return ExtremumReport(n, float(t[n]), value, tol, False)
