"""scikit-learn style wrappers around the solvers.

Hyperparameters are plain constructor arguments (so ``get_params`` /
``set_params`` / ``clone`` work); everything derived from data carries a
trailing underscore.  Times enter as ``X`` of shape ``(n_samples, 1)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import decay, relaxation, weight


def _weight(spec):
    if isinstance(spec, weight.WeightFunction):
        return spec
    if spec is None:
        return weight.constant(1.0)
    return weight.from_spec(spec)


def _times(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    t = X.ravel() if X.ndim == 1 or X.shape[1] == 1 else None
    if t is None:
        raise ValueError("expected a single column of times")
    if np.any(t < 0):
        raise ValueError("times must be nonnegative")
    return t


class RelaxationModel(RegressorMixin, BaseEstimator):
    """Relaxation curve ``v(t)`` of ``D^(mu) v + lam v = 0`` as a predictor.

    Parameters
    ----------
    weight : dict, WeightFunction or None
        Weight spec (see :func:`ultraslow.weight.from_spec`); ``None`` means
        ``mu = 1``.
    lam, v0 : float
    method : {"integral", "series", "l1"}
        ``integral`` evaluates the spectral representation at the requested
        times; the marching methods solve on ``default_grid`` up to the
        largest time and interpolate.
    n_grid : int
        Grid size for the marching methods.
    """

    def __init__(self, weight=None, lam=1.0, v0=1.0, method="integral", n_grid=1000):
        self.weight = weight
        self.lam = lam
        self.v0 = v0
        self.method = method
        self.n_grid = n_grid

    def fit(self, X=None, y=None):
        """Build the weight; ``X`` and ``y`` are accepted for API symmetry only."""
        if self.method not in ("integral", "series", "l1"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "integral" and not self.lam > 0:
            raise ValueError("the integral representation needs lam > 0")
        self.mu_ = _weight(self.weight)
        self.gamma_ = self.mu_.gamma
        return self

    def predict(self, X):
        check_is_fitted(self, "mu_")
        t = _times(X)
        order = np.argsort(t, kind="stable")
        ts = t[order]
        pos = np.unique(ts[ts > 0])
        if self.method == "integral":
            grid = np.concatenate([[0.0], pos])
            sol = relaxation.solve_integral(self.mu_, self.lam, self.v0, grid, with_residual=False)
            vals = np.interp(ts, sol.t_grid, sol.values)
        else:
            grid = relaxation.default_grid(max(ts.max(), 1e-12), self.n_grid)
            solver = relaxation.solve_series if self.method == "series" else relaxation.solve_l1
            sol = solver(self.mu_, self.lam, self.v0, grid, with_residual=False)
            vals = np.interp(ts, sol.t_grid, sol.values)
        out = np.empty_like(t)
        out[order] = vals
        return out


class DistributedCaputo(TransformerMixin, BaseEstimator):
    """L1 approximation of ``D^(mu)`` applied column-wise to sampled signals.

    ``fit`` takes the time grid (``X`` with one column, starting at 0) and
    builds the operator; ``transform`` maps samples of shape
    ``(len(t), n_signals)`` to derivative samples of the same shape.
    """

    def __init__(self, weight=None):
        self.weight = weight

    def fit(self, X, y=None):
        t = _times(X)
        self.mu_ = _weight(self.weight)
        self.operator_ = relaxation.L1Operator(self.mu_, t)
        self.t_grid_ = self.operator_.t
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        F = check_array(X, ensure_2d=False, dtype=float)
        if F.shape[0] != len(self.t_grid_):
            raise ValueError("rows of X must match the fitted time grid")
        return self.operator_(F)


class PowerLawDecay(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``v ~ C t**slope`` on a window of times."""

    def __init__(self, window=(1.0, np.inf)):
        self.window = window

    def fit(self, X, y):
        t = _times(X)
        v = check_array(np.asarray(y, dtype=float), ensure_2d=False).ravel()
        if len(v) != len(t):
            raise ValueError("X and y lengths differ")
        sol = relaxation.RelaxationSolution(t, v, float("nan"), float("nan"), "data")
        self.slope_ = decay.fit_power_exponent(sol, self.window)
        lo, hi = self.window
        m = (t >= lo) & (t <= hi)
        self.intercept_ = float(np.mean(np.log(v[m]) - self.slope_ * np.log(t[m])))
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        t = _times(X)
        return np.exp(self.intercept_) * t**self.slope_
