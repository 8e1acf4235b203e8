"""Large-time decay envelopes and their empirical verification.

Five envelope shapes describe how fast a relaxation solution can decay,
depending on how thin the weight is near ``alpha = 0``:

==============  ==========================================================
``Log``         ``1 / ln t``
``PowerLog``    ``1 / (ln t)**(kappa+1)``
``StretchedLog`` ``Gamma(kappa+1) / ((1-q)**(kappa+1) (ln t)**(kappa+1))``
                ``* exp(-m**(1/(m+1)) (1+1/m) (q**m beta)**(1/(m+1))``
                ``(ln t)**(m/(m+1)))``
``LogLogPoly``  ``t**(-1/ln ln t)``
``Polynomial``  ``t**-delta``
==============  ==========================================================

:func:`verify_bound` measures the smallest admissible constant on a window
and whether it is stable across sub-windows; :func:`fit_power_exponent`
estimates algebraic rates.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BelowValidity, DegenerateFit

REGIMES = ("Log", "PowerLog", "StretchedLog", "LogLogPoly", "Polynomial")
STABILITY_RATIO = 1.25
TAIL_FRACTION = 0.1
SUB_WINDOWS = 4


@dataclass(frozen=True)
class DecayBound:
    """An envelope ``c * shape(t)`` valid for ``t > t_min``.

    Parameters
    ----------
    regime : str
        One of :data:`REGIMES`.
    c : float
        Multiplicative constant; ``math.inf`` leaves it unspecified, so that
        only finiteness and stability of the fitted constant are judged.
    t_min : float
        Extra validity threshold on top of the regime's own floor.
    kappa, beta, m, q, delta : float
        Shape parameters (unused ones are ignored).
    tail_mass, tail_exponent : float
        The additive remainder ``tail_mass * t**-tail_exponent`` left over
        from the part of the weight away from zero; windows where it exceeds
        10% of the envelope are declared invalid.  ``tail_mass = 0`` skips
        the check.
    """

    regime: str
    c: float = math.inf
    t_min: float = 0.0
    kappa: float = 0.0
    beta: float = 1.0
    m: float = 1.0
    q: float = 0.5
    delta: float = 0.0
    tail_mass: float = 0.0
    tail_exponent: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if self.regime == "StretchedLog":
            if not 0.0 < self.q < 1.0:
                raise ValueError("q must lie in (0, 1)")
            if not (self.beta > 0 and self.m > 0):
                raise ValueError("beta and m must be positive")
        if self.regime == "PowerLog" and not self.kappa > -1:
            raise ValueError("kappa must exceed -1")
        if self.regime == "Polynomial" and not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")

    @property
    def floor(self):
        """Threshold below which the closed form is not claimed."""
        if self.regime in ("Log", "PowerLog"):
            base = math.e
        elif self.regime == "StretchedLog":
            base = math.exp(self.beta * self.m / self.q)
        elif self.regime == "LogLogPoly":
            base = math.exp(math.e)
        else:
            base = 1.0
        return max(base, self.t_min)

    def shape(self, t):
        """Envelope with unit constant (no validity check)."""
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        if self.regime == "Log":
            return 1.0 / lt
        if self.regime == "PowerLog":
            return lt ** -(self.kappa + 1.0)
        if self.regime == "StretchedLog":
            k, b, m, q = self.kappa, self.beta, self.m, self.q
            pre = math.gamma(k + 1.0) / (1.0 - q) ** (k + 1.0) * lt ** -(k + 1.0)
            rate = m ** (1.0 / (m + 1.0)) * (1.0 + 1.0 / m) * (q**m * b) ** (1.0 / (m + 1.0))
            return pre * np.exp(-rate * lt ** (m / (m + 1.0)))
        if self.regime == "LogLogPoly":
            return np.exp(-lt / np.log(lt))
        return t ** -self.delta

    def tail_ratio(self, t):
        """``tail_mass * t**-tail_exponent`` relative to the unit envelope."""
        t = np.asarray(t, dtype=float)
        return self.tail_mass * t ** -self.tail_exponent / self.shape(t)


def evaluate_bound(b, t):
    """``b.c * shape(t)``; raises :class:`BelowValidity` below ``b.floor``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < b.floor):
        raise BelowValidity(f"{b.regime} envelope is only claimed for t >= {b.floor:.6g}")
    out = b.c * b.shape(t_arr)
    return float(out) if out.ndim == 0 else out


def bound_for(mu, regime, c=math.inf, **overrides):
    """Envelope matching a weight from the package's families.

    Shape parameters and the tail remainder are read from the weight's
    parameters: the near-zero formula holds on ``(0, theta)`` when a
    separate tail is given, on the whole support otherwise.
    """
    p = dict(mu.params)
    split = mu.theta if p.get("tail") is not None else 1.0
    kw = dict(tail_mass=mu.total_mass, tail_exponent=split)
    if regime == "PowerLog":
        kw["kappa"] = p.get("kappa", 0.0)
    elif regime == "StretchedLog":
        kw.update(kappa=p["kappa"], beta=p["beta"], m=p["m"])
    elif regime == "Polynomial":
        kw.update(delta=p.get("delta", mu.support[0]), tail_mass=0.0)
    kw.update(overrides)
    return DecayBound(regime, c=c, **kw)


@dataclass
class DecayReport:
    """Outcome of :func:`verify_bound` on one window."""

    regime: str
    c_star: float
    window: tuple
    sub_c_star: np.ndarray = field(repr=False)
    growth: float
    valid: bool
    passed: bool

    def row(self):
        lo, hi = self.window
        return [self.regime, f"{self.c_star:.17g}", f"{lo:.17g}", f"{hi:.17g}", str(self.passed).lower()]

    def summary(self):
        lo, hi = self.window
        status = "PASS" if self.passed else "FAIL"
        subs = ", ".join(f"{c:.4g}" for c in self.sub_c_star)
        lines = [
            f"{self.regime} envelope on [{lo:.3g}, {hi:.3g}]: {status}",
            f"  c* = {self.c_star:.6g}; sub-window c* = [{subs}]; growth = {self.growth:.4f}",
        ]
        if not self.valid:
            lines.append("  window outside the validity range (floor or tail remainder)")
        return "\n".join(lines)


def reports_to_csv(reports, path=None):
    """Serialize reports as ``regime,c_star,window_lo,window_hi,pass``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["regime", "c_star", "window_lo", "window_hi", "pass"])
    for r in reports:
        w.writerow(r.row())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _window_samples(v, window):
    t, vals = np.asarray(v.t_grid), np.asarray(v.values)
    lo, hi = window
    m = (t >= lo) & (t <= hi)
    return t[m], vals[m]


def verify_bound(v, b, window, n_sub=SUB_WINDOWS, stability=STABILITY_RATIO):
    """Smallest constant ``c*`` with ``|v| <= c* shape`` on ``window``, and its stability.

    The window is cut into ``n_sub`` equal pieces in ``ln t``.  ``growth``
    is the largest ratio of a sub-window ``c*`` to that of any earlier
    sub-window; the bound passes when the window is valid, ``c*`` is
    finite, ``growth <= stability`` and ``c* <= b.c``.
    """
    lo, hi = window
    t, vals = _window_samples(v, window)
    if len(t) < 20:
        raise DegenerateFit(f"need at least 20 samples in the window, got {len(t)}")
    valid = lo >= b.floor and (b.tail_mass == 0 or bool(np.all(b.tail_ratio(t) < TAIL_FRACTION)))
    ratio = np.abs(vals) / b.shape(t)
    c_star = float(np.max(ratio))
    edges = np.geomspace(lo, hi, n_sub + 1)
    sub = []
    for a, z in zip(edges[:-1], edges[1:]):
        m = (t >= a) & (t <= z)
        sub.append(float(np.max(ratio[m])) if np.any(m) else np.nan)
    sub = np.asarray(sub)
    running_min = np.minimum.accumulate(sub)
    growth = float(np.max(sub[1:] / running_min[:-1])) if n_sub > 1 else 1.0
    passed = bool(valid and np.isfinite(c_star) and growth <= stability and c_star <= b.c)
    return DecayReport(b.regime, c_star, (float(lo), float(hi)), sub, growth, bool(valid), passed)


def fit_power_exponent(v, window):
    """Least-squares slope of ``ln |v|`` against ``ln t`` on ``window``."""
    t, vals = _window_samples(v, window)
    if len(t) < 5:
        raise DegenerateFit(f"need at least 5 points in the window, got {len(t)}")
    if np.any(vals <= 0):
        raise DegenerateFit("values must be positive on the fitting window")
    slope, _ = np.polyfit(np.log(t), np.log(vals), 1)
    return float(slope)
