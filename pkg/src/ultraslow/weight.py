"""Admissible weight functions on the order interval (0, 1).

A :class:`WeightFunction` couples a vectorized density with the breakpoints
of its support, an alpha-quadrature rule tailored to it, and the scalar
functionals consumed elsewhere in the package (total mass, the ``1/alpha``
moment and the split point ``gamma``).  Instances are immutable; the
functionals are computed once at construction.

Families are built through the module-level constructors :func:`constant`,
:func:`power_near_zero`, :func:`stretched_exp`, :func:`double_exp`,
:func:`supported`, :func:`box` and :func:`tabulated`, or from a config table
through :func:`from_spec`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .exceptions import BracketFailure, InvalidWeight, NonIntegrable, ZeroMass
from .quadrature import composite_rule, graded_breakpoints

DEFAULT_THETA = 0.5
DEFAULT_NODES = 16
# Dyadic levels toward alpha = 0 when the support touches zero.  Integrals
# of r**alpha for r -> 0 concentrate on alpha ~ 1/|ln r|, and the branch-cut
# integrals probe |ln r| up to ~1e13.
LEVELS_AT_ZERO = 50
LEVELS_AT_EDGE = 16
LEVELS_AT_ONE = 8
MASS_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """A nonnegative integrable weight on (0, 1).

    Parameters
    ----------
    family : str
        Family tag, one of ``Constant``, ``PowerNearZero``, ``StretchedExp``,
        ``DoubleExp``, ``Supported``, ``Tabulated``.
    params : mapping
        Family parameters (for reporting and serialization).
    density : callable
        Vectorized ``alpha -> mu(alpha)``; must return 0 outside the support.
    breakpoints : tuple of float
        Sorted points where the density may be non-smooth; the first and last
        entries bound the support.
    theta : float
        Cutoff of the near-zero regime.
    """

    family: str
    params: Mapping
    density: Callable = field(repr=False)
    breakpoints: tuple = field(repr=False)
    theta: float = DEFAULT_THETA
    n_nodes: int = field(default=DEFAULT_NODES, repr=False)
    total_mass: float = field(init=False)
    kappa_moment: float = field(init=False)
    gamma: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        if len(bp) < 2 or bp[0] < 0.0 or bp[-1] > 1.0 or any(np.diff(bp) <= 0):
            raise InvalidWeight(f"bad breakpoints {bp}")
        if not 0.0 < self.theta < 1.0:
            raise InvalidWeight("theta must lie in (0, 1)")
        object.__setattr__(self, "breakpoints", bp)
        x, w = _rule(bp, self.n_nodes)
        mu = self(x)
        if np.any(mu < 0) or not np.all(np.isfinite(mu)):
            raise InvalidWeight(f"{self.family} weight takes negative or non-finite values")
        keep = mu > 0
        x, wmu = x[keep], (w * mu)[keep]
        x.setflags(write=False)
        wmu.setflags(write=False)
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", wmu)
        c_mu = float(np.sum(wmu))
        if not c_mu > MASS_TOL:
            raise ZeroMass(f"{self.family} weight has total mass {c_mu:.3g}")
        object.__setattr__(self, "total_mass", c_mu)
        object.__setattr__(self, "kappa_moment", _kappa_moment(self))
        object.__setattr__(self, "gamma", _gamma_split(self))

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            out = np.asarray(self.density(alpha), dtype=float)
        out = np.broadcast_to(out, alpha.shape).copy()
        out[(alpha < self.support[0]) | (alpha > self.support[1])] = 0.0
        return out

    @property
    def support(self):
        return self.breakpoints[0], self.breakpoints[-1]

    def quad(self, f):
        """Integrate ``f(alpha) * mu(alpha)`` with the fixed alpha-rule.

        ``f`` receives the node array; any trailing axes of its result are
        preserved, with the last axis reduced.  This is the fast path used
        for families of integrals (over ``r`` or ``t``).
        """
        return np.einsum("...j,j->...", f(self.nodes), self.weights)

    def to_spec(self):
        """Plain-dict description for manifests."""
        spec = {"family": self.family, "theta": self.theta}
        spec.update({k: v for k, v in self.params.items() if not callable(v)})
        return spec

    def __repr__(self):
        p = ", ".join(f"{k}={v}" for k, v in self.params.items() if not callable(v))
        return f"WeightFunction({self.family}: {p})"


def _rule(bp, n, extra_levels=0):
    segments = list(zip(bp[:-1], bp[1:]))
    pieces = []
    for i, (a, b) in enumerate(segments):
        first, last = i == 0, i == len(segments) - 1
        lo = (LEVELS_AT_ZERO if a == 0.0 else LEVELS_AT_EDGE) if first else 2
        hi = (LEVELS_AT_ONE if b == 1.0 else LEVELS_AT_EDGE) if last else 2
        pieces.append(graded_breakpoints(a, b, lo + extra_levels, hi + extra_levels))
    breaks = np.unique(np.concatenate(pieces))
    return composite_rule(breaks, n)


def integrate_weighted(mu, f, rtol=1e-10, atol=1e-300, max_refinements=12):
    """Return ``int_0^1 f(alpha) mu(alpha) d alpha``.

    The graded alpha-rule is deepened toward the support endpoints (16
    extra dyadic levels per round) until two successive values agree to
    ``rtol``.  Integrable endpoint singularities of ``f`` are handled this
    way; a non-integrable ``f * mu`` never settles and raises
    :class:`NonIntegrable`.
    """
    prev = None
    for k in range(max_refinements + 1):
        x, w = _rule(mu.breakpoints, mu.n_nodes, extra_levels=16 * k)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(f(x), dtype=float) * mu(x)
        vals = np.where(mu(x) > 0, vals, 0.0)
        if not np.all(np.isfinite(vals)):
            raise NonIntegrable("integrand is not finite at an alpha node")
        cur = float(np.sum(w * vals))
        if prev is not None and abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return cur
        prev = cur
    raise NonIntegrable(f"alpha-integral against {mu!r} did not settle")


def total_mass(mu):
    """``c_mu``: total mass of the weight (computed at construction)."""
    return mu.total_mass


def kappa_moment(mu):
    """``int mu(alpha)/alpha d alpha``; ``math.inf`` when it diverges."""
    return mu.kappa_moment


def gamma_split(mu):
    """Split point ``gamma`` in (0, 1/2) balancing the mass of ``[gamma, 1-gamma]``."""
    return mu.gamma


def _kappa_moment(mu):
    if mu.family == "Constant":
        return math.inf
    if mu.family == "PowerNearZero":
        a, kappa = mu.params["a"], mu.params["kappa"]
        if kappa <= 0:
            return math.inf
        near = a * mu.theta**kappa / kappa
        return near + segment_integral(mu, mu.theta, 1.0, lambda x: 1.0 / x)
    try:
        return integrate_weighted(mu, lambda x: 1.0 / x)
    except NonIntegrable:
        return math.inf


def segment_integral(mu, a, b, f=None):
    """``int_a^b f(alpha) mu(alpha) d alpha`` honoring the weight's breakpoints."""
    lo, hi = max(a, mu.support[0]), min(b, mu.support[1])
    if not hi > lo:
        return 0.0
    bp = [lo] + [p for p in mu.breakpoints if lo < p < hi] + [hi]
    x, w = _rule(tuple(bp), mu.n_nodes)
    vals = mu(x) if f is None else mu(x) * f(x)
    return float(np.sum(w * vals))


def _gamma_split(mu, xtol=1e-14):
    c = mu.total_mass

    def h(x):
        return segment_integral(mu, x, 1.0 - x) - 0.5 * (1.0 - x) * c

    lo, hi = 0.0, 0.5
    h_lo, h_hi = h(lo), h(hi)
    if not (h_lo > 0 > h_hi):
        raise BracketFailure(f"no sign change for gamma: h(0)={h_lo}, h(1/2)={h_hi}")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gamma_residual(mu):
    """``h(gamma)``; should vanish up to bisection accuracy."""
    g = mu.gamma
    return segment_integral(mu, g, 1.0 - g) - 0.5 * (1.0 - g) * mu.total_mass


# -- families -----------------------------------------------------------------


def _tail_fn(tail, default):
    if tail is None:
        return default
    if callable(tail):
        return tail
    value = float(tail)
    return lambda x: np.full_like(x, value)


def _check_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise InvalidWeight(f"{name} must be positive, got {value}")


def constant(a=1.0):
    """``mu(alpha) = a`` on (0, 1)."""
    _check_positive(a=a)
    return WeightFunction("Constant", {"a": a}, lambda x: np.full_like(x, a), (0.0, 1.0))


def power_near_zero(a, kappa, tail=None, theta=DEFAULT_THETA):
    """``mu = a * alpha**kappa`` on ``(0, theta)``, ``tail`` on ``[theta, 1]``.

    ``tail`` may be ``None`` (continue the power law), a constant or a
    vectorized callable.
    """
    _check_positive(a=a)
    if kappa <= -1:
        raise InvalidWeight("kappa must exceed -1 for integrability")
    near = lambda x: a * np.power(x, kappa)
    far = _tail_fn(tail, near)
    bp = (0.0, 1.0) if tail is None else (0.0, theta, 1.0)
    return WeightFunction(
        "PowerNearZero",
        {"a": a, "kappa": kappa, "tail": tail},
        lambda x: np.where(x < theta, near(x), far(x)),
        bp,
        theta=theta,
    )


def stretched_exp(a, kappa, beta, m, tail=None, theta=DEFAULT_THETA):
    """``mu = a * alpha**kappa * exp(-beta / alpha**m)`` near zero."""
    _check_positive(a=a, kappa=kappa, beta=beta, m=m)
    near = lambda x: a * np.power(x, kappa) * np.exp(-beta / np.power(x, m))
    far = _tail_fn(tail, near)
    bp = (0.0, 1.0) if tail is None else (0.0, theta, 1.0)
    return WeightFunction(
        "StretchedExp",
        {"a": a, "kappa": kappa, "beta": beta, "m": m, "tail": tail},
        lambda x: np.where(x < theta, near(x), far(x)),
        bp,
        theta=theta,
    )


def double_exp(a, tail=None, theta=DEFAULT_THETA):
    """``mu = a * exp(-exp(1/alpha))`` near zero."""
    _check_positive(a=a)
    near = lambda x: a * np.exp(-np.exp(1.0 / x))
    far = _tail_fn(tail, near)
    bp = (0.0, 1.0) if tail is None else (0.0, theta, 1.0)
    return WeightFunction(
        "DoubleExp",
        {"a": a, "tail": tail},
        lambda x: np.where(x < theta, near(x), far(x)),
        bp,
        theta=theta,
    )


def supported(delta, inner=1.0, upper=1.0):
    """Weight vanishing on ``(0, delta)``; ``inner`` on ``[delta, upper]``."""
    if not 0.0 <= delta < upper <= 1.0:
        raise InvalidWeight(f"need 0 <= delta < upper <= 1, got {delta}, {upper}")
    f = _tail_fn(inner, None)
    return WeightFunction(
        "Supported",
        {"delta": delta, "inner": inner, "upper": upper},
        f,
        (delta, upper),
    )


def box(center, width, mass=1.0):
    """Uniform weight of total ``mass`` on ``[center - width/2, center + width/2]``."""
    _check_positive(width=width, mass=mass)
    lo, hi = center - 0.5 * width, center + 0.5 * width
    if lo < 0 or hi > 1:
        raise InvalidWeight("box must fit inside [0, 1]")
    return supported(lo, mass / width, hi)


def tabulated(alphas, values):
    """Piecewise-linear weight through the nodes ``(alphas[i], values[i])``."""
    xs = np.asarray(alphas, dtype=float)
    ys = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
        raise InvalidWeight("tabulated weight needs matching 1-D node arrays")
    if np.any(ys < 0):
        raise InvalidWeight("tabulated weight values must be nonnegative")
    if np.any(np.diff(xs) <= 0):
        raise InvalidWeight("tabulated nodes must be strictly increasing")
    xs.setflags(write=False)
    ys.setflags(write=False)
    return WeightFunction(
        "Tabulated",
        {"alphas": xs.tolist(), "values": ys.tolist()},
        lambda x: np.interp(x, xs, ys, left=0.0, right=0.0),
        tuple(xs),
    )


_BUILDERS = {
    "constant": constant,
    "powernearzero": power_near_zero,
    "power": power_near_zero,
    "stretchedexp": stretched_exp,
    "doubleexp": double_exp,
    "supported": supported,
    "box": box,
    "tabulated": tabulated,
}


def from_spec(spec):
    """Build a weight from a config table such as ``{"family": "box", ...}``."""
    spec = dict(spec)
    try:
        family = spec.pop("family")
    except KeyError:
        raise InvalidWeight("weight spec needs a 'family' key") from None
    key = str(family).replace("_", "").replace("-", "").lower()
    if key not in _BUILDERS:
        raise InvalidWeight(f"unknown weight family {family!r}")
    if key == "tabulated" and "nodes" in spec:
        nodes = np.asarray(spec.pop("nodes"), dtype=float)
        spec["alphas"], spec["values"] = nodes[:, 0], nodes[:, 1]
    try:
        return _BUILDERS[key](**spec)
    except TypeError as exc:
        raise InvalidWeight(f"bad parameters for {family}: {exc}") from None
