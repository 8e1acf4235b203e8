"""The verification suite behind ``ultraslow verify-all``.

Each check returns a :class:`CheckResult` holding the measured quantities,
the thresholds they are judged against and the verdict.  Checks are pure
functions of their arguments (randomized ones take a seed), so running them
in any order or on any number of worker threads gives identical results.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import decay, diffusion, laplace, mloracle, relaxation, weight
from .catalog import catalog


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: dict
    thresholds: dict
    seconds: float = 0.0
    curves: dict = field(default_factory=dict, repr=False)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] criterion {self.number:2d} {self.name}: {parts}"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_fmt(x) for x in v) + "]"
    return f"{float(v):.6g}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def normalization(lambdas=(0.1, 1.0, 100.0), tol=1e-6):
    """``(lam/pi) int G dr/r = 1`` for every catalog weight and ``lam``."""
    errs = {
        f"{name}/lambda={lam:g}": abs(relaxation.normalization_check(mu, lam) - 1.0)
        for name, mu in catalog().items()
        for lam in lambdas
    }
    worst = max(errs.values())
    return CheckResult(1, "normalization identity", worst < tol, {"max_error": worst}, {"max_error": tol})


@_timed
def sonine(tol=1e-3):
    """``(k * g)(t) = 1`` on 50 log-spaced ``t`` in ``[0.01, 10]``."""
    t = np.geomspace(0.01, 10.0, 50)
    errs = {}
    for name, mu in (("uniform", weight.constant(1.0)), ("indicator_half", weight.supported(0.5))):
        errs[name] = float(np.max(np.abs(laplace.sonine_convolution(mu, t) - 1.0)))
    worst = max(errs.values())
    return CheckResult(2, "Sonine identity", worst < tol, {"max_error": worst, **errs}, {"max_error": tol})


@_timed
def cross_agreement(lambdas=(0.5, 1.0, 5.0), tol=1e-3):
    """Series and integral solutions agree on ``[0, 5]`` for ``mu = 2 alpha``."""
    mu = weight.power_near_zero(2.0, 1.0)
    grid = relaxation.default_grid(5.0)
    gaps = []
    for lam in lambdas:
        vs = relaxation.solve_series(mu, lam, 1.0, grid, with_residual=False)
        vi = relaxation.solve_integral(mu, lam, 1.0, grid, with_residual=False)
        gaps.append(float(np.max(np.abs(vs.values - vi.values))))
    worst = max(gaps)
    return CheckResult(3, "series/integral agreement", worst < tol, {"max_gap": worst}, {"max_gap": tol})


@_timed
def single_order(width=0.01, tol=1e-2, halving_ratio=0.5, rel=0.3):
    """Narrow box near ``alpha = 1/2`` against ``E_{1/2}(-t^{1/2})``; gap halves with the width."""
    t = np.linspace(0.0, 10.0, 1001)
    gap = mloracle.single_order_limit_gap(0.5, width, 1.0, t)
    gap_half = mloracle.single_order_limit_gap(0.5, width / 2, 1.0, t)
    ratio = gap_half / gap
    lo, hi = halving_ratio * (1 - rel), halving_ratio * (1 + rel)
    ok = gap < tol and lo <= ratio <= hi
    return CheckResult(
        4, "single-order limit", ok,
        {"gap": gap, "gap_half_width": gap_half, "ratio": ratio},
        {"gap": tol, "ratio_lo": lo, "ratio_hi": hi},
    )


def residual_on_window(mu, lam, n, t_lo, T=5.0):
    grid = relaxation.default_grid(T, n)
    v = relaxation.solve_integral(mu, lam, 1.0, grid, with_residual=False)
    r = relaxation.residual(mu, lam, grid, v.values)
    return float(np.max(np.abs(r[grid[1:] >= t_lo])))


@_timed
def ode_residual(n=1000, T=5.0, tol=5e-3, min_order=1.0):
    """Discrete ``D v + v`` of the exact solution for ``mu = 2 alpha`` on ``[h, T]``.

    ``h = T / n`` is the nominal step of the default grid; the window stays
    fixed while the grid is refined twice.
    """
    mu = weight.power_near_zero(2.0, 1.0)
    h = T / n
    errs = [residual_on_window(mu, 1.0, n * 2**k, h, T) for k in range(3)]
    orders = [float(np.log2(errs[k] / errs[k + 1])) for k in range(2)]
    ok = errs[0] < tol and min(orders) >= min_order
    return CheckResult(
        5, "ODE residual", ok,
        {"residual": errs[0], "residual_2n": errs[1], "residual_4n": errs[2], "order_1": orders[0], "order_2": orders[1]},
        {"residual": tol, "order": min_order},
    )


def _window_solution(mu, lo, hi, n=200, lam=1.0):
    grid = np.concatenate([[0.0], np.geomspace(lo, hi, n)])
    return relaxation.solve_integral(mu, lam, 1.0, grid, with_residual=False)


@_timed
def decay_regimes(slope_tol=0.05, falsify_above=-0.35):
    """PowerLog for ``2 alpha``; slopes for indicators of ``[0.4, 1]`` and ``[0.2, 1]``."""
    linear = weight.power_near_zero(2.0, 1.0)
    rep = decay.verify_bound(_window_solution(linear, 1e3, 1e8), decay.bound_for(linear, "PowerLog"), (1e3, 1e8))
    slope_a = decay.fit_power_exponent(_window_solution(weight.supported(0.4), 1e3, 1e6), (1e3, 1e6))
    slope_b = decay.fit_power_exponent(_window_solution(weight.supported(0.2), 1e3, 1e6), (1e3, 1e6))
    ok_a = rep.passed
    ok_b = abs(slope_a + 0.4) <= slope_tol
    ok_c = slope_b > falsify_above
    return CheckResult(
        6, "decay regimes", ok_a and ok_b and ok_c,
        {
            "powerlog_c_star": rep.c_star, "powerlog_growth": rep.growth, "powerlog_pass": ok_a,
            "slope_delta_0.4": slope_a, "slope_pass": ok_b,
            "slope_delta_0.2": slope_b, "falsified": ok_c,
        },
        {"growth": decay.STABILITY_RATIO, "slope": -0.4, "slope_tol": slope_tol, "falsify_above": falsify_above},
        curves={"decay_reports": [rep]},
    )


def heat_run(t_first=1e-4, T=1e14, ratio=1.05):
    """The heat-like run shared by the comparison and ``L^p`` checks."""
    mu = weight.supported(0.4)
    grid = relaxation.geometric_grid(t_first, T, ratio)
    prob = diffusion.SpectralProblem(np.pi, 8, mu, np.array([1.0, 1.0]) / np.sqrt(2.0))
    state = diffusion.march(prob, grid)
    bound = diffusion.comparison_bound(mu, prob.lam1, diffusion.poincare_constant(prob.L), 1.0, grid)
    return state, bound


_HEAT_CACHE = {}


def _heat():
    if "run" not in _HEAT_CACHE:
        _HEAT_CACHE["run"] = heat_run()
    return _HEAT_CACHE["run"]


@_timed
def comparison_principle(rel=1e-6, slope_tol=0.05, late_decades=2.0):
    """``||u(t)|| <= v(t) (1 + rel)`` on the whole grid; late slope near ``-0.4``.

    The slope is fitted on the final ``late_decades`` decades of the run.
    """
    state, bound = _heat()
    norm = diffusion.l2_trajectory(state)
    ratio = float(np.max(norm / bound.values))
    t = state.t_grid
    hi = t[-1]
    sol = relaxation.RelaxationSolution(t, norm, 1.0, 1.0, "L1")
    slope = decay.fit_power_exponent(sol, (hi / 10**late_decades, hi))
    ok = ratio <= 1 + rel and abs(slope + 0.4) <= slope_tol
    return CheckResult(
        7, "PDE comparison principle", ok,
        {"max_norm_over_bound": ratio, "late_slope": slope, "window_lo": hi / 10**late_decades, "window_hi": hi},
        {"ratio": 1 + rel, "slope": -0.4, "slope_tol": slope_tol},
        curves={"state": state, "bound": bound},
    )


@_timed
def mode_decoupling(tol=1e-8):
    """Constant-coefficient run against scalar L1 relaxation, mode by mode."""
    mu = weight.power_near_zero(2.0, 1.0)
    a, c, L = 1.5, -0.3, 2.0
    u0 = np.array([1.0, 0.5, -0.2, 0.1, 0.3])
    grid = relaxation.default_grid(5.0, 400)
    prob = diffusion.SpectralProblem(L, len(u0), mu, u0, a=a, c=c)
    state = diffusion.march(prob, grid)
    rates = a * diffusion.eigenvalues(L, len(u0)) - c
    worst = 0.0
    for k, lam in enumerate(rates):
        ref = relaxation.solve_l1(mu, lam, u0[k], grid, op=state.op, with_residual=False).values
        worst = max(worst, float(np.max(np.abs(state.coeffs[k] - ref) / np.abs(ref))))
    return CheckResult(8, "mode decoupling", worst <= tol, {"max_relative_error": worst}, {"max_relative_error": tol})


@_timed
def lp_inequality(ps=(2.0, 4.0), n_times=10):
    """``L^p`` inequality margins at ``n_times`` log-spaced times of the heat run."""
    state, _ = _heat()
    times = np.geomspace(1e-2, state.t_grid[-1] / 100, n_times)
    worst = np.inf
    ok = True
    for p in ps:
        for t in times:
            rep = diffusion.lp_inequality_check(state, p, t)
            ok &= rep.passed
            scale = max(abs(rep.lhs), abs(rep.rhs), 1e-300)
            worst = min(worst, (rep.margin + rep.tol) / scale)
    return CheckResult(9, "L^p inequality", bool(ok), {"min_margin_plus_tol_relative": worst}, {"margin": 0.0})


def unimodal_samples(rng, n, t):
    """Smooth unimodal test functions with interior maxima."""
    T = t[-1]
    out = []
    for _ in range(n):
        t0 = rng.uniform(0.1 * T, T)
        width = rng.uniform(0.05, 0.5) * T
        amp = rng.uniform(0.5, 2.0)
        shift = rng.uniform(-1.0, 1.0)
        out.append(shift + amp * np.exp(-0.5 * ((t - t0) / width) ** 2))
    return out


@_timed
def extremum_principle(seed=0, n_functions=20, T=2.0, n=400):
    """``D f >= -tol`` at the discrete maximum for random unimodal ``f``."""
    t = relaxation.default_grid(T, n)
    rng = np.random.default_rng(seed)
    funcs = unimodal_samples(rng, n_functions, t)
    ok = True
    worst = np.inf
    for name, mu in catalog().items():
        op = relaxation.L1Operator(mu, t)
        for f in funcs:
            rep = diffusion.extremum_principle_check(f, mu, t, op=op)
            ok &= rep.passed
            if not rep.skipped:
                worst = min(worst, rep.value + rep.tol)
    return CheckResult(10, "extremum principle", bool(ok), {"min_value_plus_tol": worst}, {"value": 0.0})


CHECKS = (
    normalization, sonine, cross_agreement, single_order, ode_residual,
    decay_regimes, comparison_principle, mode_decoupling, lp_inequality, extremum_principle,
)


def run_all(threads=1, seed=0):
    """Run every check; results come back in criterion order."""
    _HEAT_CACHE.clear()
    _HEAT_CACHE["run"] = heat_run()
    jobs = [(fn, {"seed": seed} if fn is extremum_principle else {}) for fn in CHECKS]
    if threads <= 1:
        return [fn(**kw) for fn, kw in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, **kw) for fn, kw in jobs]
        return [f.result() for f in futures]
