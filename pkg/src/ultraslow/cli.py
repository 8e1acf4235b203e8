"""Command-line entry point: ``ultraslow <command> [options]``.

Commands: ``kernel``, ``relax``, ``decay``, ``diffuse``, ``ml``,
``verify-all``, ``golden``.  Each writes CSV files and a ``manifest.json``
into ``--out`` (plus ``plot_curves.py``, a matplotlib template that draws
every curve listed in the manifest).  Exit status: 0 when every enabled
check passes, 1 when a check fails, 2 on configuration errors.

Configuration is TOML; see ``docs/config.md`` for the grammar.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, decay, diffusion, golden, laplace, mloracle, relaxation, verification, weight
from .exceptions import UltraslowError

COMMANDS = ("kernel", "relax", "decay", "diffuse", "ml", "verify-all", "golden")

PLOT_TEMPLATE = '''"""Plot every curve listed in manifest.json (generated file; edit freely)."""
import csv
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
manifest = json.loads((here / "manifest.json").read_text())
for curve in manifest["curves"]:
    with open(here / curve["file"]) as fh:
        rows = list(csv.DictReader(fh))
    fig, ax = plt.subplots()
    x = [float(r[curve["x"]]) for r in rows]
    for y in curve["y"]:
        ax.plot(x, [abs(float(r[y])) for r in rows], label=y)
    ax.set_xscale(curve.get("xscale", "linear"))
    ax.set_yscale(curve.get("yscale", "linear"))
    ax.set_xlabel(curve["x"])
    ax.legend()
    fig.savefig(here / (Path(curve["file"]).stem + ".png"), dpi=120)
'''


class ConfigError(Exception):
    """Invalid or inconsistent configuration."""


class Run:
    """Collects artifacts, constants and check outcomes for one invocation."""

    def __init__(self, command, out, config, flags):
        self.command = command
        self.out = Path(out)
        self.config = config
        self.flags = flags
        self.constants = {}
        self.checks = []
        self.artifacts = []
        self.curves = []
        self.t0 = time.perf_counter()

    def write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / name, "w", newline="") as fh:
            fh.write(text)
        self.artifacts.append(name)

    def curve(self, name, text, x, y, xscale="linear", yscale="linear"):
        self.write(name, text)
        self.curves.append({"file": name, "x": x, "y": list(y), "xscale": xscale, "yscale": yscale})

    def check(self, name, passed, **details):
        self.checks.append({"name": name, "passed": bool(passed), **{k: _jsonable(v) for k, v in details.items()}})

    def finish(self):
        failures = [c["name"] for c in self.checks if not c["passed"]]
        manifest = {
            "command": self.command,
            "flags": self.flags,
            "config": self.config,
            "versions": {
                "ultraslow": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": time.perf_counter() - self.t0,
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
            "checks": self.checks,
            "failures": failures,
            "artifacts": self.artifacts,
            "curves": self.curves,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
        if self.curves:
            (self.out / "plot_curves.py").write_text(PLOT_TEMPLATE)
        return 1 if failures else 0


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def _section(config, name):
    sec = config.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _weight(config, default=None):
    spec = config.get("weight", default or {"family": "constant", "a": 1.0})
    try:
        return weight.from_spec(spec)
    except (UltraslowError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad [weight]: {exc}") from None


def _positive(sec, key, default):
    value = float(sec.get(key, default))
    if not value > 0:
        raise ConfigError(f"{key} must be positive, got {value}")
    return value


def _weight_constants(run, mu):
    run.constants.update(
        {"c_mu": mu.total_mass, "kappa_moment": mu.kappa_moment, "gamma": mu.gamma, "weight": mu.to_spec()}
    )


# -- commands -------------------------------------------------------------------


def cmd_kernel(run, config, tol):
    mu = _weight(config)
    sec = _section(config, "kernel")
    t = np.asarray(sec.get("t", np.geomspace(1e-3, 1e3, 61).tolist()), dtype=float)
    if np.any(t <= 0):
        raise ConfigError("kernel times must be positive")
    k = laplace.k_kernel(mu, t)
    g = laplace.g_kernel(mu, t, rtol=tol)
    lines = ["t,k,g,k_integral"]
    big_k = laplace.k_integral(mu, t)
    lines += [f"{a:.17g},{b:.17g},{c:.17g},{d:.17g}" for a, b, c, d in zip(t, k, g, big_k)]
    run.curve("kernel.csv", "\n".join(lines) + "\n", "t", ["k", "g"], "log", "log")
    _weight_constants(run, mu)
    run.check("kernels positive", bool(np.all(k > 0) and np.all(g > 0)))


def cmd_relax(run, config, tol):
    mu = _weight(config)
    sec = _section(config, "relax")
    lam = _positive(sec, "lambda", 1.0)
    v0 = float(sec.get("v0", 1.0))
    grid = relaxation.default_grid(_positive(sec, "T", 5.0), int(sec.get("n", 1000)))
    methods = sec.get("methods", ["Integral", "Series"])
    solvers = {"Integral": relaxation.solve_integral, "Series": relaxation.solve_series, "L1": relaxation.solve_l1}
    sols = {}
    for m in methods:
        if m not in solvers:
            raise ConfigError(f"unknown method {m!r}")
        kw = {} if m == "L1" else {"rtol": tol}
        sols[m] = solvers[m](mu, lam, v0, grid, **kw)
        run.curve(f"relax_{m.lower()}.csv", sols[m].to_csv(), "t", ["v"])
        run.constants[f"residual_sup/{m}"] = sols[m].residual_sup
        if v0 > 0:
            vals = sols[m].values
            run.check(f"{m} positive and nonincreasing", bool(np.all(vals > 0) and np.all(np.diff(vals) <= 1e-12)))
    norm = relaxation.normalization_check(mu, lam, rtol=tol)
    run.constants["normalization"] = norm
    run.check("normalization", abs(norm - 1) < 1e-6, value=norm, tolerance=1e-6)
    if "Integral" in sols and "Series" in sols:
        gap = float(np.max(np.abs(sols["Integral"].values - sols["Series"].values)))
        run.constants["series_integral_gap"] = gap
        run.check("series/integral agreement", gap < 1e-3, value=gap, tolerance=1e-3)
    _weight_constants(run, mu)


def cmd_decay(run, config, tol):
    mu = _weight(config, {"family": "supported", "delta": 0.4})
    sec = _section(config, "decay")
    lam = _positive(sec, "lambda", 1.0)
    lo, hi = (float(x) for x in sec.get("window", [1e3, 1e6]))
    if not 0 < lo < hi:
        raise ConfigError("window must satisfy 0 < lo < hi")
    regime = sec.get("regime", "Polynomial")
    overrides = {k: float(sec[k]) for k in ("kappa", "beta", "m", "q", "delta", "t_min") if k in sec}
    c = float(sec.get("c", math.inf))
    try:
        bound = decay.bound_for(mu, regime, c=c, **overrides)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad [decay]: {exc}") from None
    grid = np.concatenate([[0.0], np.geomspace(lo, hi, int(sec.get("points", 200)))])
    sol = relaxation.solve_integral(mu, lam, 1.0, grid, rtol=tol, with_residual=False)
    report = decay.verify_bound(sol, bound, (lo, hi))
    slope = decay.fit_power_exponent(sol, (lo, hi))
    run.write("decay.csv", decay.reports_to_csv([report]))
    run.curve("decay_solution.csv", sol.to_csv(), "t", ["v"], "log", "log")
    run.write("decay_summary.txt", report.summary() + f"\n  fitted slope = {slope:.6f}\n")
    run.constants.update({"c_star": report.c_star, "growth": report.growth, "fitted_slope": slope,
                          "sub_window_c_star": report.sub_c_star})
    _weight_constants(run, mu)
    run.check(f"{regime} envelope", report.passed, c_star=report.c_star, growth=report.growth)
    if "expected_slope" in sec:
        target = float(sec["expected_slope"])
        stol = float(sec.get("slope_tol", 0.05))
        run.check("fitted slope", abs(slope - target) <= stol, value=slope, target=target, tolerance=stol)


def cmd_diffuse(run, config, tol):
    mu = _weight(config, {"family": "supported", "delta": 0.4})
    sec = _section(config, "diffuse")
    L = _positive(sec, "L", math.pi)
    n_modes = int(sec.get("n_modes", 8))
    u0 = np.asarray(sec.get("u0", [1 / math.sqrt(2), 1 / math.sqrt(2)]), dtype=float)
    a = _positive(sec, "a", 1.0)
    c = float(sec.get("c", 0.0))
    if c > 0:
        raise ConfigError("reaction coefficient c must be nonpositive")
    grid = relaxation.geometric_grid(_positive(sec, "t_first", 1e-4), _positive(sec, "T", 1e6),
                                     _positive(sec, "ratio", 1.05))
    try:
        prob = diffusion.SpectralProblem(L, n_modes, mu, u0, a=a, c=c)
    except ValueError as exc:
        raise ConfigError(f"bad [diffuse]: {exc}") from None
    state = diffusion.march(prob, grid)
    u0_norm = float(np.linalg.norm(prob.u0))
    bound = diffusion.comparison_bound(mu, prob.lam1, diffusion.poincare_constant(L), u0_norm, grid)
    run.curve("diffuse.csv", diffusion.trajectory_to_csv(state, bound), "t", ["l2_norm", "bound"], "log", "log")
    margins = diffusion.comparison_margins(state, bound)
    worst = float(np.nanmin(margins))
    run.constants.update({"min_margin": worst, "poincare_constant": diffusion.poincare_constant(L),
                          "comparison_rate": prob.lam1 / diffusion.poincare_constant(L) ** 2})
    _weight_constants(run, mu)
    run.check("comparison principle", worst >= -1e-6 * u0_norm, value=worst, tolerance=1e-6 * u0_norm)


def cmd_ml(run, config, tol):
    sec = _section(config, "ml")
    alpha = float(sec.get("alpha", 0.5))
    x = np.asarray(sec.get("x", np.linspace(0.0, 10.0, 41).tolist()), dtype=float)
    if not 0 < alpha <= 1 or np.any(x < 0):
        raise ConfigError("need 0 < alpha <= 1 and x >= 0")
    vals = np.atleast_1d(mloracle.mittag_leffler_neg(alpha, x))
    lines = ["alpha,x,value"] + [f"{alpha:.17g},{a:.17g},{b:.17g}" for a, b in zip(x, vals)]
    run.curve("ml.csv", "\n".join(lines) + "\n", "x", ["value"])
    run.check("values in (0, 1]", bool(np.all((vals > 0) & (vals <= 1))))


def cmd_verify_all(run, config, tol, threads, seed):
    results = verification.run_all(threads=threads, seed=seed)
    lines = ["criterion,name,quantity,value,pass"]
    for r in results:
        for k, v in r.measured.items():
            value = str(bool(v)).lower() if isinstance(v, (bool, np.bool_)) else f"{float(v):.17g}"
            lines.append(f"{r.number},{r.name},{k},{value},{str(r.passed).lower()}")
        run.check(f"criterion {r.number}: {r.name}", r.passed, measured=r.measured, thresholds=r.thresholds)
        print(r.line())
    run.write("verify_all.csv", "\n".join(lines) + "\n")
    by_number = {r.number: r for r in results}
    state, bound = by_number[7].curves["state"], by_number[7].curves["bound"]
    run.curve("heat_run.csv", diffusion.trajectory_to_csv(state, bound), "t", ["l2_norm", "bound"], "log", "log")
    run.write("decay_reports.csv", decay.reports_to_csv(by_number[6].curves["decay_reports"]))


def cmd_golden(run, config, tol, freeze=False):
    directory = golden.golden_dir()
    if freeze:
        path = golden.freeze(directory)
        run.constants["frozen"] = str(path)
        return
    try:
        entries = golden.golden_regression(directory)
    except OSError as exc:
        raise ConfigError(f"no golden values in {directory}: {exc}") from None
    lines = ["name,old,new,tol,ok"] + [
        f"{e.name},{e.old:.17g},{e.new:.17g},{e.tol:.3g},{str(e.ok).lower()}" for e in entries
    ]
    run.write("golden.csv", "\n".join(lines) + "\n")
    for e in entries:
        if not e.ok:
            print(e.describe())
        run.check(e.name, e.ok, old=e.old, new=e.new, tolerance=e.tol)
    run.constants["golden_dir"] = str(directory)


def build_parser():
    parser = argparse.ArgumentParser(prog="ultraslow", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--out", default="ultraslow-out", help="output directory")
    parser.add_argument("--tol", type=float, default=laplace.DEFAULT_RTOL, help="relative quadrature tolerance")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    parser.add_argument("--freeze", action="store_true", help="golden: rewrite the golden values")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    flags = {"tol": args.tol, "threads": args.threads, "seed": args.seed}
    try:
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        config = load_config(args.config)
        run = Run(args.command, args.out, config, flags)
        if args.command == "verify-all":
            cmd_verify_all(run, config, args.tol, args.threads, args.seed)
        elif args.command == "golden":
            cmd_golden(run, config, args.tol, freeze=args.freeze)
        else:
            handler = {"kernel": cmd_kernel, "relax": cmd_relax, "decay": cmd_decay,
                       "diffuse": cmd_diffuse, "ml": cmd_ml}[args.command]
            handler(run, config, args.tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status = run.finish()
    if status:
        failures = [c["name"] for c in run.checks if not c["passed"]]
        print(json.dumps({"failures": failures}), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
