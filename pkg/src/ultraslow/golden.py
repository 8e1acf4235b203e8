"""Frozen reference values and the regression check against them.

``golden.json`` stores ``{name: {"value": x, "tol": t}}``.  Entries with a
closed form (``k(1)``, ``g(1)`` and ``G(1)`` for ``mu = 1``, normalization,
Mittag-Leffler points) were frozen from those formulas; the per-catalog
kernel values were frozen from a reviewed build and guard against drift.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import laplace, mloracle, relaxation
from .catalog import catalog

ENV_DIR = "ULTRASLOW_GOLDEN_DIR"
FILE_NAME = "golden.json"
LAMBDAS = (0.1, 1.0, 100.0)


def golden_dir():
    """Directory holding ``golden.json`` (environment override first)."""
    env = os.environ.get(ENV_DIR)
    return Path(env) if env else Path(__file__).parent / "data"


def compute_values():
    """Recompute every golden quantity, in a fixed order."""
    out = {}
    mus = catalog()
    for name, mu in mus.items():
        out[f"k(1)/{name}"] = float(laplace.k_kernel(mu, 1.0))
        out[f"g(1)/{name}"] = float(laplace.g_kernel(mu, np.array([1.0]))[0])
        out[f"G(1)/{name}/lambda=1"] = float(laplace.spectral_density_G(mu, 1.0, 1.0))
        for lam in LAMBDAS:
            out[f"normalization/{name}/lambda={lam:g}"] = relaxation.normalization_check(mu, lam)
    for alpha, x in ((1.0, 1.0), (0.5, 1.0), (0.3, 0.5), (0.7, 2.0), (0.9, 10.0)):
        out[f"ml/alpha={alpha:g}/x={x:g}"] = float(mloracle.mittag_leffler_neg(alpha, x))
    return out


def closed_forms():
    """Values with an independent closed form or quadrature oracle."""
    from scipy import integrate, special

    out = {
        "k(1)/uniform": integrate.quad(special.rgamma, 0.0, 1.0, epsabs=0, epsrel=1e-13)[0],
        "g(1)/uniform": float(np.e * special.exp1(1.0)),
        "G(1)/uniform/lambda=1": 2.0 * np.pi / (np.pi**2 + 4.0),
        "ml/alpha=1/x=1": float(np.exp(-1.0)),
        "ml/alpha=0.5/x=1": float(special.erfcx(1.0)),
    }
    for name in catalog():
        for lam in LAMBDAS:
            out[f"normalization/{name}/lambda={lam:g}"] = 1.0
    return out


@dataclass
class GoldenEntry:
    name: str
    old: float
    new: float
    tol: float

    @property
    def ok(self):
        return bool(np.isfinite(self.new) and abs(self.new - self.old) <= self.tol)

    def describe(self):
        status = "ok" if self.ok else "DRIFT"
        return f"{status:5s} {self.name}: old={self.old:.17g} new={self.new:.17g} tol={self.tol:.1e}"


def load(directory=None):
    path = Path(directory or golden_dir()) / FILE_NAME
    with open(path) as fh:
        return json.load(fh)


def golden_regression(directory=None):
    """Compare recomputed values with the frozen ones; returns the entries."""
    frozen = load(directory)
    fresh = compute_values()
    entries = []
    for name, rec in frozen.items():
        new = fresh.get(name, float("nan"))
        entries.append(GoldenEntry(name, float(rec["value"]), float(new), float(rec["tol"])))
    return entries


def freeze(directory=None, tol=1e-8):
    """Write the current values as the new golden file (review before committing)."""
    values = compute_values()
    values.update(closed_forms())
    path = Path(directory or golden_dir())
    path.mkdir(parents=True, exist_ok=True)
    data = {}
    for name, value in values.items():
        t = 1e-6 if name.startswith(("normalization", "G(1)")) else tol
        data[name] = {"value": value, "tol": t}
    with open(path / FILE_NAME, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=False)
        fh.write("\n")
    return path / FILE_NAME
