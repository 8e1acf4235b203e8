"""Reference weights used by the verification suite and the CLI."""

from __future__ import annotations

from . import weight

# name -> (constructor, kwargs); kept as data so manifests can echo it
CATALOG_SPECS = {
    "uniform": {"family": "constant", "a": 1.0},
    "linear": {"family": "power_near_zero", "a": 2.0, "kappa": 1.0},
    "stretched": {"family": "stretched_exp", "a": 1.0, "kappa": 1.0, "beta": 1.0, "m": 1.0},
    "double_exp": {"family": "double_exp", "a": 1.0},
    "indicator_half": {"family": "supported", "delta": 0.5},
    "box_half": {"family": "box", "center": 0.5, "width": 0.01},
}


def catalog():
    """The six reference weights, in a fixed order."""
    return {name: weight.from_spec(spec) for name, spec in CATALOG_SPECS.items()}
