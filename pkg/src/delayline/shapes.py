"""Fixed library of forcing and start shapes for scenario configs.

Scenarios reference these by name instead of embedding an expression
language; every entry is a vectorized map time -> value.
"""

from __future__ import annotations

import numpy as np

__all__ = ["FORCINGS", "make_start"]

SQRT2 = np.sqrt(2.0)

FORCINGS = {
    "zero": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    "cos": np.cos,
    "sin": np.sin,
    "cos_plus_sin": lambda t: np.cos(t) + np.sin(t),
    "quasi_periodic": lambda t: np.sin(t) + np.sin(SQRT2 * np.asarray(t)),
    "slow_cos": lambda t: np.cos(0.5 * np.asarray(t)),
}


def make_start(spec, grid_times):
    """Start trajectory values from a config spec.

    Accepted forms: ``{"kind": "zero"}``, ``{"kind": "constant", "value": c}``,
    ``{"kind": "expression", "name": <forcing id>}`` and
    ``{"kind": "table", "t": [...], "x": [...]}`` (piecewise-linear).
    """
    kind = spec.get("kind")
    if kind == "zero":
        return np.zeros_like(grid_times)
    if kind == "constant":
        return np.full_like(grid_times, float(spec["value"]))
    if kind == "expression":
        return np.asarray(FORCINGS[spec["name"]](grid_times), dtype=float)
    if kind == "table":
        return np.interp(grid_times, np.asarray(spec["t"]), np.asarray(spec["x"]))
    raise ValueError(f"unknown start kind {kind!r}")
