"""Post-solve verifiers for solution classes.

Given a solved trajectory these check, on the burn-in-trimmed window:
the generalized-solution integral inequality, boundedness and a uniform
continuity modulus, a global Lipschitz estimate, periodicity and
anti-periodicity residuals, and a finite-window scan for epsilon-almost
periods.  Almost periodicity is certified only as a scan statistic (hit
set plus largest gap); a Bochner-style criterion is impossible on a finite
window and every report says so.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import GridFunction, upper_bracket
from .operators import apply_selection

__all__ = [
    "QualitativeReport",
    "integral_solution_residual",
    "lipschitz_estimate",
    "continuity_modulus",
    "periodicity_residual",
    "antiperiodicity_residual",
    "almost_period_scan",
]


@dataclass
class QualitativeReport:
    bound: float = float("nan")
    continuity_modulus: list = field(default_factory=list)
    lipschitz: float = float("nan")
    periodic_residuals: dict = field(default_factory=dict)
    antiperiodic_residuals: dict = field(default_factory=dict)
    almost_periods: list = field(default_factory=list)
    almost_period_largest_gap: float = float("nan")
    integral_solution_max_violation: float = float("nan")
    notes: list = field(default_factory=list)

    def as_dict(self):
        d = dict(self.__dict__)
        d["notes"] = list(self.notes) + [
            "almost-periodicity is a finite-window scan statistic, "
            "not a certification of the function class"
        ]
        return d


def _trim(u: GridFunction, burn_in):
    g = u.grid
    mask = g.times >= g.t_min + burn_in
    return g.times[mask], u.values[mask]


def _history_sup_diff(u, t_a, t_b, depth, step):
    """sup_{s in [-depth, 0]} |u(t_a + s) - u(t_b + s)| on a step-subsampled window."""
    s = -np.arange(0.0, depth + step / 2, step)
    va = u.eval(t_a + s)
    vb = u.eval(t_b + s)
    return float(np.max(np.linalg.norm(va - vb, axis=-1)))


def integral_solution_residual(u: GridFunction, op, n_samples=200, seed=0,
                               burn_in=10.0, horizon=5.0, probe_scale=1.0,
                               quad_step=None):
    """Max violation of the generalized-solution inequality on sampled
    intervals [r, t] and graph pairs [x, y] of the frozen-time family
    B(r) = A(r, u_r) shifted by omega.

    Base points x are drawn both near u(r) and from fixed probe offsets;
    the control terms use the composite control function (time forcing,
    omega-weighted g part, and the history of u itself) with modulus
    L1_omega + L2 + K0.  Returns a dict with the max signed violation per
    base-point family (positive means the inequality failed beyond
    quadrature error).
    """
    g = u.grid
    rng = np.random.default_rng(seed)
    dt = g.dt
    step = quad_step or 2 * dt
    depth = op.history_depth()
    depth = 2 * np.pi if depth is None else depth
    t_lo, t_hi = g.t_min + burn_in + depth, g.t_max
    worst_near, worst_probe = -np.inf, -np.inf
    unorm = float(np.max(np.linalg.norm(u.values, axis=1)))

    for i in range(n_samples):
        r = rng.uniform(t_lo, t_hi)
        t = min(r + rng.uniform(0.0, horizon), t_hi)
        near = i % 2 == 0
        xr = u.eval(r)
        if near:
            x = xr + rng.normal(0.0, 0.05, size=g.dim)
        else:
            x = probe_scale * rng.uniform(-1.0, 1.0, size=g.dim)
        # graph pair of B(r) + omega I
        y = apply_selection(op, r, u.history(r, depth), x) + op.omega * x
        nu = np.arange(r, t + step / 2, step)
        nu[-1] = t
        uv = u.eval(nu)
        w = uv - x
        wn = np.linalg.norm(w, axis=1)
        brackets = np.array([upper_bracket(y, wi) for wi in w])
        integrand = brackets + op.omega * wn
        lhs = wn[-1] - wn[0]
        rhs = np.trapezoid(integrand, nu)
        # composite control distance |h_tilde(nu) - h_tilde(r)| (1-norm parts)
        ctrl = np.zeros_like(nu)
        if op.h is not None:
            hr = op.control_h(np.array([r]))[0]
            ctrl += np.linalg.norm(op.control_h(nu) - hr, axis=1)
        if op.g is not None:
            gr = op.control_g(np.array([r]))[0]
            ctrl += abs(op.omega) * np.linalg.norm(op.control_g(nu) - gr, axis=1)
        if op.k is not None:
            kr = op.control_k(np.array([r]))[0]
            ctrl += np.linalg.norm(op.control_k(nu) - kr, axis=1)
        if op.K0 > 0:
            ctrl += np.array([_history_sup_diff(u, v, r, depth, step) for v in nu])
        xn = np.linalg.norm(x)
        L = float(op.L1(np.array([xn]))[0]) + xn + float(op.L2(np.array([unorm]))[0]) + op.K0
        rhs += L * np.trapezoid(ctrl, nu)
        if op.g is not None:
            gr = op.control_g(np.array([r]))[0]
            gdiff = np.linalg.norm(op.control_g(nu) - gr, axis=1)
            rhs += np.linalg.norm(y) * np.trapezoid(gdiff, nu)
        v = lhs - rhs
        if near:
            worst_near = max(worst_near, v)
        else:
            worst_probe = max(worst_probe, v)
    return {
        "max_violation": max(worst_near, worst_probe),
        "max_violation_near_trajectory": worst_near,
        "max_violation_probe_points": worst_probe,
        "n_samples": n_samples,
    }


def lipschitz_estimate(u: GridFunction, burn_in=10.0, horizon=1.0):
    """Largest difference quotient over node pairs within the horizon.

    Lags are swept in powers of two up to the horizon; the adjacent-node
    quotient is reported separately.
    """
    t, v = _trim(u, burn_in)
    dt = u.grid.dt
    best = 0.0
    adjacent = float(np.max(np.linalg.norm(np.diff(v, axis=0), axis=1))) / dt
    lag = 1
    max_lag = max(int(round(horizon / dt)), 1)
    while lag <= max_lag:
        d = np.linalg.norm(v[lag:] - v[:-lag], axis=1) / (lag * dt)
        best = max(best, float(np.max(d)))
        lag *= 2
    return {"estimate": max(best, adjacent), "adjacent": adjacent}


def continuity_modulus(u: GridFunction, burn_in=10.0, n_levels=8):
    """Table (delta, sup variation) for delta = dt, 2dt, 4dt, ..."""
    _, v = _trim(u, burn_in)
    dt = u.grid.dt
    rows = []
    lag = 1
    for _ in range(n_levels):
        if lag >= len(v):
            break
        d = float(np.max(np.linalg.norm(v[lag:] - v[:-lag], axis=1)))
        rows.append((lag * dt, d))
        lag *= 2
    return rows


def _shift_residual(u, T, burn_in, sign):
    g = u.grid
    t0 = g.t_min + burn_in
    if g.t_max - t0 < 2 * T:
        raise ValueError("window too short for the requested period")
    t = g.times[(g.times >= t0) & (g.times <= g.t_max - T)]
    d = u.eval(t + T) - sign * u.eval(t)
    return float(np.max(np.linalg.norm(d, axis=1)))


def periodicity_residual(u: GridFunction, T, burn_in=10.0):
    """sup over available t of |u(t + T) - u(t)|."""
    return _shift_residual(u, T, burn_in, +1.0)


def antiperiodicity_residual(u: GridFunction, T, burn_in=10.0):
    """sup over available t of |u(t + T) + u(t)|."""
    return _shift_residual(u, T, burn_in, -1.0)


def almost_period_scan(u: GridFunction, epsilon, s_max, ds, burn_in=10.0):
    """All shifts s in [-s_max, s_max] (step ds, snapped to the grid) with
    sup_t |u(t + s) - u(t)| <= epsilon, plus the largest gap between
    consecutive hits as a relative-density surrogate."""
    g = u.grid
    t0 = g.t_min + burn_in
    span = g.t_max - t0
    if s_max > span / 2:
        raise ValueError("s_max exceeds half the trimmed window")
    k_step = max(int(round(ds / g.dt)), 1)
    k_max = int(round(s_max / g.dt))
    i0 = g.index_of(t0) if t0 > g.t_min else 0
    i0 = int(np.ceil((t0 - g.t_min) / g.dt - 1e-9))
    v = u.values
    hits = []
    residuals = []
    for k in range(0, k_max + 1, k_step):
        a = v[i0:len(v) - k]
        b = v[i0 + k:]
        res = float(np.max(np.linalg.norm(a - b, axis=1)))
        residuals.append((k * g.dt, res))
        if res <= epsilon:
            hits.append(k * g.dt)
    # symmetric by construction: include negative shifts
    full = sorted({-s + 0.0 for s in hits} | set(hits))
    gaps = [b - a for a, b in zip(full, full[1:])]
    return {
        "hits": full,
        "largest_gap": max(gaps) if gaps else float("inf"),
        "scan": residuals,
    }
