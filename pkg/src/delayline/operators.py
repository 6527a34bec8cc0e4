"""Dissipative operator families A(t, phi) with computable resolvents.

Every catalog entry declares its structural constants (omega, the history
coupling K0, Lipschitz constants of its control functions) and provides a
resolvent evaluator, vectorized over grid nodes.  Multivalued entries are
represented only through their resolvents; near-elements of A are produced
by the difference quotient of the resolvent at a small probe step.

The statistical checkers sample the declared inequalities (nonexpansive
resolvents, the control inequality in its plain and perturbed forms, the
history-Lipschitz bound of the shifted resolvent) and report the largest
observed violation; violations are report content, not exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import GridFunction, HistorySegment, vector_norm

__all__ = [
    "OperatorSpec",
    "ResolventQuery",
    "resolvent",
    "resolvent_omega",
    "apply_selection",
    "check_dissipativity",
    "check_control_inequality",
    "history_lipschitz_check",
    "is_admitted",
    "HypothesisError",
    "linear_scalar",
    "affine_forced",
    "delay_linear",
    "delay_cubic",
    "shrinkage_multivalued",
    "diagonal",
    "CATALOG",
    "make_operator",
]

LAMBDA_PROBE = 1e-4
TOL_RES = 1e-12


class HypothesisError(ValueError):
    """Operator constants violate the convergence hypotheses (K0 < -omega)."""


def _as_cols(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != dim and x.shape[1] == 1:
        x = np.broadcast_to(x, (x.shape[0], dim))
    return x


@dataclass(frozen=True)
class OperatorSpec:
    """Shared structure of a dissipative family A(t, phi).

    Control functions ``h``, ``k``, ``g`` are vectorized callables of time
    (or None for identically zero); ``L1``/``L2`` are the nondecreasing
    moduli of the control inequality.  ``delay`` is None (no history),
    a finite depth r > 0, or ("infinite", R_hist).
    """

    dim: int = 1
    omega: float = -1.0
    K0: float = 0.0
    assumption: str = "A2.2"  # "A2.2" (uniformly continuous) or "A2.3" (Lipschitz, with g)
    delay: object = None
    h: object = None
    k: object = None
    g: object = None
    L1: object = field(default=lambda s: np.ones_like(np.asarray(s, dtype=float)))
    L2: object = field(default=lambda s: np.zeros_like(np.asarray(s, dtype=float)))
    Lh: float = 0.0
    Lk: float = 0.0
    Lg: float = 0.0

    def __post_init__(self):
        if self.omega >= 0:
            raise ValueError("omega must be negative")
        if self.K0 < 0:
            raise ValueError("K0 must be nonnegative")
        if self.assumption not in ("A2.2", "A2.3"):
            raise ValueError("assumption kind must be 'A2.2' or 'A2.3'")

    # --- interface implemented by concrete entries -----------------------
    def resolvent_raw(self, mu, t, feat, z):
        """J_mu(t, phi) z for the unshifted family, vectorized over nodes."""
        raise NotImplementedError

    def apply_raw(self, t, feat, x):
        """Direct evaluation A(t, phi) x, or None if multivalued."""
        return None

    def history_depth(self):
        """Finite window depth, 0.0 for history-free, None for infinite."""
        if self.delay is None:
            return 0.0
        if isinstance(self.delay, tuple):
            return None
        return float(self.delay)

    def history_features(self, psi: GridFunction):
        """Per-node summary of psi's history the resolvent depends on."""
        return None

    def history_feature_point(self, phi: HistorySegment | None):
        return None

    # --- conveniences ----------------------------------------------------
    def resolvent_grid(self, mu, times, feats, z):
        return self.resolvent_raw(mu, times, feats, z)

    def control_h(self, t):
        return _as_cols(self.h(np.atleast_1d(t)), self.dim) if self.h else None

    def control_k(self, t):
        return _as_cols(self.k(np.atleast_1d(t)), self.dim) if self.k else None

    def control_g(self, t):
        return _as_cols(self.g(np.atleast_1d(t)), self.dim) if self.g else None


@dataclass(frozen=True)
class ResolventQuery:
    t: float
    phi: object  # HistorySegment or None
    lam: float
    z: object

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


def resolvent(op: OperatorSpec, q: ResolventQuery):
    """x = (I - lam A(t, phi))^{-1} z."""
    feat = op.history_feature_point(q.phi)
    z = np.atleast_2d(np.asarray(q.z, dtype=float))
    t = np.full(z.shape[0], q.t)
    f = None if feat is None else np.atleast_2d(feat)
    return op.resolvent_raw(q.lam, t, f, z)[0]


def resolvent_omega(op: OperatorSpec, q: ResolventQuery):
    """Shifted resolvent via the scaling identity

        J_lam^omega(t, phi) z = J_{lam/(1-lam*omega)}(t, phi)(z/(1-lam*omega)),

    never by re-solving a shifted inclusion.  Requires 0 < lam < 1/|omega|.
    """
    one = 1.0 - q.lam * op.omega
    if op.omega != 0.0 and not q.lam < 1.0 / abs(op.omega):
        raise ValueError("lambda out of range for the shifted resolvent")
    scaled = ResolventQuery(q.t, q.phi, q.lam / one, np.asarray(q.z) / one)
    return resolvent(op, scaled)


def apply_selection(op: OperatorSpec, t, phi, x, lam_probe=LAMBDA_PROBE):
    """A near-element y of A(t, phi) x.

    Single-valued entries are evaluated directly; otherwise the difference
    quotient (J_probe x - x)/probe of the resolvent is used, which lies in
    A at the resolvent pre-image and converges to the minimal section.
    """
    feat = op.history_feature_point(phi)
    x = np.asarray(x, dtype=float)
    direct = op.apply_raw(np.full(1, t), None if feat is None else np.atleast_2d(feat),
                          np.atleast_2d(x))
    if direct is not None:
        return direct[0]
    q = ResolventQuery(t, phi, lam_probe, x)
    return (resolvent(op, q) - x) / lam_probe


# ---------------------------------------------------------------------------
# catalog entries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearScalar(OperatorSpec):
    """A x = a x + c componentwise, a < 0; no time or history dependence."""

    a: float = -1.0
    c: float = 0.0

    def resolvent_raw(self, mu, t, feat, z):
        return (np.asarray(z, dtype=float) + mu * self.c) / (1.0 - mu * self.a)

    def apply_raw(self, t, feat, x):
        return self.a * np.asarray(x, dtype=float) + self.c


@dataclass(frozen=True)
class AffineForced(OperatorSpec):
    """A(t) x = a x + h(t)."""

    a: float = -1.0

    def _force(self, t):
        return self.control_h(t) if self.h else 0.0

    def resolvent_raw(self, mu, t, feat, z):
        return (np.asarray(z, dtype=float) + mu * self._force(t)) / (1.0 - mu * self.a)

    def apply_raw(self, t, feat, x):
        return self.a * np.asarray(x, dtype=float) + self._force(t)


def _delay_feature_grid(op, psi: GridFunction):
    r = op.delay if not isinstance(op.delay, tuple) else op.delay[1]
    vals = psi.eval(psi.grid.times - r)
    return vals


def _delay_feature_point(op, phi):
    if phi is None:
        raise ValueError("delay operator needs a history segment")
    r = op.delay if not isinstance(op.delay, tuple) else op.delay[1]
    return np.atleast_1d(phi.eval(-r))


@dataclass(frozen=True)
class DelayLinear(OperatorSpec):
    """A(t, phi) x = a x + b phi(-r) + h(t); history coupling K0 = |b|."""

    a: float = -1.0
    b: float = 0.5

    def history_features(self, psi):
        return _delay_feature_grid(self, psi)

    def history_feature_point(self, phi):
        return _delay_feature_point(self, phi)

    def _force(self, t, feat):
        out = self.b * feat
        if self.h:
            out = out + self.control_h(t)
        return out

    def resolvent_raw(self, mu, t, feat, z):
        return (np.asarray(z, dtype=float) + mu * self._force(t, feat)) / (1.0 - mu * self.a)

    def apply_raw(self, t, feat, x):
        return self.a * np.asarray(x, dtype=float) + self._force(t, feat)


def _solve_monotone_cubic(mu, c, w, tol=TOL_RES):
    """Root of mu*x^3 + c*x = w (c > 0), vectorized safeguarded Newton."""
    w = np.asarray(w, dtype=float)
    x = w / c
    bound = np.maximum(np.abs(w) / c, np.cbrt(np.abs(w) / max(mu, 1e-300))) + 1.0
    lo, hi = -bound, bound
    for _ in range(100):
        g = mu * x ** 3 + c * x - w
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        step = g / (3.0 * mu * x ** 2 + c)
        xn = x - step
        outside = (xn <= lo) | (xn >= hi)
        xn = np.where(outside, 0.5 * (lo + hi), xn)
        done = np.all(np.abs(xn - x) <= tol * (1.0 + np.abs(xn)))
        x = xn
        if done:
            break
    else:
        raise RuntimeError(
            "cubic resolvent root-finding failed to converge; "
            f"bracket max width {np.max(hi - lo):.3e}"
        )
    return x


@dataclass(frozen=True)
class DelayCubic(OperatorSpec):
    """A(t, phi) x = -x^3 + a x + b phi(-r) + h(t), componentwise cubic."""

    a: float = -1.0
    b: float = 0.5

    def history_features(self, psi):
        return _delay_feature_grid(self, psi)

    def history_feature_point(self, phi):
        return _delay_feature_point(self, phi)

    def _force(self, t, feat):
        out = self.b * feat
        if self.h:
            out = out + self.control_h(t)
        return out

    def resolvent_raw(self, mu, t, feat, z):
        w = np.asarray(z, dtype=float) + mu * self._force(t, feat)
        return _solve_monotone_cubic(mu, 1.0 - mu * self.a, w)

    def apply_raw(self, t, feat, x):
        x = np.asarray(x, dtype=float)
        return -x ** 3 + self.a * x + self._force(t, feat)


@dataclass(frozen=True)
class Shrinkage(OperatorSpec):
    """Multivalued A x = -c_shrink sign(x) + a x; resolvent is soft-thresholding."""

    a: float = -0.0
    c_shrink: float = 1.0

    def resolvent_raw(self, mu, t, feat, z):
        z = np.asarray(z, dtype=float)
        soft = np.sign(z) * np.maximum(np.abs(z) - mu * self.c_shrink, 0.0)
        return soft / (1.0 - mu * self.a)


@dataclass(frozen=True)
class Expansive(OperatorSpec):
    """Negative control: A x = +x is not dissipative (resolvent expands)."""

    def resolvent_raw(self, mu, t, feat, z):
        if mu >= 1.0:
            raise ValueError("resolvent undefined for mu >= 1")
        return np.asarray(z, dtype=float) / (1.0 - mu)

    def apply_raw(self, t, feat, x):
        return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Diagonal(OperatorSpec):
    """Componentwise stack of scalar catalog entries sharing one omega."""

    parts: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        if not self.parts:
            raise ValueError("diagonal operator needs at least one part")
        for p in self.parts:
            if p.dim != 1:
                raise ValueError("diagonal parts must be scalar")
            if p.omega != self.omega:
                raise ValueError("diagonal parts must share omega")

    def history_depth(self):
        depths = [p.history_depth() for p in self.parts]
        if any(d is None for d in depths):
            return None
        return max(depths)

    def history_features(self, psi):
        g = psi.grid
        feats = np.zeros((g.n_nodes, self.dim))
        for j, p in enumerate(self.parts):
            if p.delay is not None:
                comp = GridFunction(
                    GridSpec(g.t_min, g.t_max, g.dt, 1),
                    psi.values[:, j], psi.left_extension)
                feats[:, j] = p.history_features(comp)[:, 0]
        return feats

    def history_feature_point(self, phi):
        if phi is None:
            return None
        out = np.zeros(self.dim)
        for j, p in enumerate(self.parts):
            if p.delay is not None:
                r = p.delay if not isinstance(p.delay, tuple) else p.delay[1]
                out[j] = np.atleast_1d(phi.eval(-r))[j]
        return out

    def resolvent_raw(self, mu, t, feat, z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        for j, p in enumerate(self.parts):
            fj = None if feat is None else feat[:, j:j + 1]
            out[:, j] = p.resolvent_raw(mu, t, fj, z[:, j:j + 1])[:, 0]
        return out

    def apply_raw(self, t, feat, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for j, p in enumerate(self.parts):
            fj = None if feat is None else feat[:, j:j + 1]
            col = p.apply_raw(t, fj, x[:, j:j + 1])
            if col is None:
                return None
            out[:, j] = col[:, 0]
        return out


# --- constructors with declared constants ----------------------------------


def linear_scalar(a=-1.0, c=0.0, omega=-1.0, dim=1):
    if a >= 0:
        raise ValueError("linear_scalar requires a < 0")
    return LinearScalar(dim=dim, omega=omega, a=a, c=c, assumption="A2.3")


def affine_forced(a=-1.0, h=None, omega=-1.0, Lh=1.0, Lg=0.0, dim=1):
    return AffineForced(dim=dim, omega=omega, a=a, h=h, Lh=Lh, Lg=Lg,
                        assumption="A2.3")


def delay_linear(a=-1.0, b=0.5, r=math.pi, h=None, omega=-1.0, Lh=1.0, dim=1,
                 assumption="A2.2", infinite=False):
    delay = ("infinite", r) if infinite else r
    return DelayLinear(dim=dim, omega=omega, a=a, b=b, delay=delay, h=h,
                       K0=abs(b), Lh=Lh, assumption=assumption)


def delay_cubic(a=-1.0, b=0.5, r=math.pi, h=None, omega=-1.0, Lh=1.0, dim=1):
    return DelayCubic(dim=dim, omega=omega, a=a, b=b, delay=r, h=h,
                      K0=abs(b), Lh=Lh, assumption="A2.2")


def shrinkage_multivalued(c=1.0, a=0.0, omega=-1.0, dim=1):
    if a > 0:
        raise ValueError("shrinkage entry requires a <= 0")
    return Shrinkage(dim=dim, omega=omega, a=a, c_shrink=c, assumption="A2.3")


def diagonal(parts, omega=-1.0):
    parts = tuple(parts)
    return Diagonal(
        dim=len(parts), omega=omega, parts=parts,
        K0=max(p.K0 for p in parts),
        Lh=max(p.Lh for p in parts), Lk=max(p.Lk for p in parts),
        Lg=max(p.Lg for p in parts),
        assumption="A2.2" if any(p.assumption == "A2.2" for p in parts) else "A2.3",
        delay=max((p.delay for p in parts if p.delay is not None and not isinstance(p.delay, tuple)), default=None),
    )


def expansive_control(omega=-1.0, dim=1):
    return Expansive(dim=dim, omega=omega, assumption="A2.3")


def is_admitted(op: OperatorSpec):
    """Convergence hypothesis gate: K0 < -omega (and L_g < -omega for A2.3)."""
    if op.assumption == "A2.3":
        return max(op.K0, op.Lg) < -op.omega
    return op.K0 < -op.omega


def require_admitted(op: OperatorSpec):
    if not is_admitted(op):
        raise HypothesisError(
            f"operator refused: K0={op.K0}, Lg={op.Lg} not < -omega={-op.omega}"
        )


# ---------------------------------------------------------------------------
# statistical assumption checkers
# ---------------------------------------------------------------------------

_PROBE_LAMBDAS = (0.5, 0.2, 0.1, 0.05, 0.01)


def _sample_features(op, rng, n):
    """Sampled history pairs: constant histories plus a shared bounded shape,
    so that |phi1 - phi2|_E equals the constant offset exactly."""
    if op.history_depth() == 0.0:
        return None, None, np.zeros(n)
    c1 = rng.uniform(-1.5, 1.5, (n, op.dim))
    c2 = rng.uniform(-1.5, 1.5, (n, op.dim))
    return c1, c2, np.linalg.norm(c1 - c2, axis=1)


def check_dissipativity(op: OperatorSpec, n_samples=10000, seed=0):
    """Sampled nonexpansiveness |J_lam z1 - J_lam z2| <= |z1 - z2|."""
    rng = np.random.default_rng(seed)
    worst, n_viol = 0.0, 0
    per = max(n_samples // len(_PROBE_LAMBDAS), 1)
    for lam in _PROBE_LAMBDAS:
        t = rng.uniform(-10, 10, per)
        z1 = rng.uniform(-2, 2, (per, op.dim))
        z2 = rng.uniform(-2, 2, (per, op.dim))
        f1, _, _ = _sample_features(op, rng, per)
        x1 = op.resolvent_raw(lam, t, f1, z1)
        x2 = op.resolvent_raw(lam, t, f1, z2)
        viol = np.linalg.norm(x1 - x2, axis=1) - np.linalg.norm(z1 - z2, axis=1)
        worst = max(worst, float(np.max(viol)))
        n_viol += int(np.sum(viol > 10 * TOL_RES))
    return {
        "max_violation": worst,
        "n_violations": n_viol,
        "n_samples": per * len(_PROBE_LAMBDAS),
        "passed": n_viol == 0,
    }


def _pairs_via_selection(op, rng, t1, t2, f1, f2, n):
    """Sampled graph pairs [x_i, y_i] in A(t_i, phi_i).

    Single-valued entries are evaluated directly.  Otherwise the pair
    (J_probe x, (J_probe x - x)/probe) is used, which lies exactly in the
    graph of A.
    """
    x1 = rng.uniform(-2, 2, (n, op.dim))
    x2 = rng.uniform(-2, 2, (n, op.dim))
    y1 = op.apply_raw(t1, f1, x1)
    if y1 is None:
        j1 = op.resolvent_raw(LAMBDA_PROBE, t1, f1, x1)
        j2 = op.resolvent_raw(LAMBDA_PROBE, t2, f2, x2)
        y1, y2 = (j1 - x1) / LAMBDA_PROBE, (j2 - x2) / LAMBDA_PROBE
        x1, x2 = j1, j2
    else:
        y2 = op.apply_raw(t2, f2, x2)
    return x1, x2, y1, y2


def check_control_inequality(op: OperatorSpec, n_samples=10000, seed=0,
                             K0=None, tol=1e-9):
    """Sampled control inequality of the declared assumption kind, plus the
    omega-perturbed form.

    The perturbed form is checked with the lambda factor on the k-term; the
    residual of the variant without that factor is reported alongside (the
    factor-free display is presumed a typo and is not silently adopted).
    ``K0`` overrides the declared constant (negative-control runs).
    """
    rng = np.random.default_rng(seed)
    K0 = op.K0 if K0 is None else K0
    per = max(n_samples // len(_PROBE_LAMBDAS), 1)
    worst = worst_pert = worst_pert_nolam = -np.inf
    n_viol = n_viol_pert = 0
    norm1 = lambda v: np.linalg.norm(v, axis=1)
    for lam in _PROBE_LAMBDAS:
        t1 = rng.uniform(-10, 10, per)
        t2 = rng.uniform(-10, 10, per)
        f1, f2, dphi = _sample_features(op, rng, per)
        x1, x2, y1, y2 = _pairs_via_selection(op, rng, t1, t2, f1, f2, per)
        dx = norm1(x1 - x2)
        base = norm1(x1 - x2 - lam * (y1 - y2))
        h1, h2 = op.control_h(t1), op.control_h(t2)
        dh = norm1(h1 - h2) if h1 is not None else 0.0
        k1, k2 = op.control_k(t1), op.control_k(t2)
        dk = norm1(k1 - k2) if k1 is not None else 0.0
        g1, g2 = op.control_g(t1), op.control_g(t2)
        dg = norm1(g1 - g2) if g1 is not None else 0.0
        L1x = op.L1(norm1(np.atleast_2d(x2)))
        L2p = op.L2(np.linalg.norm(f2, axis=1)) if f2 is not None else 0.0
        rhs = base + lam * dh * L1x + lam * dk * L2p + K0 * lam * dphi
        if op.assumption == "A2.3":
            rhs = rhs + lam * dg * norm1(y2)
        worst = max(worst, float(np.max(dx - rhs)))
        n_viol += int(np.sum(dx - rhs > tol))

        # perturbed family A + omega I: y -> y + omega x
        yo1 = y1 + op.omega * x1
        yo2 = y2 + op.omega * x2
        base_o = norm1(x1 - x2 - lam * (yo1 - yo2))
        dh_om = dh + abs(op.omega) * dg
        L1om = L1x + norm1(np.atleast_2d(x2))
        common = base_o + lam * dh_om * L1om + K0 * lam * dphi + op.omega * lam * dx
        if op.assumption == "A2.3":
            common = common + lam * dg * norm1(yo2)
        worst_pert = max(worst_pert, float(np.max(dx - (common + lam * dk * L2p))))
        worst_pert_nolam = max(worst_pert_nolam, float(np.max(dx - (common + dk * L2p))))
        n_viol_pert += int(np.sum(dx - (common + lam * dk * L2p) > tol))
    return {
        "max_violation": worst,
        "max_violation_perturbed": worst_pert,
        "max_violation_perturbed_k_without_lambda": worst_pert_nolam,
        "n_violations": n_viol + n_viol_pert,
        "n_samples": per * len(_PROBE_LAMBDAS),
        "passed": n_viol == 0 and n_viol_pert == 0,
    }


def history_lipschitz_check(op: OperatorSpec, n_samples=10000, seed=0, tol=1e-9,
                            K0=None):
    """Sampled bound |J^w_lam(t,phi1)z - J^w_lam(t,phi2)z| <= K0*lam/(1-lam*w)*|dphi|_E.

    ``K0`` overrides the declared constant (negative-control runs)."""
    rng = np.random.default_rng(seed)
    K0 = op.K0 if K0 is None else K0
    per = max(n_samples // len(_PROBE_LAMBDAS), 1)
    worst_ratio, worst_excess, n_viol = 0.0, -np.inf, 0
    for lam in _PROBE_LAMBDAS:
        one = 1.0 - lam * op.omega
        mu = lam / one
        t = rng.uniform(-10, 10, per)
        z = rng.uniform(-2, 2, (per, op.dim))
        f1, f2, dphi = _sample_features(op, rng, per)
        x1 = op.resolvent_raw(mu, t, f1, z / one)
        x2 = op.resolvent_raw(mu, t, f2, z / one)
        diff = np.linalg.norm(x1 - x2, axis=1)
        bound = K0 * lam / one * dphi
        worst_excess = max(worst_excess, float(np.max(diff - bound)))
        n_viol += int(np.sum(diff - bound > tol))
        pos = dphi > 1e-12
        if np.any(pos) and K0 > 0:
            worst_ratio = max(worst_ratio, float(np.max(diff[pos] / (bound[pos] + 1e-300))))
    return {
        "max_ratio": worst_ratio,
        "max_excess": worst_excess,
        "n_violations": n_viol,
        "n_samples": per * len(_PROBE_LAMBDAS),
        "passed": n_viol == 0,
    }


# ---------------------------------------------------------------------------
# name-based construction for scenario configs
# ---------------------------------------------------------------------------

CATALOG = {
    "linear_scalar": linear_scalar,
    "affine_forced": affine_forced,
    "delay_linear": delay_linear,
    "delay_cubic": delay_cubic,
    "shrinkage_multivalued": shrinkage_multivalued,
    "expansive_control": expansive_control,
}


def make_operator(name, params, forcing_library=None):
    """Construct a catalog operator from a name and a parameter map.

    Forcing parameters (``h``) given as strings are resolved through the
    forcing library (see :mod:`delayline.shapes`).
    """
    if name not in CATALOG:
        raise KeyError(f"unknown catalog operator {name!r}")
    params = dict(params)
    if "h" in params and isinstance(params["h"], str):
        if forcing_library is None:
            from . import shapes
            forcing_library = shapes.FORCINGS
        params["h"] = forcing_library[params["h"]]
    return CATALOG[name](**params)
