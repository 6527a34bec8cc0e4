"""Uniform time grids, sampled functions and history segments.

A :class:`GridFunction` is the discrete stand-in for a bounded uniformly
continuous function on the real line: piecewise-linear between nodes of a
uniform grid, extended to the left of the grid by a constant or periodic
rule.  A :class:`HistorySegment` is the backward-looking view
``s -> u(t + s)`` used as the second argument of delay operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "GridFunction",
    "HistorySegment",
    "upper_bracket",
    "vector_norm",
    "write_csv",
    "read_csv",
]


def vector_norm(x, kind="euclidean"):
    """Norm of a state vector, or of each row of an (n, d) array."""
    x = np.asarray(x, dtype=float)
    axis = -1 if x.ndim > 0 else None
    if kind == "euclidean":
        return np.linalg.norm(x, axis=axis)
    if kind == "max":
        return np.max(np.abs(x), axis=axis)
    raise ValueError(f"unknown norm kind {kind!r}")


def upper_bracket(y, x, kind="euclidean"):
    """One-sided directional derivative of the norm at ``x`` in direction ``y``.

    ``[y, x]_+ = lim_{h->0+} (|x + h y| - |x|) / h``.  For the Euclidean
    norm this is ``<y, x>/|x|`` for ``x != 0`` and ``|y|`` at the origin.
    For the max-norm it is the largest of ``sign(x_i) y_i`` over the
    indices where ``|x_i|`` attains the norm.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = vector_norm(x, kind)
    if nx == 0.0:
        return float(vector_norm(y, kind))
    if kind == "euclidean":
        return float(np.dot(y, x) / nx)
    # max-norm: active indices decide
    active = np.abs(np.abs(x) - nx) <= 1e-14 * max(nx, 1.0)
    return float(np.max(np.sign(x[active]) * y[active]))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [t_min, t_max] with spacing dt and state dimension dim."""

    t_min: float
    t_max: float
    dt: float
    dim: int = 1

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be < t_max")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        n = (self.t_max - self.t_min) / self.dt
        if abs(n - round(n)) > 1e-8 * max(1.0, abs(n)):
            raise ValueError("(t_max - t_min)/dt must be an integer")
        if round(n) < 1:
            raise ValueError("grid needs at least 2 nodes")

    @property
    def n_nodes(self):
        return int(round((self.t_max - self.t_min) / self.dt)) + 1

    @property
    def times(self):
        return self.t_min + self.dt * np.arange(self.n_nodes)

    def index_of(self, t):
        """Nearest-node index of a time that lies on the grid."""
        i = (t - self.t_min) / self.dt
        return int(round(i))


# left-extension rules: ("constant", None) or ("periodic", T)
def _check_extension(ext):
    kind = ext[0]
    if kind == "constant":
        return ("constant", None)
    if kind == "periodic":
        T = float(ext[1])
        if T <= 0:
            raise ValueError("period must be positive")
        return ("periodic", T)
    raise ValueError(f"unknown left extension {ext!r}")


@dataclass(frozen=True)
class GridFunction:
    """Piecewise-linear sampled function with a left-extension rule.

    ``values`` has shape (n_nodes, dim).  Evaluation is defined for every
    t <= t_max: linear interpolation inside the grid, and for t < t_min
    either the frozen value at t_min ("constant") or periodic wrap-around
    with declared period T ("periodic").
    """

    grid: GridSpec
    values: np.ndarray
    left_extension: tuple = ("constant", None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape != (self.grid.n_nodes, self.grid.dim):
            raise ValueError(
                f"values shape {v.shape} incompatible with grid "
                f"({self.grid.n_nodes} nodes, dim {self.grid.dim})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", v)
        ext = _check_extension(self.left_extension)
        if ext[0] == "periodic" and ext[1] > self.grid.t_max - self.grid.t_min + 1e-9 * self.grid.dt:
            raise ValueError("periodic extension needs the grid to cover one full period")
        object.__setattr__(self, "left_extension", ext)

    @classmethod
    def from_callable(cls, grid, fn, left_extension=("constant", None)):
        t = grid.times
        vals = np.asarray(fn(t), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        return cls(grid, vals, left_extension)

    def _wrap_times(self, t):
        """Map query times into the grid domain via the extension rule."""
        t = np.asarray(t, dtype=float)
        g = self.grid
        kind, T = self.left_extension
        if kind == "constant":
            return np.maximum(t, g.t_min)
        # periodic: shift left-of-domain times up by whole periods
        shift = np.ceil(np.maximum(g.t_min - t, 0.0) / T)
        return t + shift * T

    def eval(self, t):
        """Evaluate at scalar or array t (t <= t_max required)."""
        t = np.asarray(t, dtype=float)
        g = self.grid
        if np.any(t > g.t_max + 1e-9 * g.dt):
            raise ValueError("evaluation beyond t_max is undefined")
        tw = self._wrap_times(t)
        pos = np.clip((tw - g.t_min) / g.dt, 0.0, g.n_nodes - 1.0)
        i0 = np.minimum(pos.astype(int), g.n_nodes - 2)
        w = pos - i0
        out = (1.0 - w)[..., None] * self.values[i0] + w[..., None] * self.values[i0 + 1]
        if t.ndim == 0:
            return out.reshape(self.grid.dim)
        return out

    def __call__(self, t):
        return self.eval(t)

    def sup_norm(self, a=None, b=None, kind="euclidean"):
        """Exact sup of |f| over [a, b] for the piecewise-linear representative.

        The norm of a linear segment is convex in t, so the sup is attained
        at covered nodes or at the interval endpoints.
        """
        g = self.grid
        if a is None:
            a = g.t_min
        if b is None:
            b = g.t_max
        if b < a:
            raise ValueError("empty interval")
        if b > g.t_max + 1e-9 * g.dt:
            raise ValueError("interval beyond t_max")
        candidates = [vector_norm(self.eval(a), kind), vector_norm(self.eval(b), kind)]
        if a < g.t_min:
            kind_ext, T = self.left_extension
            if kind_ext == "constant":
                candidates.append(vector_norm(self.values[0], kind))
            else:
                # periodic: nodes covered by the wrapped part of [a, t_min]
                span = min(b, g.t_min) - a
                if span >= T:
                    lo, hi = g.t_min, min(g.t_min + T, g.t_max)
                else:
                    # wrapped image of [a, min(b, t_min)] is one (possibly split)
                    # subinterval of a period; cover it through sampling nodes
                    lo, hi = None, None
                    ta = self._wrap_times(a)
                    tb = self._wrap_times(min(b, g.t_min))
                    for (x0, x1) in ([(ta, tb)] if ta <= tb else [(g.t_min, tb), (ta, min(g.t_min + T, g.t_max))]):
                        i0 = int(np.ceil((x0 - g.t_min) / g.dt - 1e-9))
                        i1 = int(np.floor((x1 - g.t_min) / g.dt + 1e-9))
                        if i1 >= i0:
                            candidates.append(
                                np.max(vector_norm(self.values[i0:i1 + 1], kind))
                            )
                        candidates.append(vector_norm(self.eval(x0), kind))
                        candidates.append(vector_norm(self.eval(x1), kind))
                if a < g.t_min and span >= T:
                    i0, i1 = g.index_of(lo), g.index_of(hi)
                    candidates.append(np.max(vector_norm(self.values[i0:i1 + 1], kind)))
        # nodes inside [max(a, t_min), b]
        lo = max(a, g.t_min)
        i0 = int(np.ceil((lo - g.t_min) / g.dt - 1e-9))
        i1 = int(np.floor((b - g.t_min) / g.dt + 1e-9))
        if i1 >= i0:
            candidates.append(np.max(vector_norm(self.values[i0:i1 + 1], kind)))
        return float(max(candidates))

    def shifted_eval(self, times, shift):
        """Vectorized u(times - shift); convenience for delay terms."""
        return self.eval(np.asarray(times) - shift)

    def history(self, t, window):
        return HistorySegment(self, t, window)


@dataclass(frozen=True)
class HistorySegment:
    """The backward view ``s -> u(t + s)`` for s in [-r, 0].

    ``window`` is either a finite depth r > 0 or ``("infinite", R_hist)``
    with the sup-type norm computed on the truncated window [-R_hist, 0].
    """

    source: GridFunction
    anchor: float
    window: object = field(default=1.0)

    def __post_init__(self):
        w = self.window
        if isinstance(w, tuple):
            if w[0] != "infinite" or w[1] <= 0:
                raise ValueError("infinite window must be ('infinite', R_hist > 0)")
        elif not w > 0:
            raise ValueError("finite window depth must be positive")
        if self.anchor > self.source.grid.t_max + 1e-9:
            raise ValueError("anchor beyond source domain")

    @property
    def depth(self):
        w = self.window
        return w[1] if isinstance(w, tuple) else w

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s > 1e-12) or np.any(s < -self.depth - 1e-12):
            raise ValueError("history argument outside window")
        return self.source.eval(self.anchor + s)

    def __call__(self, s):
        return self.eval(s)

    def norm(self, kind="euclidean"):
        """Sup-type E-norm over the (truncated) window."""
        return self.source.sup_norm(self.anchor - self.depth, self.anchor, kind)

    def truncation_error_bound(self, omega):
        """Crude bound on what the discarded tail of an infinite window can
        contribute through an exponentially weighted history coupling."""
        if not isinstance(self.window, tuple):
            return 0.0
        return float(np.exp(omega * self.depth))


def write_csv(path, f: GridFunction):
    """Serialize node values as ``t,x1,...,xd`` rows in full precision."""
    d = f.grid.dim
    header = "t," + ",".join(f"x{i+1}" for i in range(d))
    data = np.column_stack([f.grid.times, f.values])
    np.savetxt(path, data, delimiter=",", header=header, comments="",
               fmt="%.17g")


def read_csv(path, left_extension=("constant", None)):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    dt = t[1] - t[0]
    spec = GridSpec(t[0], t[-1], dt, data.shape[1] - 1)
    return GridFunction(spec, data[:, 1:], left_extension)
