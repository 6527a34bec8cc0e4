"""Independent oracle: the linear integral equation with exponential memory

    u(t) = f(t) + alpha * int_0^inf e^{-beta tau} u(t - tau) dtau,   0 < alpha < beta,

whose solution is given in closed form by the positive resolvent

    u = R f,  (R f)(t) = f(t) + alpha * int_0^inf e^{-(beta-alpha) tau} f(t - tau) dtau.

``resolvent_solve`` evaluates the closed form; ``picard_solve`` iterates the
defining equation directly (contraction factor alpha/beta).  The two share
only the primitive exact-quadrature convolution, with different kernel
parameterizations, so their agreement is evidence rather than tautology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridFunction
from .yosida import exp_convolution_grid

__all__ = ["VolterraProblem", "resolvent_solve", "picard_solve"]


@dataclass(frozen=True)
class VolterraProblem:
    f: GridFunction
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < self.beta:
            raise ValueError("need 0 < alpha < beta")


def resolvent_solve(p: VolterraProblem) -> GridFunction:
    """Closed-form solution u = f + alpha * (e^{-(beta-alpha) tau} conv f)."""
    conv = exp_convolution_grid(p.f, None, normalized=False,
                                rate=p.beta - p.alpha)
    return GridFunction(p.f.grid, p.f.values + p.alpha * conv,
                        p.f.left_extension)


def picard_solve(p: VolterraProblem, tol=1e-12, iter_max=10000) -> GridFunction:
    """Fixed-point iteration u <- f + alpha * (e^{-beta tau} conv u)."""
    u = p.f
    for _ in range(iter_max):
        conv = exp_convolution_grid(u, None, normalized=False, rate=p.beta)
        new = p.f.values + p.alpha * conv
        res = float(np.max(np.abs(new - u.values)))
        u = GridFunction(p.f.grid, new, p.f.left_extension)
        if res <= tol:
            return u
    raise RuntimeError(f"no convergence to {tol} within {iter_max} sweeps")
