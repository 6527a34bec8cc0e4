import numpy as np
import pytest

from delayline.grids import GridFunction, GridSpec
from delayline.yosida import (ConvolutionPlan, exp_convolution,
                              exp_convolution_grid, solve_T_lambda,
                              verify_iterate_inequality, yosida_derivative)
from delayline.operators import delay_linear, linear_scalar


def grid(t_min=-20.0, t_max=20.0, dt=0.01):
    return GridSpec(t_min, t_max, dt)


def test_plan_normalization():
    plan = ConvolutionPlan(0.1, grid())
    # truncated kernel mass must account for everything except eps_tail
    assert plan.normalization_residual < 1e-12
    assert plan.tail_cut == pytest.approx(0.1 * np.log(1e12))


def test_convolution_of_constant_is_identity():
    g = grid()
    f = GridFunction(g, np.full(g.n_nodes, 3.5))
    for lam in (0.5, 0.1, 0.0125):
        c = exp_convolution_grid(f, lam)
        assert np.max(np.abs(c - 3.5)) < 1e-10


def test_convolution_of_linear_lags_by_lambda():
    # int (1/lam) e^{-s/lam} (t - s) ds = t - lam, exactly for the
    # piecewise-linear representative away from the left boundary
    g = grid()
    f = GridFunction(g, g.times.copy())
    for lam in (0.2, 0.05):
        c = exp_convolution_grid(f, lam)[:, 0]
        interior = g.times > g.t_min + 40 * lam
        assert np.max(np.abs(c[interior] - (g.times[interior] - lam))) < 1e-9


def test_pointwise_matches_grid_scan():
    g = grid(-5.0, 5.0, 0.05)
    rng = np.random.default_rng(7)
    f = GridFunction(g, rng.normal(size=g.n_nodes))
    c_grid = exp_convolution_grid(f, 0.3)
    for i in (0, 1, 107, g.n_nodes - 1):
        c_pt = exp_convolution(f, 0.3, g.times[i])
        assert c_pt[0] == pytest.approx(c_grid[i, 0], abs=1e-9)


def test_convolution_exact_for_kink():
    # f piecewise linear with a kink on a node: scan must be exact, not O(dt^2)
    g = grid(-10.0, 10.0, 0.1)
    f = GridFunction(g, np.abs(g.times))
    lam = 0.5
    c = exp_convolution_grid(f, lam)[:, 0]
    # closed form for f(t)=|t| with constant left extension at 10:
    # for t >= 0, splitting the integral at s = t:
    #   int_0^t k(s)(t-s) ds + int_t^inf k(s)(s-t) ds (window effects ~e^{-30})
    t = g.times[g.times >= 0]
    ex = (t - lam) + 2 * lam * np.exp(-t / lam)
    got = c[g.times >= 0]
    # the closed form neglects the e^{-(t - t_min)/lam} window term (~2e-9 at t=0)
    assert np.max(np.abs(got - ex)) < 1e-8


def test_yosida_derivative_of_linear_is_one():
    g = grid(dt=0.001)
    f = GridFunction(g, g.times.copy())
    for lam in (0.2, 0.1, 0.05, 0.025, 0.0125):
        d = yosida_derivative(f, lam)[:, 0]
        interior = g.times > g.t_min + 40 * lam
        assert np.max(np.abs(d[interior] - 1.0)) < 1e-8


def test_yosida_derivative_exponential_closed_form():
    # for f = e^{at}: (d_t)_lam f = a e^{at}/(1 + a lam); the sampled
    # representative carries an interpolation bias ~ a dt^2/(12 lam)
    a, lam = 0.3, 0.1
    g = grid(-10.0, 10.0, 0.01)
    f = GridFunction.from_callable(g, lambda t: np.exp(a * np.asarray(t)))
    d = yosida_derivative(f, lam)[:, 0]
    ex = a * np.exp(a * g.times) / (1.0 + a * lam)
    interior = g.times > g.t_min + 40 * lam
    rel = np.max(np.abs(d[interior] - ex[interior]) / ex[interior])
    assert rel < a * g.dt**2 / (12 * lam) + 1e-9


def test_solve_T_lambda_linear_fixed_point():
    # history-free linear entry u' = a u + omega u: T_lam(psi) solves
    # u = (conv u)/(1 - lam(a + omega)), whose fixed point is u = 0
    g = grid(-10.0, 10.0, 0.01)
    op = linear_scalar(a=-1.0)
    psi = GridFunction(g, np.full(g.n_nodes, 4.0))
    u, state = solve_T_lambda(op, psi, lam=0.2)
    # decay from the boundary layer; far interior is ~0
    assert np.max(np.abs(u.values[g.times > 5.0])) < 1e-4
    assert state.residual <= 1e-10 * 4.0
    assert not state.flagged


def test_picard_contraction_measured_below_bound():
    g = grid(-10.0, 10.0, 0.01)
    op = delay_linear(a=-1.0, b=0.5, r=np.pi, h=np.cos)
    psi = GridFunction(g, np.zeros(g.n_nodes))
    far = GridFunction(g, np.full(g.n_nodes, 10.0))
    for lam in (0.2, 0.05):
        u, state = solve_T_lambda(op, psi, lam, init=far)
        q = 1.0 / (1.0 - lam * op.omega)
        assert state.contraction_factor <= q + 0.05


def test_iterate_stability_inequality():
    g = grid(-10.0, 10.0, 0.01)
    op = delay_linear(a=-1.0, b=0.5, r=np.pi, h=np.cos)
    psi = GridFunction(g, np.zeros(g.n_nodes))
    phi = GridFunction.from_callable(g, lambda t: np.sin(0.3 * np.asarray(t)))
    rep = verify_iterate_inequality(op, psi, phi, lam=0.1, tol=1e-6)
    assert rep["passed"], rep
