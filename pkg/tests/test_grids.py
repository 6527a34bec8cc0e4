import numpy as np
import pytest

from delayline.grids import (GridFunction, GridSpec, HistorySegment, read_csv,
                             upper_bracket, vector_norm, write_csv)


def test_gridspec_invariants():
    g = GridSpec(-1.0, 1.0, 0.5)
    assert g.n_nodes == 5
    assert np.allclose(g.times, [-1.0, -0.5, 0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        GridSpec(1.0, -1.0, 0.5)
    with pytest.raises(ValueError):
        GridSpec(-1.0, 1.0, -0.5)
    with pytest.raises(ValueError):
        GridSpec(-1.0, 1.0, 0.3)  # dt does not divide the span


def test_index_of():
    g = GridSpec(-1.0, 1.0, 0.5)
    assert g.index_of(-1.0) == 0
    assert g.index_of(0.5) == 3


def test_eval_interpolates_and_extends_constant():
    g = GridSpec(0.0, 1.0, 0.25)
    f = GridFunction.from_callable(g, lambda t: 2.0 * np.asarray(t))
    assert f.eval(0.375) == pytest.approx(0.75)
    # left of the window: constant extension holds the t_min value
    assert f.eval(-3.0) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        f.eval(1.5)  # right of the window is undefined


def test_eval_periodic_extension():
    T = 1.6
    g = GridSpec(0.0, 4.8, 0.01)
    fn = lambda t: np.cos(2 * np.pi * np.asarray(t) / T)
    f = GridFunction.from_callable(g, fn, left_extension=("periodic", T))
    # the wrapped value must match the T-periodic function itself
    for t in (-1.3, -7.9, -100.0):
        assert f.eval(t) == pytest.approx(fn(t), abs=1e-3)
    with pytest.raises(ValueError):
        # grid shorter than one period cannot carry a periodic extension
        GridFunction.from_callable(GridSpec(0.0, 1.0, 0.01), fn,
                                   left_extension=("periodic", T))


def test_sup_norm_exact_on_nodes():
    g = GridSpec(-2.0, 2.0, 0.5)
    vals = np.zeros((g.n_nodes, 1))
    vals[3, 0] = -7.0
    f = GridFunction(g, vals)
    assert f.sup_norm() == 7.0
    assert f.sup_norm(a=0.0, b=2.0) == 0.0


def test_upper_bracket_euclidean():
    # [TRIVIAL] <y, x>/|x| for x != 0, |y| at x = 0
    y, x = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    assert upper_bracket(y, x) == pytest.approx(11.0 / 5.0)
    assert upper_bracket(y, np.zeros(2)) == pytest.approx(np.sqrt(5.0))


def test_upper_bracket_finite_difference_limit():
    # (|x + h y| - |x|)/h -> [y, x]_+ as h -> 0+
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.normal(size=3), rng.normal(size=3)
        b = upper_bracket(y, x)
        h = 1e-8
        fd = (np.linalg.norm(x + h * y) - np.linalg.norm(x)) / h
        assert b == pytest.approx(fd, abs=1e-6)


def test_upper_bracket_max_norm():
    # max-norm bracket: attained-coordinate directional derivative
    y, x = np.array([5.0, -1.0]), np.array([0.0, 2.0])
    assert upper_bracket(y, x, kind="max") == pytest.approx(-1.0)
    assert vector_norm(np.array([3.0, -4.0]), kind="max") == 4.0


def test_history_segment():
    g = GridSpec(-5.0, 5.0, 0.1)
    f = GridFunction.from_callable(g, lambda t: np.asarray(t))
    seg = f.history(0.0, 2.0)
    assert isinstance(seg, HistorySegment)
    assert seg.eval(-1.0) == pytest.approx(-1.0)
    assert seg.norm() == pytest.approx(2.0)


def test_csv_round_trip(tmp_path):
    g = GridSpec(-1.0, 1.0, 0.25)
    f = GridFunction.from_callable(g, lambda t: np.sin(np.asarray(t) * 10))
    path = tmp_path / "f.csv"
    write_csv(path, f)
    head = path.read_text().splitlines()[0]
    assert head == "t,x1"
    f2 = read_csv(path)
    assert np.array_equal(f.values, f2.values)
    assert f2.grid == g
