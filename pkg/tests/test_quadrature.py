import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudolin.errors import GridTooCoarse, OverflowGuard
from pseudolin.quadrature import (
    GridFunction, cumulative_array, cumulative_integral, definite_integral, enrich_grid,
    exp_weighted_array, exp_weighted_integral, stencil,
)


def test_constant_integrand_exact_on_any_grid():
    rng = np.random.default_rng(0)
    nodes = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 20)]))
    F = cumulative_integral(GridFunction(nodes, np.ones_like(nodes)))
    assert F.values[0] == 0.0
    assert F.values[-1] == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(F.values, nodes, atol=1e-14)


def test_cubic_exact():
    nodes = np.linspace(0, 1, 33)
    F = cumulative_integral(GridFunction.sample(lambda t: t**3, nodes))
    assert abs(F.values[-1] - 0.25) < 1e-10


def test_cos_period():
    nodes = np.linspace(0, 2 * np.pi, 1025)
    F = cumulative_integral(GridFunction.sample(np.cos, nodes))
    assert abs(F.values[-1]) < 1e-10
    assert np.max(np.abs(F.values - np.sin(nodes))) < 1e-10


def test_two_and_three_nodes():
    F, _ = cumulative_array([0.0, 1.0], [1.0, 3.0])
    assert F[-1] == pytest.approx(2.0)
    F, _ = cumulative_array([0.0, 0.5, 1.0], [0.0, 0.25, 1.0])
    assert F[-1] == pytest.approx(1 / 3)


def test_order_at_least_3_7():
    errs, hs = [], []
    for n in (17, 33, 65, 129, 257):
        nodes = np.linspace(0, 3, n)
        F, _ = cumulative_array(nodes, np.exp(nodes) * np.sin(3 * nodes))
        exact = (np.exp(3) * (np.sin(9) - 3 * np.cos(9)) + 3) / 10
        errs.append(abs(F[-1] - exact))
        hs.append(3 / (n - 1))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 3.7


def test_error_estimate_tracks_error():
    nodes = np.linspace(0, 3, 65)
    F, err = cumulative_array(nodes, np.exp(nodes))
    true = np.abs(F - (np.exp(nodes) - 1))
    assert np.all(err >= 0)
    # the lower-order estimate is pessimistic
    assert np.all(true <= err + 1e-15)


def test_grid_too_coarse():
    nodes = np.linspace(0, 10, 6)
    f = GridFunction.sample(lambda t: np.sin(5 * t), nodes)
    with pytest.raises(GridTooCoarse):
        cumulative_integral(f, cap=1e-12)
    assert len(cumulative_integral(f, cap=1e6)) == 6


def test_stencil_shapes():
    idx, w = stencil(np.linspace(0, 1, 10), 4)
    assert idx.shape == (9, 4) and w.shape == (9, 4)
    assert np.allclose(w.sum(axis=1), 1 / 9)


def test_exp_weighted_zero_weight_is_cumulative():
    nodes = np.linspace(0, 2, 101)
    inner = GridFunction.sample(np.cos, nodes)
    y = exp_weighted_integral(inner, GridFunction(nodes, np.zeros_like(nodes)))
    F = cumulative_integral(inner)
    assert np.allclose(y.values, F.values, atol=1e-14)


def test_exp_weighted_growth():
    nodes = np.linspace(0, 1, 257)
    one = GridFunction(nodes, np.ones_like(nodes))
    y = exp_weighted_integral(one, one)
    assert abs(y.values[-1] - (math.e - 1)) < 1e-10


def test_exp_weighted_decay_long_interval():
    nodes = np.linspace(0, 50, 4001)
    one = GridFunction(nodes, np.ones_like(nodes))
    y = exp_weighted_integral(one, GridFunction(nodes, -np.ones_like(nodes)))
    assert np.all(np.isfinite(y.values))
    assert abs(y.values[-1] - (1 - math.exp(-50))) < 1e-8


def test_exp_weighted_solves_linear_ode():
    nodes = np.linspace(0, 2, 2049)
    w = np.sin(nodes) - 0.5
    f = 1 + nodes**2
    E, _ = cumulative_array(nodes, w)
    y, _ = exp_weighted_array(nodes, f, E)
    h = nodes[1] - nodes[0]
    # fourth-order central differences so the check is not limited by h^2
    dy = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    assert np.max(np.abs(dy - (w * y + f)[2:-2])) < 1e-6


def test_overflow_guard_on_huge_exponent():
    nodes = np.linspace(0, 1, 11)
    E = 1e4 * nodes
    with pytest.raises(OverflowGuard):
        exp_weighted_array(nodes, np.ones_like(nodes), E)


def test_grid_function_validation():
    with pytest.raises(ValueError):
        GridFunction([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        GridFunction([0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        GridFunction([0.0, 1.0], [1.0, 2.0], [0.0, -1.0])


def test_enrich_grid_keeps_nodes():
    nodes = np.array([0.0, 0.3, 2.0, 2.05])
    g = enrich_grid(nodes, 0.25)
    assert set(nodes) <= set(g)
    assert np.max(np.diff(g)) <= 0.25 + 1e-15
    assert np.all(np.diff(g) > 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.integers(5, 60))
def test_cubics_integrated_exactly(coef, n):
    nodes = np.linspace(-1.0, 2.0, n)
    p = np.polynomial.Polynomial(coef)
    F, _ = cumulative_array(nodes, p(nodes))
    exact = p.integ()(nodes) - p.integ()(nodes[0])
    assert np.allclose(F, exact, atol=1e-11 * (1 + np.max(np.abs(coef))))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_integral_is_linear(a, b):
    nodes = np.linspace(0, 1, 40)
    f, g = np.sin(nodes), np.exp(nodes)
    lhs = definite_integral(nodes, a * f + b * g)
    rhs = a * definite_integral(nodes, f) + b * definite_integral(nodes, g)
    assert lhs == pytest.approx(rhs, abs=1e-12)
