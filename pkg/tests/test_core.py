import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudolin.core import PseudoLinearSystem, eval_coefficients, from_second_order, sinc
from pseudolin.corpus import corpus_get, corpus_names
from pseudolin.errors import NonFiniteCoefficient
from pseudolin.integrator import integrate


def test_decoupled_linear_sample():
    sys_ = PseudoLinearSystem.from_functions(P=1.0)
    c = eval_coefficients(sys_, 0.0, 2.0, 3.0)
    assert (c.p, c.q, c.r, c.s, c.f, c.g, c.b) == (1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    assert sys_.homogeneous


def test_vdp_parametric_sample():
    s = corpus_get("vdp-parametric", eps=0.1, beta=0.2).system
    c = eval_coefficients(s, 0.0, 2.0, 0.0)
    assert c.q == 1.0
    assert c.r == pytest.approx(-1.2)
    assert c.s == pytest.approx(-0.3)
    assert c.p == c.f == c.g == 0.0


def test_emden_fowler_sample():
    s = corpus_get("emden-fowler", rho=0, sigma=-3, n=2, t0=1).system
    c = eval_coefficients(s, 2.0, 4.0, 1.0)
    assert c.q == 1.0
    assert c.r == pytest.approx(0.5)
    assert c.p == c.s == c.f == c.g == 0.0


def test_duffing_from_second_order():
    al, be, k, gam, om = -1.0, 1.0, 0.3, 0.5, 1.2
    s = from_second_order(A=lambda t, u, v: -al - be * u * u, Bc=-k, Fc=lambda t, u, v: gam * np.cos(om * t))
    c = eval_coefficients(s, 0.7, 1.5, -2.0)
    assert c.p == 0.0 and c.q == 1.0 and c.f == 0.0
    assert c.r == pytest.approx(-al - be * 1.5**2)
    assert c.s == -k
    assert c.g == pytest.approx(gam * math.cos(om * 0.7))
    assert not s.homogeneous


def test_zero_second_order():
    s = from_second_order(A=0.0, Bc=0.0)
    c = eval_coefficients(s, 1.0, 3.0, 4.0)
    assert (c.q, c.r, c.s, c.g) == (1.0, 0.0, 0.0, 0.0)
    assert s.homogeneous


def test_pendulum_removable_singularity():
    s = corpus_get("pendulum", m=1, g=1, l0=1, delta=0.0).system
    assert eval_coefficients(s, 0.0, 0.0, 0.0).r == -1.0
    for u in (1e-9, 1e-5, 3e-4, 0.5, -2.0):
        assert eval_coefficients(s, 0.0, u, 0.0).r == pytest.approx(-math.sin(u) / u, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e-3, 1e-3))
def test_sinc_matches_series(u):
    series = 1 - u * u / 6 + u**4 / 120
    assert sinc(u) == pytest.approx(series, rel=1e-15, abs=1e-16)


def test_sinc_vectorised():
    u = np.array([0.0, 1e-6, 0.1, 1.0])
    assert np.allclose(sinc(u), [1.0] + [math.sin(x) / x for x in u[1:]], rtol=1e-15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_coefficient():
    s = PseudoLinearSystem.from_functions(P=lambda t, u, v: 1.0 / u)
    with pytest.raises(NonFiniteCoefficient) as exc:
        eval_coefficients(s, 0.0, 0.0, 1.0)
    assert exc.value.label == "P"


def test_eval_before_t0_rejected():
    s = PseudoLinearSystem.from_functions(P=1.0, t0=1.0)
    with pytest.raises(ValueError):
        eval_coefficients(s, 0.5, 0.0, 0.0)
    with pytest.raises(ValueError):
        eval_coefficients(s, 1.5, np.nan, 0.0)


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_finite_on_grid(name):
    e = corpus_get(name)
    t0 = e.t0
    t, u, v = np.meshgrid(np.linspace(t0, t0 + 20, 10), np.linspace(-10, 10, 10), np.linspace(-10, 10, 10))
    c = eval_coefficients(e.system, t.ravel(), u.ravel(), v.ravel())
    for arr in c:
        assert np.all(np.isfinite(arr))
    assert np.array_equal(c.b, c.p - c.s)


@pytest.mark.parametrize("name", corpus_names())
def test_homogeneous_flag_matches_sources(name):
    s = corpus_get(name).system
    rng = np.random.default_rng(1)
    t = s.t0 + rng.uniform(0, 10, 200)
    u, v = rng.uniform(-5, 5, (2, 200))
    c = eval_coefficients(s, t, u, v)
    if s.homogeneous:
        assert np.all(c.f == 0) and np.all(c.g == 0)
    else:
        assert np.any(c.f != 0) or np.any(c.g != 0)


def test_second_order_psi_is_derivative():
    s = corpus_get("duffing").system
    traj = integrate(s, 1.0, 0.0, (0.0, 10.0))
    nodes = traj.grid(0.005)
    phi, psi = traj.dense_eval(nodes)
    dphi = np.gradient(phi, nodes, edge_order=2)
    assert np.max(np.abs(dphi - psi)[1:-1]) < 1e-3
    # a fourth-order difference pins it much tighter on the uniform part
    h = 1e-3
    tt = np.linspace(1, 9, 50)
    d4 = (np.array(traj.dense_eval(tt - 2 * h)[0]) - 8 * np.array(traj.dense_eval(tt - h)[0])
          + 8 * np.array(traj.dense_eval(tt + h)[0]) - np.array(traj.dense_eval(tt + 2 * h)[0])) / (12 * h)
    assert np.max(np.abs(d4 - traj.dense_eval(tt)[1])) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 20), st.floats(-10, 10), st.floats(-10, 10))
def test_b_is_p_minus_s(t, u, v):
    s = corpus_get("coupled-1.15").system
    c = eval_coefficients(s, t, u, v)
    assert c.b == c.p - c.s
