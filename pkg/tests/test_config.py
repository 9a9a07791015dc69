import math
import textwrap

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudolin.config import ConfigError, compile_expression, load_config
from pseudolin.core import eval_coefficients
from pseudolin.corpus import corpus_get
from pseudolin.integrator import IntegrationConfig, integrate


@pytest.mark.parametrize("text,expected", [
    ("1 + 2*3", 7.0),
    ("2^3^2", 512.0),
    ("2**3", 8.0),
    ("-2^2", -4.0),
    ("(1 + 2) * 3", 9.0),
    ("8 / 4 / 2", 1.0),
    ("-(-3)", 3.0),
    ("+1.5e1", 15.0),
    (".5", 0.5),
    ("exp(0) + log(e)", 2.0),
    ("cos(pi)", -1.0),
    ("sqrt(abs(-16))", 4.0),
])
def test_constant_expressions(text, expected):
    assert compile_expression(text, ())() == pytest.approx(expected, rel=1e-15)


def test_variables_and_vectorisation():
    f = compile_expression("t^2 - u*v + sin(t)")
    t = np.linspace(0, 1, 5)
    out = f(t, 2.0, 3.0)
    assert np.allclose(out, t**2 - 6 + np.sin(t), rtol=0, atol=1e-15)
    g = compile_expression("0.2 + 0.1*cos(2*t)", ("t",))
    assert g(0.0) == pytest.approx(0.3)


@pytest.mark.parametrize("text", ["", "1 +", "2 3", "foo(1)", "x + 1", "(1", "1)", "3 $ 4", "sin 1"])
def test_bad_expressions(text):
    with pytest.raises(ConfigError):
        compile_expression(text)


def test_argument_count_checked():
    with pytest.raises(TypeError):
        compile_expression("t")(1.0, 2.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 5))
def test_expression_matches_python(a, b, c):
    f = compile_expression(f"{a!r} + {b!r}*cos({c!r}*t) - t^2/{c!r}", ("t",))
    for t in (0.0, 0.7, 3.1):
        assert f(t) == pytest.approx(a + b * math.cos(c * t) - t**2 / c, rel=1e-12, abs=1e-12)


def _write(tmp_path, text, name="sys.ini"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


DUFFING_CFG = """
    [system]
    name = duffing-by-hand
    Q = 1
    R = 1 - u^2      # alpha = -1, beta = 1
    S = -0.3
    G = 0.5*cos(1.2*t)

    [run]
    phi0 = 1
    psi0 = 0
    T = 30
"""


def test_round_trip_against_corpus(tmp_path):
    cfg = load_config(_write(tmp_path, DUFFING_CFG))
    assert not cfg.system.homogeneous
    assert cfg.run == {"phi0": 1.0, "psi0": 0.0, "T": 30.0}
    ref = corpus_get("duffing").system
    rng = np.random.default_rng(0)
    t, u, v = rng.uniform(0, 5, 100), rng.uniform(-3, 3, 100), rng.uniform(-3, 3, 100)
    a, b = eval_coefficients(cfg.system, t, u, v), eval_coefficients(ref, t, u, v)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-15, atol=1e-15)
    ic = IntegrationConfig()
    ta = integrate(cfg.system, 1.0, 0.0, (0.0, 30.0), ic)
    tb = integrate(ref, 1.0, 0.0, (0.0, 30.0), ic)
    grid = np.linspace(0, 30, 301)
    pa, qa = ta.dense_eval(grid)
    pb, qb = tb.dense_eval(grid)
    assert np.max(np.abs(pa - pb)) <= 1e-9 and np.max(np.abs(qa - qb)) <= 1e-9


def test_corpus_section_with_params(tmp_path):
    cfg = load_config(_write(tmp_path, """
        [system]
        corpus = emden-fowler
        rho = 0.5
        sigma = -2.5
        t0 = 1
    """))
    assert cfg.entry.name == "emden-fowler"
    assert cfg.entry.params["rho"] == 0.5
    assert cfg.envelopes is not None
    assert cfg.system.homogeneous


def test_explicit_envelopes(tmp_path):
    cfg = load_config(_write(tmp_path, """
        [system]
        corpus = vdp-parametric
        [envelopes]
        Q0 = 1
        R0 = 1 + 0.2*cos(t)
        S0 = 0.1
        B1 = -1
        B2 = 1
    """))
    t = np.linspace(0, 3, 7)
    assert np.allclose(cfg.envelopes.sample("R0", t), 1 + 0.2 * np.cos(t))
    assert np.all(cfg.envelopes.sample("P0", t) == 0)
    assert cfg.envelopes.sample("B2", 0.0) == 1.0


def test_zero_sources_stay_homogeneous(tmp_path):
    cfg = load_config(_write(tmp_path, """
        [system]
        Q = 1
        R = t^-3 * u
        F = 0
        t0 = 1
    """))
    assert cfg.system.homogeneous and cfg.system.t0 == 1.0


@pytest.mark.parametrize("text", [
    "[run]\nT = 1\n",
    "[system]\ncorpus = vdp-parametric\n[extra]\nx = 1\n",
    "[system]\nW = 1\n",
    "[system]\nQ = 1 +\n",
    "[system]\ncorpus = vdp-parametric\n[envelopes]\nZ0 = 1\n",
    "[system]\ncorpus = vdp-parametric\n[run]\nbogus = 1\n",
    "[system]\ncorpus = vdp-parametric\n[run]\nT = abc\n",
    "not an ini file",
])
def test_config_errors(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")
