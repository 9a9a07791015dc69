import math

import numpy as np
import pytest

from pseudolin.core import PseudoLinearSystem
from pseudolin.corpus import corpus_get
from pseudolin.envelopes import EnvelopeSet
from pseudolin.integrator import IntegrationConfig, integrate
from pseudolin.volterra import (
    compute_volterra_data, envelope_bounds, envelope_volterra_data, volterra_residual,
)

HARMONIC = PseudoLinearSystem.from_functions(Q=1.0, R=-1.0)


def _run(system, ic, span, cfg=None, **kw):
    traj = integrate(system, *ic, span, cfg)
    data = compute_volterra_data(traj, system, **kw)
    return traj, data


def test_q_zero_reduces_to_cauchy():
    s = PseudoLinearSystem.from_functions(P=lambda t, u, v: np.sin(t) + 0 * u, R=1.0, S=-0.5)
    traj, data = _run(s, (1.5, -0.5), (0.0, 4.0), IntegrationConfig(rtol=1e-12, atol=1e-14))
    assert np.max(np.abs(data.K1)) == 0.0
    exact = 1.5 * np.exp(1 - np.cos(data.nodes))
    assert np.max(np.abs(data.v1.values - exact)) < 1e-8
    phi, _ = traj.dense_eval(data.nodes)
    assert np.max(np.abs(phi - data.v1.values)) < 1e-8
    r1, _ = volterra_residual(traj, data)
    assert r1 <= 1e-8


def test_decoupled_kernel_is_t_minus_zeta():
    s = PseudoLinearSystem.from_functions(Q=1.0, R=1.0)
    traj, data = _run(s, (1.0, 0.0), (0.0, 1.0))
    t = data.nodes
    expected = np.tril(t[:, None] - t[None, :])
    assert np.max(np.abs(data.K1 - expected)) < 1e-12
    assert np.max(np.abs(data.K2 - expected)) < 1e-12


def test_kernel_diagonal_zero():
    s = corpus_get("vdp-parametric").system
    _, data = _run(s, (2.0, 0.0), (0.0, 5.0))
    assert np.all(np.diag(data.K1) == 0) and np.all(np.diag(data.K2) == 0)
    assert np.all(np.isfinite(data.K1)) and np.all(np.isfinite(data.K2))


@pytest.mark.parametrize("name,ic,span", [
    ("harmonic", (1.0, 0.0), (0.0, 5.0)),
    ("vdp-parametric", (2.0, 0.0), (0.0, 10.0)),
    ("emden-fowler", (0.5, 0.9), (1.0, 3.0)),
    ("vdp-forced", (2.0, 0.0), (0.0, 10.0)),
    ("pendulum", (1.0, 0.0), (0.0, 10.0)),
    ("coupled-1.15", (0.5, 0.5), (0.0, 10.0)),
    ("pendulum-moving-support", (1.0, 0.0), (0.0, 10.0)),
])
def test_residual_small(name, ic, span):
    s = HARMONIC if name == "harmonic" else corpus_get(name).system
    traj, data = _run(s, ic, span)
    r1, r2 = volterra_residual(traj, data)
    assert r1 <= 1e-5 and r2 <= 1e-5


def test_streaming_matches_stored():
    s = corpus_get("vdp-forced").system
    traj = integrate(s, 2.0, 0.0, (0.0, 6.0))
    stored = compute_volterra_data(traj, s, store_kernels=True)
    streamed = compute_volterra_data(traj, s, store_kernels=False)
    assert streamed.K1 is None
    a = volterra_residual(traj, stored)
    b = volterra_residual(traj, streamed)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


def test_printed_variants_fail_where_expected():
    # with a forcing term and Q != 1 the literal displays are not identities
    s = corpus_get("vdp-forced").system
    traj = integrate(s, 2.0, 0.0, (0.0, 10.0))
    derived = volterra_residual(traj, compute_volterra_data(traj, s))
    printed = volterra_residual(traj, compute_volterra_data(traj, s, variant="printed"))
    assert max(derived) < 1e-5
    assert max(printed) > 1e-2


def test_envelope_zero_kernels():
    env = EnvelopeSet.of()
    b = envelope_bounds(env, 2.0, -3.0, 5.0)
    assert b.M1 == 0 and b.M2 == 0
    assert b.m1 == 2.0 and b.m2 == 3.0
    assert b.bound1 == 2.0 and b.bound2 == 3.0


def test_envelope_hand_evaluation():
    env = EnvelopeSet.of(Q0=1.0, R0=1.0)
    b = envelope_bounds(env, 1.0, 1.0, 1.0)
    assert b.M1 == pytest.approx(1.0, abs=1e-12)
    assert b.m1 == pytest.approx(2.0, abs=1e-10)
    assert b.bound1 == pytest.approx(2 * math.e, rel=1e-9)
    d = envelope_volterra_data(env, 1.0, 1.0, np.linspace(0, 1, 65))
    t = d.nodes
    assert np.max(np.abs(d.K1 - np.tril(t[:, None] - t[None, :]))) < 1e-12


def test_vdp_bounds_dominate_trajectory():
    e = corpus_get("vdp-parametric")
    env = e.default_envelopes()
    b = envelope_bounds(env, 2.0, 0.0, 10.0)
    assert not b.overflow and math.isfinite(b.bound1)
    traj = integrate(e.system, 2.0, 0.0, (0.0, 10.0))
    sup_phi, sup_psi = traj.max_norm()
    assert sup_phi <= b.bound1 and sup_psi <= b.bound2


def test_overflow_reported_not_raised():
    e = corpus_get("vdp-parametric")
    b = envelope_bounds(e.default_envelopes(), 2.0, 0.0, 50.0)
    assert b.overflow
    assert b.bound1 == math.inf
    assert b.as_dict()["overflow"] is True


def test_domination_of_kernels_and_v():
    e = corpus_get("vdp-parametric")
    traj = integrate(e.system, 2.0, 0.5, (0.0, 4.0))
    data = compute_volterra_data(traj, e.system)
    env_data = envelope_volterra_data(e.default_envelopes(), 2.0, 0.5, data.nodes)
    tol = 1e-9
    assert np.all(np.abs(data.v1.values) <= env_data.v1.values + tol)
    assert np.all(np.abs(data.v2.values) <= env_data.v2.values + tol)
    assert np.all(np.abs(data.K1) <= env_data.K1 + tol)
    assert np.all(np.abs(data.K2) <= env_data.K2 + tol)


def test_unknown_variant():
    traj = integrate(HARMONIC, 1.0, 0.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        compute_volterra_data(traj, HARMONIC, variant="nope")
