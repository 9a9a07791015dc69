import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudolin._csv import read_csv
from pseudolin.core import PseudoLinearSystem
from pseudolin.corpus import corpus_get, corpus_names
from pseudolin.errors import OutOfRange
from pseudolin.integrator import IntegrationConfig, Status, dense_eval, integrate, solve_dopri

HARMONIC = PseudoLinearSystem.from_functions(Q=1.0, R=-1.0)
BLOWUP = PseudoLinearSystem.from_functions(P=lambda t, u, v: u)


def test_harmonic_full_period():
    traj = integrate(HARMONIC, 1.0, 0.0, (0.0, 2 * np.pi))
    assert traj.status is Status.COMPLETED
    assert traj.nodes[0] == 0.0 and traj.nodes[-1] == 2 * np.pi
    assert abs(traj.phi[-1] - 1) < 1e-6 and abs(traj.psi[-1]) < 1e-6


def test_harmonic_dense_midpoint():
    traj = integrate(HARMONIC, 1.0, 0.0, (0.0, 2 * np.pi))
    phi, psi = dense_eval(traj, np.pi / 2)
    assert abs(phi) < 1e-6 and abs(psi + 1) < 1e-6
    t = np.linspace(0, 2 * np.pi, 1000)
    phi, psi = traj.dense_eval(t)
    assert np.max(np.abs(phi - np.cos(t))) < 1e-6
    assert np.max(np.abs(psi + np.sin(t))) < 1e-6


def test_dense_eval_exact_at_nodes():
    traj = integrate(corpus_get("vdp-forced").system, 2.0, 0.0, (0.0, 10.0))
    phi, psi = traj.dense_eval(traj.nodes)
    assert np.array_equal(phi, traj.phi) and np.array_equal(psi, traj.psi)


def test_linear_in_t_exact():
    s = PseudoLinearSystem.from_functions(F=1.0)
    traj = integrate(s, 0.0, 0.0, (0.0, 3.0))
    t = np.linspace(0, 3, 77)
    phi, psi = traj.dense_eval(t)
    assert np.max(np.abs(phi - t)) < 1e-12
    assert np.all(psi == 0)


def test_out_of_range():
    traj = integrate(HARMONIC, 1.0, 0.0, (0.0, 1.0))
    with pytest.raises(OutOfRange):
        traj.dense_eval(1.5)
    with pytest.raises(OutOfRange):
        traj.dense_eval(np.array([0.5, -0.1]))


@pytest.mark.parametrize("phi0", [0.5, 1.0, 2.0])
def test_scalar_blowup(phi0):
    traj = integrate(BLOWUP, phi0, 0.0, (0.0, 3.0))
    assert traj.status is Status.BLEW_UP
    assert abs(traj.t_blow - 1 / phi0) < 1e-3
    assert traj.t_last < 1 / phi0
    assert np.all(np.isfinite(traj.phi))


def test_blowup_estimate_first_order_in_threshold():
    # the last accepted time trails 1/phi0 by about 1/blowup_norm (first order);
    # the escape extrapolation t + phi/phi' is exact for phi' = phi^2, so t_blow
    # stays within that first-order envelope for every threshold
    norms = np.array([1e3, 1e4, 1e5, 1e6])
    lag, errs = [], []
    for nb in norms:
        traj = integrate(BLOWUP, 1.0, 0.0, (0.0, 3.0), IntegrationConfig(blowup_norm=nb))
        lag.append(1.0 - traj.t_last)
        errs.append(abs(traj.t_blow - 1.0))
    slope = np.polyfit(np.log(1 / norms), np.log(lag), 1)[0]
    assert 0.9 <= slope <= 1.1
    assert np.all(np.array(errs) <= 1 / norms)


def test_tolerance_failure_without_growth():
    # the right-hand side turns non-finite at t = 1 while the solution decays:
    # the step collapses with no norm growth
    s = PseudoLinearSystem.from_functions(P=lambda t, u, v: -1.0 / np.sqrt(np.maximum(1.0 - t, 0.0)) + 0 * u)
    with np.errstate(divide="ignore"):
        traj = integrate(s, 1.0, 0.0, (0.0, 2.0))
    assert traj.status is Status.TOLERANCE_FAILURE
    assert traj.t_blow is None
    assert traj.t_last < 1.0


def test_vdp_parametric_completes():
    e = corpus_get("vdp-parametric", eps=0.1, beta=0.2)
    traj = integrate(e.system, 2.0, 0.0, (0.0, 50.0))
    assert traj.status is Status.COMPLETED and traj.t_last == 50.0


@pytest.mark.parametrize("name", corpus_names())
def test_self_convergence(name):
    e = corpus_get(name)
    cfg = IntegrationConfig()
    T = e.t0 + 10
    a = integrate(e.system, *e.default_ic(), (e.t0, T), cfg)
    b = integrate(e.system, *e.default_ic(), (e.t0, T), cfg.halved())
    if a.status is not Status.COMPLETED:
        pytest.skip(f"{name} does not complete on the default horizon")
    assert b.status is Status.COMPLETED
    assert abs(a.phi[-1] - b.phi[-1]) < 10 * cfg.rtol * max(1.0, abs(a.phi[-1]))


def test_trajectory_invariants_and_csv(tmp_path):
    traj = integrate(corpus_get("duffing").system, 1.0, 0.0, (0.0, 20.0))
    assert np.all(np.diff(traj.nodes) > 0)
    assert traj.nodes[0] == 0.0
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    header, cols = read_csv(path)
    assert header == ["t", "phi", "psi"]
    assert np.array_equal(cols[0], traj.nodes)
    assert np.array_equal(cols[1], traj.phi)
    assert path.read_bytes().count(b"\r") == 0


def test_grid_spacing():
    traj = integrate(HARMONIC, 1.0, 0.0, (0.0, 10.0))
    g = traj.grid()
    assert np.max(np.diff(g)) <= 10 / 512 + 1e-12
    assert set(traj.nodes) <= set(g)


def test_tstops_are_hit():
    stops = np.array([0.1, 0.37, 1.234])
    raw = solve_dopri(lambda t, y: -y, 0.0, 2.0, [1.0], IntegrationConfig(), tstops=stops)
    for s in stops:
        assert s in raw.ts


def test_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(rtol=0)
    with pytest.raises(ValueError):
        IntegrationConfig(blowup_norm=1.0)
    with pytest.raises(ValueError):
        integrate(HARMONIC, 1.0, 0.0, (1.0, 1.0))


def test_positivity_for_nonnegative_cross_terms():
    s = corpus_get("emden-fowler").system
    traj = integrate(s, 0.5, 0.9, (1.0, 3.0))
    assert np.all(traj.phi > 0) and np.all(traj.psi > 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3))
def test_linear_decay_matches_exponential(lam, T):
    s = PseudoLinearSystem.from_functions(P=lam, S=-lam)
    traj = integrate(s, 1.0, 1.0, (0.0, T))
    assert traj.phi[-1] == pytest.approx(math.exp(lam * T), rel=1e-7)
    assert traj.psi[-1] == pytest.approx(math.exp(-lam * T), rel=1e-7)
