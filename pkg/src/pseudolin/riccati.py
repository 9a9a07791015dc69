"""Riccati equations along a trajectory of a homogeneous system.

With ``B = P - S`` the ratio ``y = psi/phi`` solves

    y' + Q y^2 + B y - R = 0

and ``z = phi/psi`` solves ``z' + R z^2 - B z - Q = 0``; both are written
here with the coefficients frozen along a computed trajectory.  Given y,

    phi(t) = phi(t0) exp(int_{t0}^{t} [P(tau) + y(tau) Q(tau)] dtau),  psi = y phi.

The integration variable inside the exponent is tau.  Reading the factor
as the constant ``y(t)`` breaks the identity already for the harmonic
oscillator; ``reconstruct_solution(..., reading="t")`` computes that
variant so the difference can be inspected.

A pole of y (resp. z) is a zero of phi (resp. psi); it ends the trace and
is reported in ``escape_time``, not raised.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

import numpy as np

from ._csv import write_csv
from .core import PseudoLinearSystem, eval_coefficients
from .errors import GammaOutOfRange, InitMismatch, NotHomogeneous, OverflowGuard
from .integrator import IntegrationConfig, Status, Trajectory, _dense, solve_dopri
from .quadrature import EXP_SPAN_LIMIT, GridFunction, cumulative_array, exp_weighted_array

ESCAPE_NORM = 1e10
KINDS = ("Y", "Z")


@dataclass
class RiccatiTrace:
    kind: str
    nodes: np.ndarray
    values: np.ndarray
    h_values: np.ndarray
    init: float
    status: Status = Status.COMPLETED
    escape_time: float | None = None

    @property
    def escaped(self) -> bool:
        return self.status is Status.BLEW_UP

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.nodes, self.values)

    def to_csv(self, path: str | os.PathLike) -> None:
        write_csv(path, ("t", "value", "h_value"), (self.nodes, self.values, self.h_values))


def _check_kind(kind):
    kind = str(kind).upper()
    if kind not in KINDS:
        raise ValueError(f"kind must be 'Y' or 'Z', got {kind!r}")
    return kind


def solve_riccati(traj: Trajectory, system: PseudoLinearSystem, kind: str, init: float,
                  cfg: IntegrationConfig | None = None, grid=None) -> RiccatiTrace:
    """Integrate the Y (``psi/phi``) or Z (``phi/psi``) Riccati equation along ``traj``.

    Steps land on every trajectory node; the trace is reported on the
    trajectory's shared grid, truncated where the solution escapes.
    """
    kind = _check_kind(kind)
    cfg = dataclasses.replace(cfg or IntegrationConfig(), blowup_norm=ESCAPE_NORM)
    P, Q, R, S = system.P.fn, system.Q.fn, system.R.fn, system.S.fn

    def coeffs(t):
        u, v = traj.dense_eval(t)
        return P(t, u, v), Q(t, u, v), R(t, u, v), S(t, u, v)

    if kind == "Y":
        def rhs(t, y):
            p, q, r, s = coeffs(t)
            return np.array([-q * y[0] * y[0] - (p - s) * y[0] + r])
    else:
        def rhs(t, z):
            p, q, r, s = coeffs(t)
            return np.array([-r * z[0] * z[0] + (p - s) * z[0] + q])

    t0, t1 = traj.t0, traj.t_last
    raw = solve_dopri(rhs, t0, t1, [float(init)], cfg, tstops=traj.nodes)
    nodes = traj.grid() if grid is None else np.asarray(grid, dtype=float)
    nodes = nodes[nodes <= raw.ts[-1]]
    if len(raw.ts) > 1:
        vals = _dense(raw.ts, raw.ys, raw.rcont, nodes)[:, 0]
    else:
        vals = np.full(len(nodes), float(init))
    phi, psi = traj.dense_eval(nodes)
    c = eval_coefficients(system, nodes, phi, psi)
    h = c.q * vals + c.b if kind == "Y" else c.r * vals - c.b
    return RiccatiTrace(kind, nodes, vals, h, float(init), raw.status, raw.t_blow)


def _require_homogeneous(system):
    if not system.homogeneous:
        raise NotHomogeneous("the Riccati representation needs a homogeneous system (F = G = 0)")


def reconstruct_solution(traj: Trajectory, trace: RiccatiTrace, system: PseudoLinearSystem,
                         reading: str = "tau") -> tuple[GridFunction, GridFunction]:
    """Rebuild ``(phi, psi)`` from a Y or Z trace on the trace's nodes."""
    _require_homogeneous(system)
    if reading not in ("tau", "t"):
        raise ValueError("reading must be 'tau' or 't'")
    nodes = trace.nodes
    phi, psi = traj.dense_eval(nodes)
    phi0, psi0 = float(phi[0]), float(psi[0])
    if trace.kind == "Y":
        if phi0 == 0:
            raise ValueError("phi(t0) must be non-zero for the Y representation")
        ratio = psi0 / phi0
    else:
        if psi0 == 0:
            raise ValueError("psi(t0) must be non-zero for the Z representation")
        ratio = phi0 / psi0
    if abs(trace.init - ratio) > 1e-12 * max(1.0, abs(ratio)):
        raise InitMismatch(f"trace starts at {trace.init!r}, solution ratio is {ratio!r}")
    c = eval_coefficients(system, nodes, phi, psi)
    y = trace.values
    own, cross, start = (c.p, c.q, phi0) if trace.kind == "Y" else (c.s, c.r, psi0)
    if reading == "tau":
        expo, err = cumulative_array(nodes, own + y * cross)
    else:
        e_own, err1 = cumulative_array(nodes, own)
        e_cross, err2 = cumulative_array(nodes, cross)
        expo, err = e_own + y * e_cross, err1 + np.abs(y) * err2
    if np.any(expo > EXP_SPAN_LIMIT):
        raise OverflowGuard("reconstruction exponent exceeds 700")
    main = start * np.exp(expo)
    other = y * main
    main_gf = GridFunction(nodes, main, np.abs(main) * err)
    other_gf = GridFunction(nodes, other, np.abs(other) * err)
    return (main_gf, other_gf) if trace.kind == "Y" else (other_gf, main_gf)


def max_relative_deviation(reference, approx) -> float:
    """``max |approx - reference| / max |reference|``."""
    reference = np.asarray(reference, dtype=float)
    scale = float(np.max(np.abs(reference)))
    return float(np.max(np.abs(np.asarray(approx, dtype=float) - reference))) / (scale if scale > 0 else 1.0)


@dataclass(frozen=True)
class LinearFormReport:
    max_deviation: float
    rhs: GridFunction


def linear_form_check(trace: RiccatiTrace, traj: Trajectory, system: PseudoLinearSystem) -> LinearFormReport:
    """Evaluate the trace through its linear form.

    For Y: ``y(t) = exp(-int H)[y(t0) + int exp(int_{t0}^{tau} H) R dtau]`` with
    ``H = Q y + B`` frozen from the trace; for Z the same with ``L = R z - B``
    and source Q.  Reports the largest deviation from the trace values.
    """
    nodes = trace.nodes
    if len(nodes) < 2:
        return LinearFormReport(0.0, GridFunction(nodes, trace.values))
    phi, psi = traj.dense_eval(nodes)
    c = eval_coefficients(system, nodes, phi, psi)
    source = c.r if trace.kind == "Y" else c.q
    Hc, _ = cumulative_array(nodes, trace.h_values)
    if np.any(-Hc > EXP_SPAN_LIMIT):
        raise OverflowGuard("linear-form exponent exceeds 700")
    forced, err = exp_weighted_array(nodes, source, -Hc)
    rhs = trace.values[0] * np.exp(-Hc) + forced
    dev = float(np.max(np.abs(rhs - trace.values)))
    return LinearFormReport(dev, GridFunction(nodes, rhs, err))


@dataclass(frozen=True)
class RiccatiCoefficients:
    """``y' + f(t) y^2 + g(t) y + h(t) = 0``; each entry a callable of t,
    a GridFunction, or a constant."""

    f: object
    g: object
    h: object

    def sample(self, nodes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        nodes = np.asarray(nodes, dtype=float)
        return tuple(_sample(x, nodes) for x in (self.f, self.g, self.h))

    @classmethod
    def along(cls, traj: Trajectory, system: PseudoLinearSystem, kind: str = "Y", nodes=None,
              drop_source: bool = False) -> "RiccatiCoefficients":
        """Coefficients of the Y or Z equation frozen along ``traj``.

        ``drop_source=True`` zeroes h, giving the comparison equation whose
        trivial solution is 0.
        """
        kind = _check_kind(kind)
        nodes = traj.grid() if nodes is None else np.asarray(nodes, dtype=float)
        phi, psi = traj.dense_eval(nodes)
        c = eval_coefficients(system, nodes, phi, psi)
        if kind == "Y":
            f, g, h = c.q, c.b, -c.r
        else:
            f, g, h = c.r, -c.b, -c.q
        if drop_source:
            h = np.zeros_like(h)
        return cls(GridFunction(nodes, f), GridFunction(nodes, g), GridFunction(nodes, h))


def _sample(x, nodes):
    if isinstance(x, GridFunction):
        if not np.array_equal(x.nodes, nodes):
            raise ValueError("GridFunction coefficient must share the working nodes")
        return x.values
    if callable(x):
        return np.broadcast_to(np.asarray(x(nodes), dtype=float), nodes.shape).astype(float)
    return np.full(nodes.shape, float(x))


@dataclass(frozen=True)
class Theorem21Report:
    f1_nonnegative: bool
    eta1_ok: bool
    eta2_ok: bool
    eta1_min_residual: float
    eta2_min_residual: float
    eta_start_ok: bool
    y2_max_residual: float
    min_expression: float
    min_expression_alt: float
    expression: GridFunction
    expression_alt: GridFunction

    @property
    def holds(self) -> bool:
        """All checked hypotheses and the integral condition as printed."""
        return (self.f1_nonnegative and self.eta1_ok and self.eta2_ok and self.eta_start_ok
                and self.min_expression >= 0)

    @property
    def holds_alt(self) -> bool:
        """Same, with ``(f2 - f1) y2^2`` in place of ``(f2 - f1)^2 y2^2``."""
        return (self.f1_nonnegative and self.eta1_ok and self.eta2_ok and self.eta_start_ok
                and self.min_expression_alt >= 0)


def theorem21_condition(pair1: RiccatiCoefficients, pair2: RiccatiCoefficients, y2: GridFunction,
                        eta1: GridFunction, eta2: GridFunction, gamma: float,
                        tol: float = 1e-6) -> Theorem21Report:
    """Evaluate the comparison condition for two Riccati equations on y2's grid.

    The differential inequalities for eta1/eta2 are read as
    ``eta' + f eta^2 + g eta + h >= 0`` with eta' from second-order finite
    differences; ``tol`` absorbs that discretisation error.  The integral
    expression is reported both as printed, with ``(f2 - f1)^2 y2^2``, and
    with ``(f2 - f1) y2^2``, which is what the difference of the two
    equations produces.
    """
    nodes = y2.nodes
    for g in (eta1, eta2):
        if not np.array_equal(g.nodes, nodes):
            raise ValueError("y2, eta1 and eta2 must share nodes")
    y2v, e1, e2 = y2.values, eta1.values, eta2.values
    if not (y2v[0] <= gamma <= e1[0]):
        raise GammaOutOfRange(f"gamma={gamma!r} not in [y2(t0), eta1(t0)] = [{y2v[0]!r}, {e1[0]!r}]")
    f1, g1, h1 = pair1.sample(nodes)
    f2, g2, h2 = pair2.sample(nodes)

    def deriv(x):
        return np.gradient(x, nodes, edge_order=2) if len(nodes) >= 3 else np.gradient(x, nodes)

    res1 = deriv(e1) + f1 * e1**2 + g1 * e1 + h1
    res2 = deriv(e2) + f2 * e2**2 + g2 * e2 + h2
    y2_res = deriv(y2v) + f2 * y2v**2 + g2 * y2v + h2

    E, _ = cumulative_array(nodes, f1 * (e1 + e2) + g1)
    if np.any(E > EXP_SPAN_LIMIT):
        raise OverflowGuard("comparison weight exceeds exp range")
    w = np.exp(E)
    tail = (g2 - g1) * y2v + h2 - h1
    D = (f2 - f1) ** 2 * y2v**2 + tail
    D_alt = (f2 - f1) * y2v**2 + tail
    base = gamma - y2v[0]
    I, err = cumulative_array(nodes, w * D)
    I_alt, err_alt = cumulative_array(nodes, w * D_alt)
    expr = GridFunction(nodes, base + I, err)
    expr_alt = GridFunction(nodes, base + I_alt, err_alt)
    return Theorem21Report(
        f1_nonnegative=bool(np.min(f1) >= 0),
        eta1_ok=bool(np.min(res1) >= -tol),
        eta2_ok=bool(np.min(res2) >= -tol),
        eta1_min_residual=float(np.min(res1)),
        eta2_min_residual=float(np.min(res2)),
        eta_start_ok=bool(y2v[0] <= e1[0] and y2v[0] <= e2[0]),
        y2_max_residual=float(np.max(np.abs(y2_res))),
        min_expression=float(np.min(expr.values)),
        min_expression_alt=float(np.min(expr_alt.values)),
        expression=expr,
        expression_alt=expr_alt,
    )
