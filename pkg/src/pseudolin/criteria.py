"""Global-existence certificates.

Two criteria are implemented:

* ``T31``: envelopes ``P <= P0, |Q| <= Q0, |R| <= R0, S <= S0, |F| <= F0,
  |G| <= G0`` for all ``(u, v)`` give a solution on the whole half-line,
  bounded by ``m_j exp(M_j (T - t0))`` on ``[t0, T]``.
* ``T32``: for a homogeneous system started at ``(c1, c2)``, positivity and
  the bound curves K, L, provided the envelopes (now with ``0 <= Q``,
  ``0 <= R`` and ``B1 <= P - S <= B2``) hold on the box
  ``(0, K + eps] x (0, L + eps]``.

The "for all (u, v)" hypotheses are only sampled.  A certificate therefore
says: hypotheses not falsified under the plan, and the conclusion verified
numerically on ``[t0, T]``.  A negative sampled margin falsifies the
hypotheses, never the theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._csv import fmt, write_csv
from .core import PseudoLinearSystem
from .envelopes import EnvelopeSet
from .errors import NotHomogeneous, OverflowGuard
from .integrator import IntegrationConfig, Status, Trajectory, integrate
from .quadrature import cumulative_array, exp_weighted_array
from .volterra import envelope_bounds

__all__ = [
    "EnvelopeSet", "SamplingPlan", "HypothesisReport", "BoundCurve", "Verdict", "Certificate",
    "check_envelope_domination", "compute_KL_curves", "certify_t31", "certify_t32",
]

CONTAINMENT_TOL = 1e-6
LOG_DECADES = 12  # T32 box samples span (bound + eps) * [1e-12, 1]
MAX_FALSIFIERS = 64
_LOG_MAX = 709.0

T31_CONDITIONS = ("P<=P0", "|Q|<=Q0", "|R|<=R0", "S<=S0", "|F|<=F0", "|G|<=G0")
T32_CONDITIONS = ("P<=P0", "S<=S0", "0<=Q", "Q<=Q0", "0<=R", "R<=R0", "B1<=B", "B<=B2")


@dataclass(frozen=True)
class SamplingPlan:
    t_nodes: int = 64
    uv_box: tuple = ((-10.0, 10.0), (-10.0, 10.0))
    uv_samples: int = 256
    rng_seed: int = 42
    retained: tuple = ()  # (t, u, v) samples always re-checked

    def __post_init__(self):
        if self.t_nodes < 1 or self.uv_samples < 1:
            raise ValueError("t_nodes and uv_samples must be >= 1")
        (u0, u1), (v0, v1) = self.uv_box
        if not (u1 > u0 and v1 > v0):
            raise ValueError("uv_box must be non-degenerate")

    def rng(self, i: int) -> np.random.Generator:
        # one stream per t-node: more samples extend, never reshuffle, a node's draws
        return np.random.default_rng(np.random.SeedSequence(self.rng_seed, spawn_key=(i,)))

    def with_retained(self, report: "HypothesisReport") -> "SamplingPlan":
        extra = tuple((s[0], s[1], s[2]) for s in report.falsifiers)
        return SamplingPlan(self.t_nodes, self.uv_box, self.uv_samples, self.rng_seed,
                            tuple(dict.fromkeys(self.retained + extra)))


@dataclass
class HypothesisReport:
    mode: str
    margins: dict           # condition -> minimum sampled margin (>= 0 holds)
    worst: dict             # condition -> (t, u, v) attaining it
    falsifiers: list        # (t, u, v, condition, margin), most negative first
    n_samples: int
    envelope_negative: dict = field(default_factory=dict)

    @property
    def falsified(self) -> bool:
        return bool(self.falsifiers) or bool(self.envelope_negative)

    @property
    def min_margin(self) -> float:
        return min(self.margins.values())


def _t31_margins(system, env, t, u, v):
    P, Q, R, S, F, G = (f.evaluate(t, u, v) for f in system.fields())
    e = {k: env.sample(k, t) for k in ("P0", "Q0", "R0", "S0", "F0", "G0")}
    return {
        "P<=P0": e["P0"] - P,
        "|Q|<=Q0": e["Q0"] - np.abs(Q),
        "|R|<=R0": e["R0"] - np.abs(R),
        "S<=S0": e["S0"] - S,
        "|F|<=F0": e["F0"] - np.abs(F),
        "|G|<=G0": e["G0"] - np.abs(G),
    }


def _t32_margins(system, env, t, u, v):
    P, Q, R, S = (f.evaluate(t, u, v) for f in system.fields()[:4])
    B = P - S
    return {
        "P<=P0": env.sample("P0", t) - P,
        "S<=S0": env.sample("S0", t) - S,
        "0<=Q": Q,
        "Q<=Q0": env.sample("Q0", t) - Q,
        "0<=R": R,
        "R<=R0": env.sample("R0", t) - R,
        "B1<=B": B - env.sample("B1", t),
        "B<=B2": env.sample("B2", t) - B,
    }


def _box_samples(plan, i, lo_hi_u, lo_hi_v, log_scale):
    r = plan.rng(i).random((plan.uv_samples, 2))
    (u0, u1), (v0, v1) = lo_hi_u, lo_hi_v
    if log_scale:
        # (0, X] sampled log-uniformly; u0/v0 are ignored
        u = u1 * 10.0 ** (-LOG_DECADES * r[:, 0])
        v = v1 * 10.0 ** (-LOG_DECADES * r[:, 1])
        tiny_u, tiny_v = u1 * 10.0**-LOG_DECADES, v1 * 10.0**-LOG_DECADES
        cu = np.array([u1, u1, tiny_u, tiny_u])
        cv = np.array([v1, tiny_v, v1, tiny_v])
    else:
        u = u0 + (u1 - u0) * r[:, 0]
        v = v0 + (v1 - v0) * r[:, 1]
        cu = np.array([u0, u0, u1, u1, 0.5 * (u0 + u1)])
        cv = np.array([v0, v1, v0, v1, 0.5 * (v0 + v1)])
    return np.concatenate([u, cu]), np.concatenate([v, cv])


def check_envelope_domination(system: PseudoLinearSystem, env: EnvelopeSet, plan: SamplingPlan | None = None,
                              mode: str = "T31", T: float | None = None, K=None, L=None,
                              eps: float = 0.1) -> HypothesisReport:
    """Sample the envelope inequalities and report per-condition minimum margins.

    ``T31`` samples ``plan.uv_box`` at ``plan.t_nodes`` equispaced times in
    ``[t0, T]``.  ``T32`` needs the bound curves K and L and samples the
    box ``(0, K(t) + eps] x (0, L(t) + eps]`` log-uniformly at ``plan.t_nodes``
    of the curve grid nodes.  A non-finite margin counts as falsifying.
    """
    plan = plan or SamplingPlan()
    mode = mode.upper()
    if mode == "T31":
        if T is None:
            raise ValueError("T31 mode needs the horizon T")
        t0 = system.t0
        times = np.linspace(t0, T, plan.t_nodes) if plan.t_nodes > 1 else np.array([t0])
        boxes = [(plan.uv_box[0], plan.uv_box[1])] * len(times)
        margin_fn, names, log_scale = _t31_margins, T31_CONDITIONS, False
    elif mode == "T32":
        if K is None or L is None:
            raise ValueError("T32 mode needs the bound curves K and L")
        if env.B1 is None or env.B2 is None:
            raise ValueError("T32 mode needs the B1 and B2 envelopes")
        if not eps > 0:
            raise ValueError("eps must be positive")
        grid = K.grid
        if T is not None:
            grid = grid[grid <= T]
        pick = np.unique(np.round(np.linspace(0, len(grid) - 1, min(plan.t_nodes, len(grid)))).astype(int))
        times = grid[pick]
        kv = np.interp(times, K.grid, K.values)
        lv = np.interp(times, L.grid, L.values)
        boxes = [((0.0, k + eps), (0.0, l + eps)) for k, l in zip(kv, lv)]
        margin_fn, names, log_scale = _t32_margins, T32_CONDITIONS, True
    else:
        raise ValueError(f"mode must be T31 or T32, got {mode!r}")

    ts, us, vs = [], [], []
    for i, (t, (bu, bv)) in enumerate(zip(times, boxes)):
        if not (math.isfinite(bu[1]) and math.isfinite(bv[1])):
            # an infinite box cannot be sampled; probe a large finite one instead
            bu = (bu[0], min(bu[1], 1e12))
            bv = (bv[0], min(bv[1], 1e12))
        u, v = _box_samples(plan, i, bu, bv, log_scale)
        ts.append(np.full(len(u), t))
        us.append(u)
        vs.append(v)
    for t, u, v in plan.retained:
        ts.append(np.array([t], dtype=float))
        us.append(np.array([u], dtype=float))
        vs.append(np.array([v], dtype=float))
    t = np.concatenate(ts)
    u = np.concatenate(us)
    v = np.concatenate(vs)

    with np.errstate(all="ignore"):
        raw = margin_fn(system, env, t, u, v)
    margins, worst, bad = {}, {}, []
    for name in names:
        m = np.asarray(raw[name], dtype=float)
        m = np.where(np.isfinite(m), m, -np.inf)
        j = int(np.argmin(m))
        margins[name] = float(m[j])
        worst[name] = (float(t[j]), float(u[j]), float(v[j]))
        for k in np.flatnonzero(m < 0):
            bad.append((float(t[k]), float(u[k]), float(v[k]), name, float(m[k])))
    bad.sort(key=lambda s: (s[4], s[0], s[1], s[2], s[3]))
    neg = env.negative_parts(times)
    if mode == "T32":
        neg = {k: val for k, val in neg.items() if k in ("Q0", "R0")}
    return HypothesisReport(mode, margins, worst, bad[:MAX_FALSIFIERS], len(t), neg)


@dataclass
class BoundCurve:
    grid: np.ndarray
    values: np.ndarray      # +inf past an overflow point
    log_values: np.ndarray
    quad_error: np.ndarray  # absolute error estimate on the exponent

    def at(self, t) -> np.ndarray:
        return np.interp(t, self.grid, self.values)

    def to_csv(self, path) -> None:
        write_csv(path, ("t", "value", "error"), (self.grid, self.values, self.quad_error))


def _bracket(nodes, ratio_c, cross_env, sign, Bc):
    """``ratio * exp(sign * Bc(tau)) + int exp(sign * (Bc(tau) - Bc(zeta))) cross(zeta) dzeta``.

    Returns (values, error, n_valid): past index n_valid the bracket overflowed.
    """
    E = sign * Bc
    n = len(nodes)

    def attempt(m):
        with np.errstate(over="raise"):
            y, err = exp_weighted_array(nodes[:m], cross_env[:m], E[:m])
            head = ratio_c * np.exp(E[:m])
        return head + y, err

    try:
        vals, err = attempt(n)
        return vals, err, n
    except (OverflowGuard, FloatingPointError):
        pass
    lo, hi = 1, n  # attempt(lo) works, attempt(hi) does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        try:
            attempt(mid)
            lo = mid
        except (OverflowGuard, FloatingPointError):
            hi = mid
    vals, err = attempt(lo)
    return vals, err, lo


def _curve(nodes, c_main, own_env, front_env, ratio, cross_env, sign, Bc):
    n = len(nodes)
    bracket, b_err, ok = _bracket(nodes, ratio, cross_env, sign, Bc)
    log_v = np.full(n, math.inf)
    qerr = np.full(n, math.inf)
    own_c, own_err = cumulative_array(nodes, own_env)
    if ok >= 2:
        integrand = front_env[:ok] * bracket
        fc, f_err = cumulative_array(nodes[:ok], integrand)
        f_err = f_err + cumulative_array(nodes[:ok], np.abs(front_env[:ok]) * b_err)[0]
        log_v[:ok] = math.log(c_main) + own_c[:ok] + fc
        qerr[:ok] = own_err[:ok] + f_err
    else:
        log_v[0], qerr[0] = math.log(c_main), 0.0
    log_v = np.where(np.isfinite(log_v), log_v, math.inf)
    with np.errstate(over="ignore"):
        values = np.where(log_v <= _LOG_MAX, np.exp(np.minimum(log_v, _LOG_MAX)), math.inf)
    return BoundCurve(nodes, values, log_v, qerr)


def compute_KL_curves(env: EnvelopeSet, c1: float, c2: float, grid) -> tuple[BoundCurve, BoundCurve]:
    """Bound curves K and L on ``grid`` (``grid[0]`` is t0).

    Both are computed as logarithms, so only the final exponential can
    overflow; past the first point where anything overflows the curve
    holds ``+inf``.  Missing B1/B2 are taken as 0.
    """
    if not (c1 > 0 and c2 > 0):
        raise ValueError("c1 and c2 must be positive")
    nodes = np.asarray(grid, dtype=float)
    if nodes.ndim != 1 or len(nodes) < 2 or np.any(np.diff(nodes) <= 0):
        raise ValueError("grid must be strictly increasing with at least two nodes")
    s = env.sample_all(nodes)
    zero = np.zeros_like(nodes)
    B1c, _ = cumulative_array(nodes, s.get("B1", zero))
    B2c, _ = cumulative_array(nodes, s.get("B2", zero))
    for name in ("P0", "Q0", "R0", "S0", "B1", "B2"):
        if name in s and not np.all(np.isfinite(s[name])):
            raise ValueError(f"envelope {name} is not finite on the grid")
    K = _curve(nodes, c1, s["P0"], s["Q0"], c2 / c1, s["R0"], -1.0, B1c)
    L = _curve(nodes, c2, s["S0"], s["R0"], c1 / c2, s["Q0"], 1.0, B2c)
    return K, L


class Verdict(str, Enum):
    CERTIFIED = "Certified"
    HYPOTHESIS_FALSIFIED = "HypothesisFalsified"
    BOUND_VIOLATED = "BoundViolated"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass
class Certificate:
    theorem: str
    horizon: float
    hypothesis_report: HypothesisReport
    bound_report: dict
    trajectory: Trajectory
    verdict: Verdict
    detail: dict = field(default_factory=dict)
    K: BoundCurve | None = None
    L: BoundCurve | None = None

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    def to_kv(self) -> str:
        """Flat ``key=value`` lines in a fixed order."""
        lines = [
            ("theorem", self.theorem),
            ("verdict", str(self.verdict)),
            ("horizon", fmt(self.horizon)),
            ("t0", fmt(self.trajectory.t0)),
            ("trajectory.status", str(self.trajectory.status)),
            ("trajectory.t_last", fmt(self.trajectory.t_last)),
            ("trajectory.nodes", str(len(self.trajectory.nodes))),
        ]
        if self.trajectory.t_blow is not None:
            lines.append(("trajectory.t_blow", fmt(self.trajectory.t_blow)))
        for k in sorted(self.detail):
            lines.append((f"detail.{k}", _kv_value(self.detail[k])))
        hr = self.hypothesis_report
        lines.append(("hypothesis.mode", hr.mode))
        lines.append(("hypothesis.samples", str(hr.n_samples)))
        lines.append(("hypothesis.falsified", str(hr.falsified).lower()))
        for name, m in hr.margins.items():
            key = kv_condition(name)
            lines.append((f"hypothesis.margin.{key}", fmt(m)))
            t, u, v = hr.worst[name]
            lines.append((f"hypothesis.worst.{key}", f"{fmt(t)},{fmt(u)},{fmt(v)}"))
        for name, m in sorted(hr.envelope_negative.items()):
            lines.append((f"hypothesis.envelope_negative.{name}", fmt(m)))
        if hr.falsifiers:
            t, u, v, name, m = hr.falsifiers[0]
            lines.append(("hypothesis.falsifier", f"{kv_condition(name)}@{fmt(t)},{fmt(u)},{fmt(v)}:{fmt(m)}"))
        for k in self.bound_report:
            lines.append((f"bound.{k}", _kv_value(self.bound_report[k])))
        return "".join(f"{k}={v}\n" for k, v in lines)

    def to_text(self) -> str:
        hr = self.hypothesis_report
        out = [
            f"Certificate ({self.theorem})",
            f"  verdict:   {self.verdict}",
            f"  interval:  [{fmt(self.trajectory.t0)}, {fmt(self.horizon)}]",
            f"  trajectory: {self.trajectory.status}, {len(self.trajectory.nodes)} nodes,"
            f" last t = {fmt(self.trajectory.t_last)}",
        ]
        for k in sorted(self.detail):
            out.append(f"  {k}: {_kv_value(self.detail[k])}")
        out.append(f"Hypotheses ({hr.n_samples} samples, sampled only):")
        for name, m in hr.margins.items():
            t, u, v = hr.worst[name]
            flag = "ok" if m >= 0 else "FALSIFIED"
            out.append(f"  {name:<9} min margin {fmt(m)} at t={fmt(t)} u={fmt(u)} v={fmt(v)}  {flag}")
        for name, m in sorted(hr.envelope_negative.items()):
            out.append(f"  envelope {name} negative (min {fmt(m)})")
        out.append("Bounds:")
        for k, v in self.bound_report.items():
            out.append(f"  {k}: {_kv_value(v)}")
        return "\n".join(out) + "\n"


def kv_condition(name: str) -> str:
    """Condition name without ``=`` or ``|``: ``|Q|<=Q0`` -> ``absQ_le_Q0``, ``0<=Q`` -> ``Q_ge_0``."""
    lhs, rhs = name.split("<=")
    if lhs == "0":
        return f"{rhs}_ge_0"
    if lhs.startswith("|"):
        lhs = "abs" + lhs.strip("|")
    return f"{lhs}_le_{rhs}"


def _kv_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    if isinstance(v, (tuple, list)):
        return ",".join(_kv_value(x) for x in v)
    return str(v)


def _integration_verdict(traj: Trajectory):
    if traj.status is Status.TOLERANCE_FAILURE:
        return Verdict.INCONCLUSIVE, {"reason": f"integration stopped: {traj.message}"}
    if traj.status is Status.BLEW_UP:
        return Verdict.BOUND_VIOLATED, {"reason": "blow-up", "t": traj.t_blow}
    return None, {}


def certify_t31(system: PseudoLinearSystem, env: EnvelopeSet, phi0: float, psi0: float, T: float,
                plan: SamplingPlan | None = None, cfg: IntegrationConfig | None = None) -> Certificate:
    t0 = system.t0
    if not (math.isfinite(T) and T > t0):
        raise ValueError("need a finite horizon T > t0")
    report = check_envelope_domination(system, env, plan, "T31", T=T)
    bounds = envelope_bounds(env, phi0, psi0, T, t0=t0)
    traj = integrate(system, phi0, psi0, (t0, T), cfg)
    sup_phi, sup_psi = traj.max_norm()
    bound_report = {**bounds.as_dict(), "sup_phi": sup_phi, "sup_psi": sup_psi}

    if report.falsified:
        verdict, detail = Verdict.HYPOTHESIS_FALSIFIED, _falsifier_detail(report)
    else:
        verdict, detail = _integration_verdict(traj)
        if verdict is None:
            verdict = Verdict.CERTIFIED
            for which, sup, b in (("phi", sup_phi, bounds.bound1), ("psi", sup_psi, bounds.bound2)):
                if sup > b * (1 + CONTAINMENT_TOL):
                    vals = np.abs(traj.phi if which == "phi" else traj.psi)
                    k = int(np.argmax(vals > b * (1 + CONTAINMENT_TOL)))
                    verdict, detail = Verdict.BOUND_VIOLATED, {"reason": f"|{which}| above bound",
                                                              "t": float(traj.nodes[k])}
                    break
    return Certificate("T31", float(T), report, bound_report, traj, verdict, detail)


def _falsifier_detail(report: HypothesisReport) -> dict:
    if report.falsifiers:
        t, u, v, name, m = report.falsifiers[0]
        return {"reason": f"{kv_condition(name)} fails", "sample": (t, u, v), "margin": m}
    name, m = sorted(report.envelope_negative.items())[0]
    return {"reason": f"envelope {name} negative", "margin": m}


def certify_t32(system: PseudoLinearSystem, env: EnvelopeSet, c1: float, c2: float, eps: float = 0.1,
                T: float | None = None, plan: SamplingPlan | None = None,
                cfg: IntegrationConfig | None = None) -> Certificate:
    if not system.homogeneous:
        raise NotHomogeneous("the positive-solution criterion needs F = G = 0")
    if T is None:
        raise ValueError("need a horizon T")
    t0 = system.t0
    if not (math.isfinite(T) and T > t0):
        raise ValueError("need a finite horizon T > t0")
    if not (c1 > 0 and c2 > 0 and eps > 0):
        raise ValueError("c1, c2 and eps must be positive")
    traj = integrate(system, c1, c2, (t0, T), cfg)
    grid = np.union1d(np.linspace(t0, T, 513), traj.nodes)
    K, L = compute_KL_curves(env, c1, c2, grid)
    report = check_envelope_domination(system, env, plan, "T32", T=T, K=K, L=L, eps=eps)

    idx = np.searchsorted(grid, traj.nodes)
    Kn, Ln = K.values[idx], L.values[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        r_phi = traj.phi / Kn
        r_psi = traj.psi / Ln
    bound_report = {
        "max_phi_over_K": float(np.max(r_phi)),
        "max_psi_over_L": float(np.max(r_psi)),
        "min_phi": float(np.min(traj.phi)),
        "min_psi": float(np.min(traj.psi)),
        "K_T": float(K.values[-1]),
        "L_T": float(L.values[-1]),
    }

    if report.falsified:
        verdict, detail = Verdict.HYPOTHESIS_FALSIFIED, _falsifier_detail(report)
    else:
        verdict, detail = _integration_verdict(traj)
        if verdict is None:
            verdict = Verdict.CERTIFIED
            cap = 1 + CONTAINMENT_TOL
            checks = (
                ("phi <= 0", traj.phi <= 0), ("psi <= 0", traj.psi <= 0),
                ("phi > K", traj.phi > Kn * cap), ("psi > L", traj.psi > Ln * cap),
            )
            first = None
            for which, bad in checks:
                if np.any(bad):
                    k = int(np.argmax(bad))
                    if first is None or k < first[1]:
                        first = (which, k)
            if first is not None:
                verdict = Verdict.BOUND_VIOLATED
                detail = {"reason": first[0], "t": float(traj.nodes[first[1]])}
    detail = {**detail, "c1": float(c1), "c2": float(c2), "eps": float(eps)}
    return Certificate("T32", float(T), report, bound_report, traj, verdict, detail, K, L)
