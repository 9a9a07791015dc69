"""Adaptive Dormand-Prince 5(4) integration with dense output and blow-up detection.

The stepper is written out here rather than borrowed because the stopping
logic is part of the contract: a run ends as ``Completed``, ``BlewUp`` (norm
above ``blowup_norm``, or step collapse while the norm keeps growing) or
``ToleranceFailure`` (step collapse without growth, i.e. stiffness).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._csv import write_csv
from .core import PseudoLinearSystem
from .errors import OutOfRange
from .quadrature import enrich_grid

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Hairer's continuous extension (dopri5 contd5)
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])

GROWTH_WINDOW = 10


class Status(str, Enum):
    COMPLETED = "Completed"
    BLEW_UP = "BlewUp"
    TOLERANCE_FAILURE = "ToleranceFailure"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class IntegrationConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    h_min: float | None = None  # None: 1e-12 * (T - t0)
    blowup_norm: float = 1e8
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not self.blowup_norm > 1:
            raise ValueError("blowup_norm must exceed 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.h_min is not None and self.h_min <= 0:
            raise ValueError("h_min must be positive")

    def halved(self) -> "IntegrationConfig":
        return IntegrationConfig(self.rtol / 2, self.atol / 2, self.h_min, self.blowup_norm, self.max_steps)


@dataclass
class RawSolution:
    ts: np.ndarray
    ys: np.ndarray        # (n, d)
    rcont: np.ndarray     # (n-1, 5, d)
    status: Status
    t_blow: float | None = None
    message: str = ""


def _initial_step(fun, t0, y0, f0, rtol, atol, span):
    sk = atol + rtol * np.abs(y0)
    d0 = math.sqrt(np.mean((y0 / sk) ** 2))
    d1 = math.sqrt(np.mean((f0 / sk) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    if not np.all(np.isfinite(f1)):
        return h0 * 1e-3
    d2 = math.sqrt(np.mean(((f1 - f0) / sk) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def solve_dopri(fun, t0: float, T: float, y0, cfg: IntegrationConfig, tstops=None) -> RawSolution:
    """Integrate ``y' = fun(t, y)`` on ``[t0, T]``.

    ``tstops`` are times every step must land on (used to follow the nodes of
    another trajectory).  Returns the accepted nodes together with the dense
    output coefficients of every step.
    """
    if not T > t0:
        raise ValueError("need t0 < T")
    y = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError("initial values must be finite")
    h_min = cfg.h_min if cfg.h_min is not None else 1e-12 * (T - t0)
    stops = np.array([] if tstops is None else tstops, dtype=float)
    stops = np.unique(stops[(stops > t0) & (stops < T)])
    stop_i = 0

    t = float(t0)
    f = np.asarray(fun(t, y), dtype=float)
    ts, ys, rc = [t], [y.copy()], []
    norms = [float(np.max(np.abs(y)))]
    if not np.all(np.isfinite(f)):
        return RawSolution(np.array(ts), np.array(ys), np.zeros((0, 5, len(y))),
                           Status.TOLERANCE_FAILURE, message="right-hand side not finite at t0")
    h = _initial_step(fun, t, y, f, cfg.rtol, cfg.atol, T - t0)
    status, t_blow, message = Status.COMPLETED, None, ""
    k = np.empty((7, len(y)))
    n_steps = 0
    last_rejected = False

    while t < T:
        if n_steps >= cfg.max_steps:
            status, message = Status.TOLERANCE_FAILURE, "max_steps exceeded"
            break
        if h < h_min:
            status, t_blow, message = _classify_collapse(norms, t, y, f)
            break
        while stop_i < len(stops) and stops[stop_i] <= t:
            stop_i += 1
        target = stops[stop_i] if stop_i < len(stops) else T
        landing = h >= target - t
        hs = target - t if landing else h

        k[0] = f
        ok = True
        for s in range(1, 7):
            ys_ = y + hs * (np.dot(_A[s], k[:s]) if s else 0.0)
            k[s] = fun(t + _C[s] * hs, ys_)
            if not np.all(np.isfinite(k[s])):
                ok = False
                break
        n_steps += 1
        if not ok:
            h = hs * 0.2
            last_rejected = True
            continue
        y_new = y + hs * np.dot(_B[:6], k[:6])
        err_vec = hs * np.dot(_E, k)
        sk = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(np.mean((err_vec / sk) ** 2))
        if not math.isfinite(err):
            h = hs * 0.2
            last_rejected = True
            continue
        if err <= 1.0:
            t_new = target if landing else t + hs
            ydiff = y_new - y
            bspl = hs * k[0] - ydiff
            rc.append(np.stack([y, ydiff, bspl, ydiff - hs * k[6] - bspl, hs * np.dot(_D, k)]))
            t, y, f = t_new, y_new, k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            norms.append(float(np.max(np.abs(y))))
            if norms[-1] > cfg.blowup_norm:
                status, t_blow = Status.BLEW_UP, t + _escape_estimate(y, f)
                message = f"norm exceeded {cfg.blowup_norm:g}"
                break
            fac = 10.0 if err == 0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            if last_rejected:
                fac = min(fac, 1.0)
            # keep the controller's own step, not the one shortened to hit a stop
            h = max(h, hs * fac) if (landing and hs < h) else hs * fac
            last_rejected = False
        else:
            h = hs * max(0.2, 0.9 * err ** -0.2)
            last_rejected = True

    d = len(y)
    rcont = np.array(rc) if rc else np.zeros((0, 5, d))
    return RawSolution(np.array(ts), np.array(ys), rcont, status, t_blow, message)


def _escape_estimate(y, f) -> float:
    i = int(np.argmax(np.abs(y)))
    growth = math.copysign(1.0, y[i]) * f[i]
    return abs(y[i]) / growth if growth > 0 else 0.0


def _classify_collapse(norms, t, y, f):
    recent = np.array(norms[-(GROWTH_WINDOW + 1):])
    if len(recent) >= 2 and np.all(np.diff(recent) > 0):
        return Status.BLEW_UP, t + _escape_estimate(y, f), "step size collapsed while the norm grew"
    return Status.TOLERANCE_FAILURE, None, "step size collapsed without norm growth"


def _dense(nodes, values, rcont, t):
    t = np.asarray(t, dtype=float)
    n = len(nodes)
    if n == 1:
        return np.broadcast_to(values[0], t.shape + values.shape[1:]).copy()
    i = np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, n - 2)
    h = nodes[i + 1] - nodes[i]
    th = ((t - nodes[i]) / h)[..., None]
    th1 = 1.0 - th
    r = rcont[i]
    out = r[..., 0, :] + th * (r[..., 1, :] + th1 * (r[..., 2, :] + th * (r[..., 3, :] + th1 * r[..., 4, :])))
    # collocate stored nodes exactly
    at_left = t == nodes[i]
    at_right = t == nodes[i + 1]
    out = np.where(at_left[..., None], values[i], out)
    out = np.where(at_right[..., None], values[i + 1], out)
    return out


@dataclass
class Trajectory:
    t0: float
    t_end: float
    nodes: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    rcont: np.ndarray = field(repr=False)
    status: Status = Status.COMPLETED
    t_blow: float | None = None
    message: str = ""

    @property
    def t_last(self) -> float:
        return float(self.nodes[-1])

    @property
    def completed(self) -> bool:
        return self.status is Status.COMPLETED

    def dense_eval(self, t):
        return dense_eval(self, t)

    def max_norm(self) -> tuple[float, float]:
        return float(np.max(np.abs(self.phi))), float(np.max(np.abs(self.psi)))

    def grid(self, max_spacing: float | None = None) -> np.ndarray:
        """Accepted nodes enriched to spacing at most ``(t_end - t0) / 512``."""
        if max_spacing is None:
            max_spacing = (self.t_end - self.t0) / 512
        return enrich_grid(self.nodes, max_spacing)

    def to_csv(self, path: str | os.PathLike) -> None:
        write_csv(path, ("t", "phi", "psi"), (self.nodes, self.phi, self.psi))


def integrate(system: PseudoLinearSystem, phi0: float, psi0: float, t_span, cfg: IntegrationConfig | None = None) -> Trajectory:
    """Integrate ``system`` from ``(phi0, psi0)`` over ``t_span = (t0, T)``."""
    cfg = cfg or IntegrationConfig()
    t0, T = float(t_span[0]), float(t_span[1])
    if t0 < system.t0:
        raise ValueError(f"integration must start at or after t0={system.t0}")
    raw = solve_dopri(system.rhs, t0, T, (phi0, psi0), cfg)
    return Trajectory(t0, T, raw.ts, raw.ys[:, 0].copy(), raw.ys[:, 1].copy(), raw.rcont,
                      raw.status, raw.t_blow, raw.message)


def dense_eval(traj: Trajectory, t):
    """``(phi(t), psi(t))`` from the continuous extension; exact at nodes."""
    t_arr = np.asarray(t, dtype=float)
    lo, hi = traj.nodes[0], traj.nodes[-1]
    if np.any(t_arr < lo) or np.any(t_arr > hi) or np.any(np.isnan(t_arr)):
        bad = t_arr[(t_arr < lo) | (t_arr > hi) | np.isnan(t_arr)] if t_arr.ndim else t_arr
        raise OutOfRange(float(np.ravel(bad)[0]), float(lo), float(hi))
    vals = np.stack([traj.phi, traj.psi], axis=1)
    out = _dense(traj.nodes, vals, traj.rcont, t_arr)
    if t_arr.ndim == 0:
        return float(out[0]), float(out[1])
    return out[..., 0], out[..., 1]
