"""Volterra representations of a solution and the exponential a-priori bound.

Along a trajectory the solution satisfies

    phi(t) = v1(t) + int_{t0}^{t} K1(t, z) phi(z) dz
    psi(t) = v2(t) + int_{t0}^{t} K2(t, z) psi(z) dz

with, writing ``Pc = int P`` and ``Sc = int S`` from t0,

    K1(t, z) = R(z) int_z^t exp(Pc(t) - Pc(tau) + Sc(tau) - Sc(z)) Q(tau) dtau

and K2 the same with (P, Q) and (S, R) exchanged.  ``v1`` is computed as
the solution of ``x' = P x + Q w + F, x(t0) = phi0`` where
``w' = S w + G, w(t0) = psi0``; that is the substitution of the psi
formula into the phi formula with the R-term removed.

Two literal alternatives are available through ``variant``:

* ``"printed"``: ``v1 = phi0 e^Pc + int e^{Pc(t)-Pc(tau)} [psi0 e^{Sc(tau)} + F + Q int_{t0}^{tau} G]``,
  i.e. without the factor Q on the psi0 term and without the exponential
  weight on the G integral;
* ``"printed-t"``: as ``"printed"`` but the inner G integral runs to t.

Both differ from the exact identity whenever Q != 1 or G != 0, which the
residual check makes visible.  Neumann series for the envelope equations
are not summed; only the closed majorant ``m exp(M (T - t0))`` is formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PseudoLinearSystem, eval_coefficients
from .envelopes import EnvelopeSet
from .errors import OverflowGuard
from .integrator import Trajectory
from .quadrature import EXP_SPAN_LIMIT, GridFunction, _interval_weights, cumulative_array, exp_weighted_array, stencil

MAX_STORED_KERNEL = 4096
VARIANTS = ("derived", "printed", "printed-t")


def _exp_checked(x):
    x = np.asarray(x, dtype=float)
    if np.any(x > EXP_SPAN_LIMIT):
        raise OverflowGuard("cumulative exponent exceeds 700")
    return np.exp(x)


def _v_pair(nodes, Pc, Sc, Q, R, F, G, phi0, psi0, variant):
    eP, eS = _exp_checked(Pc), _exp_checked(Sc)
    if variant == "derived":
        w_psi, e1 = exp_weighted_array(nodes, G, Sc)
        w_psi = psi0 * eS + w_psi
        w_phi, e2 = exp_weighted_array(nodes, F, Pc)
        w_phi = phi0 * eP + w_phi
        v1, ev1 = exp_weighted_array(nodes, Q * w_psi + F, Pc)
        v2, ev2 = exp_weighted_array(nodes, R * w_phi + G, Sc)
        return phi0 * eP + v1, psi0 * eS + v2, ev1, ev2
    Gc, _ = cumulative_array(nodes, G)
    Fc, _ = cumulative_array(nodes, F)
    if variant == "printed":
        v1, ev1 = exp_weighted_array(nodes, psi0 * eS + F + Q * Gc, Pc)
        v2, ev2 = exp_weighted_array(nodes, phi0 * eP + G + R * Fc, Sc)
    elif variant == "printed-t":
        a1, ev1 = exp_weighted_array(nodes, psi0 * eS + F, Pc)
        b1, _ = exp_weighted_array(nodes, Q, Pc)
        a2, ev2 = exp_weighted_array(nodes, phi0 * eP + G, Sc)
        b2, _ = exp_weighted_array(nodes, R, Sc)
        v1, v2 = a1 + Gc * b1, a2 + Fc * b2
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return phi0 * eP + v1, psi0 * eS + v2, ev1, ev2


def kernel_rows(nodes, outer_c, inner_c, mult, front):
    """Yield ``(i, row)`` with ``row[k] = front[k] * X_k(t_i)`` for ``k <= i``.

    ``X_k(t) = int_{t_k}^{t} exp(outer_c(t) - outer_c(tau) + inner_c(tau) - inner_c(t_k)) mult(tau) dtau``
    is advanced from row i to i+1 by one multiplication and one local
    integral, so every row costs O(N).
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    X = np.zeros(n)
    yield 0, front[:1] * X[:1]
    if n == 1:
        return
    idx, w = stencil(nodes, 4)
    shift = outer_c[1:, None] - outer_c[idx] + inner_c[idx] - inner_c[:-1, None]
    if np.any(np.abs(shift) > EXP_SPAN_LIMIT):
        raise OverflowGuard("kernel exponent spans more than 700 within one stencil window")
    local = (w * np.exp(shift) * mult[idx]).sum(axis=1)
    d_outer = np.diff(outer_c)
    if np.any(d_outer > EXP_SPAN_LIMIT):
        raise OverflowGuard("kernel exponent jumps by more than 700 on one interval")
    growth = np.exp(d_outer)
    for i in range(n - 1):
        spread = inner_c[i] - inner_c[: i + 1]
        if spread.size and spread.max() > EXP_SPAN_LIMIT:
            raise OverflowGuard("kernel inner exponent spans more than 700")
        X[: i + 1] = growth[i] * X[: i + 1] + local[i] * np.exp(spread)
        X[i + 1] = 0.0
        yield i + 1, front[: i + 2] * X[: i + 2]


class _PrefixIntegral:
    """Integral of g over nodes[:m] for every prefix length m, fourth order."""

    def __init__(self, nodes):
        self.nodes = nodes
        n = len(nodes)
        self.n = n
        self.idx, self.w = stencil(nodes, 4) if n >= 2 else (None, None)
        if n >= 4:
            m = np.arange(4, n + 1)
            end_idx = (m - 4)[:, None] + np.arange(4)[None, :]
            left = nodes[m - 2]
            h = nodes[m - 1] - left
            self.end_idx = end_idx
            self.end_w = _interval_weights(nodes[end_idx] - left[:, None], h)

    def __call__(self, m, g):
        if m <= 1:
            return 0.0
        x = self.nodes
        if m == 2:
            return 0.5 * (x[1] - x[0]) * (g[0] + g[1])
        if m == 3:
            idx, w = stencil(x[:3], 3)
            return float((w * g[idx]).sum())
        body = (self.w[: m - 2] * g[self.idx[: m - 2]]).sum()
        j = m - 4
        return float(body + (self.end_w[j] * g[self.end_idx[j]]).sum())


@dataclass
class VolterraData:
    nodes: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    v1: GridFunction
    v2: GridFunction
    K1: np.ndarray | None
    K2: np.ndarray | None
    variant: str = "derived"
    _ingredients: dict = field(default_factory=dict, repr=False)

    def kernel1_rows(self):
        d = self._ingredients
        return kernel_rows(self.nodes, d["Pc"], d["Sc"], d["Q"], d["R"])

    def kernel2_rows(self):
        d = self._ingredients
        return kernel_rows(self.nodes, d["Sc"], d["Pc"], d["R"], d["Q"])


def _kernel_table(rows, n):
    K = np.zeros((n, n))
    for i, row in rows:
        K[i, : i + 1] = row
    return K


def _volterra_from_samples(nodes, P, Q, R, S, F, G, phi0, psi0, variant, store_kernels):
    Pc, _ = cumulative_array(nodes, P)
    Sc, _ = cumulative_array(nodes, S)
    v1, v2, e1, e2 = _v_pair(nodes, Pc, Sc, Q, R, F, G, phi0, psi0, variant)
    ingredients = {"Pc": Pc, "Sc": Sc, "Q": Q, "R": R}
    n = len(nodes)
    if store_kernels is None:
        store_kernels = n <= MAX_STORED_KERNEL
    K1 = K2 = None
    if store_kernels:
        K1 = _kernel_table(kernel_rows(nodes, Pc, Sc, Q, R), n)
        K2 = _kernel_table(kernel_rows(nodes, Sc, Pc, R, Q), n)
    return GridFunction(nodes, v1, e1), GridFunction(nodes, v2, e2), K1, K2, ingredients


def compute_volterra_data(traj: Trajectory, system: PseudoLinearSystem, variant: str = "derived",
                          grid=None, store_kernels: bool | None = None) -> VolterraData:
    """v1, v2, K1, K2 along ``traj`` on its shared grid.

    Kernel tables are materialised only up to 4096 nodes; beyond that the
    residual check streams the rows.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    nodes = traj.grid() if grid is None else np.asarray(grid, dtype=float)
    phi, psi = traj.dense_eval(nodes)
    c = eval_coefficients(system, nodes, phi, psi)
    v1, v2, K1, K2, ing = _volterra_from_samples(
        nodes, c.p, c.q, c.r, c.s, c.f, c.g, float(phi[0]), float(psi[0]), variant, store_kernels)
    return VolterraData(nodes, phi, psi, v1, v2, K1, K2, variant, ing)


def volterra_residual(traj: Trajectory, data: VolterraData) -> tuple[float, float]:
    """Max over nodes of ``|phi - v1 - int K1 phi|`` and the psi analogue."""
    phi, psi = traj.dense_eval(data.nodes)
    integ = _PrefixIntegral(data.nodes)
    rows1 = ((i, data.K1[i, : i + 1]) for i in range(len(data.nodes))) if data.K1 is not None else data.kernel1_rows()
    rows2 = ((i, data.K2[i, : i + 1]) for i in range(len(data.nodes))) if data.K2 is not None else data.kernel2_rows()
    r1 = r2 = 0.0
    for (i, k1), (_, k2) in zip(rows1, rows2):
        g1 = np.zeros(i + 1) if i == 0 else k1 * phi[: i + 1]
        g2 = np.zeros(i + 1) if i == 0 else k2 * psi[: i + 1]
        r1 = max(r1, abs(phi[i] - data.v1.values[i] - integ(i + 1, g1)))
        r2 = max(r2, abs(psi[i] - data.v2.values[i] - integ(i + 1, g2)))
    return r1, r2


def envelope_volterra_data(env: EnvelopeSet, phi0: float, psi0: float, nodes,
                           store_kernels: bool | None = None) -> VolterraData:
    """The dominating functions v1, v2, K1, K2 built from the envelopes."""
    nodes = np.asarray(nodes, dtype=float)
    s = env.sample_all(nodes)
    v1, v2, K1, K2, ing = _volterra_from_samples(
        nodes, s["P0"], s["Q0"], s["R0"], s["S0"], s["F0"], s["G0"],
        abs(phi0), abs(psi0), "derived", store_kernels)
    return VolterraData(nodes, np.full_like(nodes, np.nan), np.full_like(nodes, np.nan), v1, v2, K1, K2, "envelope", ing)


@dataclass(frozen=True)
class VolterraBound:
    m1: float
    m2: float
    M1: float
    M2: float
    bound1: float
    bound2: float
    log_bound1: float
    log_bound2: float
    t0: float
    T: float
    overflow: bool = False

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("m1", "m2", "M1", "M2", "bound1", "bound2",
                                               "log_bound1", "log_bound2", "t0", "T", "overflow")}


def _log_bound(m, M, span):
    if m == 0:
        return -math.inf
    return math.log(m) + M * span


def envelope_bounds(env: EnvelopeSet, phi0: float, psi0: float, T: float, t0: float = 0.0,
                    n_grid: int = 1025) -> VolterraBound:
    """``m_j = sup |v_j|``, ``M_j = sup |K_j|`` of the envelope equations and
    the a-priori bounds ``m_j exp(M_j (T - t0))`` on ``|phi|``, ``|psi|``.

    Envelopes too large to represent give infinite bounds with ``overflow``
    set instead of raising.
    """
    if not (math.isfinite(T) and T > t0):
        raise ValueError("need finite T > t0")
    nodes = np.linspace(t0, T, n_grid)
    span = T - t0
    try:
        data = envelope_volterra_data(env, phi0, psi0, nodes, store_kernels=False)
        m1 = float(np.max(np.abs(data.v1.values)))
        m2 = float(np.max(np.abs(data.v2.values)))
        M1 = max(float(np.max(np.abs(row))) for _, row in data.kernel1_rows())
        M2 = max(float(np.max(np.abs(row))) for _, row in data.kernel2_rows())
    except OverflowGuard:
        inf = math.inf
        return VolterraBound(inf, inf, inf, inf, inf, inf, inf, inf, t0, T, True)
    lb1, lb2 = _log_bound(m1, M1, span), _log_bound(m2, M2, span)
    overflow = lb1 > 709 or lb2 > 709
    b1 = m1 if M1 == 0 else (math.exp(lb1) if lb1 <= 709 else math.inf)
    b2 = m2 if M2 == 0 else (math.exp(lb2) if lb2 <= 709 else math.inf)
    return VolterraBound(m1, m2, M1, M2, b1, b2, lb1, lb2, t0, T, overflow)
