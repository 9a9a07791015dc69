"""Cumulative and exponentially weighted integrals over non-uniform grids.

Every interval ``[t_i, t_{i+1}]`` is integrated by the cubic through four
neighbouring nodes (a quadratic or the trapezoid when the grid is shorter),
which gives fourth-order convergence on smooth integrands.  The error
estimate is the difference against the three-point rule on the same
interval, accumulated along the grid.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._csv import write_csv
from .errors import GridTooCoarse, OverflowGuard

# exp() overflows just above 709
EXP_SPAN_LIMIT = 700.0


@dataclass
class GridFunction:
    nodes: np.ndarray
    values: np.ndarray
    error_est: np.ndarray = field(default=None)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.error_est is None:
            self.error_est = np.zeros_like(self.values)
        else:
            self.error_est = np.asarray(self.error_est, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise ValueError("nodes and values must be 1-d arrays of equal length")
        if self.error_est.shape != self.values.shape:
            raise ValueError("error_est must match values")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")
        if np.any(self.error_est < 0):
            raise ValueError("error estimates must be non-negative")

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def sample(cls, fn, nodes) -> "GridFunction":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.broadcast_to(np.asarray(fn(nodes), dtype=float), nodes.shape).copy())

    def to_csv(self, path: str | os.PathLike) -> None:
        write_csv(path, ("t", "value", "error"), (self.nodes, self.values, self.error_est))


def _interval_weights(offsets: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Weights of the interpolatory rule over ``[0, h]`` for the given node offsets.

    ``offsets`` has shape (m, k): positions of the k stencil nodes relative to
    the left end of each of m intervals.
    """
    x = offsets / h[:, None]
    m, k = x.shape
    w = np.empty((m, k))
    for j in range(k):
        # coefficients (low degree first) of prod_{l != j} (s - x_l)
        coef = np.zeros((m, k))
        coef[:, 0] = 1.0
        denom = np.ones(m)
        deg = 0
        for l in range(k):
            if l == j:
                continue
            nxt = np.zeros_like(coef)
            nxt[:, 1:] = coef[:, :-1]
            nxt -= x[:, l : l + 1] * coef
            coef = nxt
            deg += 1
            denom *= x[:, j] - x[:, l]
        integ = sum(coef[:, d] / (d + 1) for d in range(deg + 1))
        w[:, j] = integ / denom
    return w * h[:, None]


def stencil(nodes, order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Per-interval stencil indices and weights.

    Returns ``(idx, w)`` with shape ``(n-1, k)`` so that
    ``(w * f[idx]).sum(1)[i]`` approximates the integral of ``f`` over
    ``[nodes[i], nodes[i+1]]``.  ``k = min(order, n)``.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    if n < 2:
        raise ValueError("need at least two nodes")
    k = min(order, n)
    i = np.arange(n - 1)
    if k == 4:
        start = np.clip(i - 1, 0, n - 4)
    else:
        start = np.clip(i, 0, n - k)
    idx = start[:, None] + np.arange(k)[None, :]
    h = nodes[1:] - nodes[:-1]
    offsets = nodes[idx] - nodes[:-1, None]
    return idx, _interval_weights(offsets, h)


def _local_pair(nodes, values):
    idx4, w4 = stencil(nodes, 4)
    hi = (w4 * values[idx4]).sum(axis=1)
    if len(nodes) >= 4:
        idx3, w3 = stencil(nodes, 3)
        lo = (w3 * values[idx3]).sum(axis=1)
    else:
        lo = hi
    return hi, lo


def cumulative_array(nodes, values) -> tuple[np.ndarray, np.ndarray]:
    """Array version of :func:`cumulative_integral`: returns (F, error_est)."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    hi, lo = _local_pair(nodes, values)
    F = np.concatenate(([0.0], np.cumsum(hi)))
    err = np.concatenate(([0.0], np.cumsum(np.abs(hi - lo))))
    return F, err


def definite_integral(nodes, values) -> float:
    hi, _ = _local_pair(np.asarray(nodes, float), np.asarray(values, float))
    return float(hi.sum())


def cumulative_integral(f: GridFunction, cap: float | None = None) -> GridFunction:
    """``F(t_i) = integral of f from t_0 to t_i`` with ``F(t_0) = 0``.

    Raises GridTooCoarse when the accumulated error estimate exceeds ``cap``.
    """
    if len(f.nodes) < 2:
        raise ValueError("cumulative_integral needs at least two nodes")
    F, err = cumulative_array(f.nodes, f.values)
    if np.any(f.error_est):
        h = np.diff(f.nodes)
        err = err + np.concatenate(([0.0], np.cumsum(0.5 * h * (f.error_est[1:] + f.error_est[:-1]))))
    if cap is not None and err[-1] > cap:
        raise GridTooCoarse(float(err[-1]), cap)
    return GridFunction(f.nodes, F, err)


def exp_weighted_array(nodes, inner, exponent) -> tuple[np.ndarray, np.ndarray]:
    """Array core of :func:`exp_weighted_integral`.

    ``exponent`` is the already-integrated weight ``E`` (``E[0]`` arbitrary).
    Returns ``y(t_i) = int_{t_0}^{t_i} exp(E(t_i) - E(tau)) inner(tau) dtau``
    and its error estimate.  Solved interval by interval so that no
    exponential ever sees more than the local span of ``E``.
    """
    nodes = np.asarray(nodes, dtype=float)
    inner = np.asarray(inner, dtype=float)
    E = np.asarray(exponent, dtype=float)
    n = len(nodes)
    idx4, w4 = stencil(nodes, 4)
    shift4 = E[1:, None] - E[idx4]
    if np.any(np.abs(shift4) > EXP_SPAN_LIMIT):
        raise OverflowGuard("weight exponent spans more than 700 within one stencil window")
    hi = (w4 * np.exp(shift4) * inner[idx4]).sum(axis=1)
    if n >= 4:
        idx3, w3 = stencil(nodes, 3)
        lo = (w3 * np.exp(E[1:, None] - E[idx3]) * inner[idx3]).sum(axis=1)
    else:
        lo = hi
    dE = np.diff(E)
    if np.any(dE > EXP_SPAN_LIMIT):
        raise OverflowGuard("weight exponent jumps by more than 700 on one interval")
    growth = np.exp(dE)
    loc_err = np.abs(hi - lo)
    y = np.empty(n)
    err = np.empty(n)
    y[0] = err[0] = 0.0
    yi = ei = 0.0
    for i in range(n - 1):
        yi = growth[i] * yi + hi[i]
        ei = growth[i] * ei + loc_err[i]
        y[i + 1] = yi
        err[i + 1] = ei
    if not (math.isfinite(yi) and np.all(np.isfinite(y))):
        raise OverflowGuard("exponentially weighted integral overflowed")
    return y, err


def exp_weighted_integral(inner: GridFunction, weight_exponent: GridFunction) -> GridFunction:
    """``t -> int_{t0}^{t} exp(E(t) - E(tau)) inner(tau) dtau`` with ``E = int weight``.

    This is the solution of ``y' = w y + inner``, ``y(t0) = 0``.
    """
    if not np.array_equal(inner.nodes, weight_exponent.nodes):
        raise ValueError("inner and weight must share nodes")
    E, _ = cumulative_array(weight_exponent.nodes, weight_exponent.values)
    y, err = exp_weighted_array(inner.nodes, inner.values, E)
    return GridFunction(inner.nodes, y, err)


def enrich_grid(nodes, max_spacing: float) -> np.ndarray:
    """Insert equally spaced points so that no gap exceeds ``max_spacing``."""
    nodes = np.asarray(nodes, dtype=float)
    pieces = [nodes[:1]]
    for a, b in zip(nodes[:-1], nodes[1:]):
        g = b - a
        m = int(math.ceil(g / max_spacing * (1 - 1e-12)))
        if m > 1:
            pieces.append(a + g * np.arange(1, m) / m)
        pieces.append(np.array([b]))
    return np.concatenate(pieces)
