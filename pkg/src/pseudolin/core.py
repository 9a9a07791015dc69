"""Pseudo-linear systems of two first-order equations.

A system is

    phi' = P(t,phi,psi) phi + Q(t,phi,psi) psi + F(t,phi,psi)
    psi' = R(t,phi,psi) phi + S(t,phi,psi) psi + G(t,phi,psi)

with each coefficient given as a plain function of ``(t, u, v)``.  Functions
written with numpy operations broadcast over arrays, which the sampling
code uses; scalar-only functions are vectorized on demand.

The coefficients are expected to be continuous in t and continuously
differentiable in (u, v).  Nothing here checks smoothness; that remains the
caller's obligation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import NonFiniteCoefficient

LABELS = ("P", "Q", "R", "S", "F", "G")


def _zero(t, u, v):
    return 0.0


def _one(t, u, v):
    return 1.0


@dataclass(frozen=True)
class CoefficientField:
    label: str
    fn: Callable

    def __call__(self, t, u, v):
        return self.fn(t, u, v)

    def evaluate(self, t, u, v) -> np.ndarray:
        """Evaluate on broadcast arrays, always returning a float array."""
        t, u, v = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, float), np.asarray(v, float))
        try:
            out = np.asarray(self.fn(t, u, v), dtype=float)
        except (TypeError, ValueError):
            out = np.vectorize(lambda a, b, c: float(self.fn(a, b, c)), otypes=[float])(t, u, v)
        return np.broadcast_to(out, t.shape).astype(float, copy=True)

    @classmethod
    def constant(cls, label: str, value: float) -> "CoefficientField":
        value = float(value)
        if value == 0.0:
            return cls(label, _zero)
        if value == 1.0:
            return cls(label, _one)
        return cls(label, lambda t, u, v: value)


def as_field(label: str, f) -> CoefficientField:
    if isinstance(f, CoefficientField):
        return f if f.label == label else CoefficientField(label, f.fn)
    if f is None:
        return CoefficientField(label, _zero)
    if callable(f):
        return CoefficientField(label, f)
    return CoefficientField.constant(label, f)


@dataclass(frozen=True)
class PseudoLinearSystem:
    P: CoefficientField
    Q: CoefficientField
    R: CoefficientField
    S: CoefficientField
    F: CoefficientField
    G: CoefficientField
    t0: float = 0.0
    homogeneous: bool = False
    name: str = ""

    @classmethod
    def from_functions(cls, P=0.0, Q=0.0, R=0.0, S=0.0, F=0.0, G=0.0, t0=0.0,
                       homogeneous=None, name="") -> "PseudoLinearSystem":
        """Build a system from callables ``f(t, u, v)`` or constants.

        ``homogeneous`` defaults to True exactly when F and G are omitted or 0.
        """
        if homogeneous is None:
            homogeneous = _is_zero(F) and _is_zero(G)
        fields = {lab: as_field(lab, f) for lab, f in zip(LABELS, (P, Q, R, S, F, G))}
        return cls(**fields, t0=float(t0), homogeneous=bool(homogeneous), name=name)

    def fields(self) -> tuple[CoefficientField, ...]:
        return (self.P, self.Q, self.R, self.S, self.F, self.G)

    def rhs(self, t, y):
        u, v = y[0], y[1]
        du = self.P.fn(t, u, v) * u + self.Q.fn(t, u, v) * v + self.F.fn(t, u, v)
        dv = self.R.fn(t, u, v) * u + self.S.fn(t, u, v) * v + self.G.fn(t, u, v)
        return np.array([du, dv], dtype=float)


def _is_zero(f) -> bool:
    if f is None:
        return True
    if isinstance(f, CoefficientField):
        return f.fn is _zero
    return not callable(f) and float(f) == 0.0


class CoefficientSample(NamedTuple):
    p: float
    q: float
    r: float
    s: float
    f: float
    g: float
    b: float


def eval_coefficients(system: PseudoLinearSystem, t, u, v) -> CoefficientSample:
    """All six coefficient values at ``(t, u, v)`` plus ``b = p - s``.

    Accepts scalars or broadcastable arrays.  Raises NonFiniteCoefficient at
    the first point where any field is NaN or infinite.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < system.t0):
        raise ValueError(f"t must be >= t0={system.t0}")
    u_arr, v_arr = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(u_arr)) and np.all(np.isfinite(v_arr))):
        raise ValueError("u and v must be finite")
    scalar = t_arr.ndim == 0 and u_arr.ndim == 0 and v_arr.ndim == 0
    vals = []
    for fld in system.fields():
        val = fld.evaluate(t_arr, u_arr, v_arr)
        bad = ~np.isfinite(val)
        if np.any(bad):
            tb, ub, vb = np.broadcast_arrays(t_arr, u_arr, v_arr)
            k = np.flatnonzero(bad.ravel())[0]
            raise NonFiniteCoefficient(fld.label, float(tb.ravel()[k]), float(ub.ravel()[k]), float(vb.ravel()[k]))
        vals.append(float(val) if scalar else val)
    p, q, r, s, f, g = vals
    return CoefficientSample(p, q, r, s, f, g, p - s)


def from_second_order(A, Bc, Fc=None, t0: float = 0.0, name: str = "") -> PseudoLinearSystem:
    """System for ``phi'' = A phi + Bc phi' + Fc`` with ``psi = phi'``.

    The caller supplies the factorisation (e.g. ``sin u = (sin u / u) u``);
    removable singularities in ``A`` must already be patched.
    """
    return PseudoLinearSystem.from_functions(
        P=0.0, Q=1.0, R=A, S=Bc, F=0.0, G=Fc if Fc is not None else 0.0, t0=t0, name=name
    )


def sinc(u):
    """``sin(u)/u`` with the series ``1 - u^2/6 + u^4/120`` for ``|u| < 1e-4``."""
    if isinstance(u, (float, int)):
        if abs(u) < 1e-4:
            return 1.0 - u * u / 6.0 + u**4 / 120.0
        return math.sin(u) / u
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    series = 1.0 - u * u / 6.0 + u**4 / 120.0
    out = np.where(small, series, np.sin(safe) / safe)
    return out if out.ndim else float(out)
