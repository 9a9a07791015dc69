from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

ENVELOPE_NAMES = ("P0", "Q0", "R0", "S0", "F0", "G0")
NONNEGATIVE = ("Q0", "R0", "F0", "G0")


def constant(c: float) -> Callable:
    c = float(c)

    def fn(t):
        return np.full(np.shape(t), c) if np.ndim(t) else c

    fn.value = c
    return fn


def _as_fn(f):
    if f is None:
        return None
    return f if callable(f) else constant(f)


@dataclass(frozen=True)
class EnvelopeSet:
    """t-only functions dominating the coefficients, plus the bracket for B = P - S.

    Q0, R0, F0 and G0 bound absolute values and must be non-negative.  B1 and
    B2 are only needed for the positive-solution criterion.
    """

    P0: Callable
    Q0: Callable
    R0: Callable
    S0: Callable
    F0: Callable
    G0: Callable
    B1: Callable | None = None
    B2: Callable | None = None

    @classmethod
    def of(cls, P0=0.0, Q0=0.0, R0=0.0, S0=0.0, F0=0.0, G0=0.0, B1=None, B2=None) -> "EnvelopeSet":
        """Build from callables of t or constants."""
        return cls(*(_as_fn(x) for x in (P0, Q0, R0, S0, F0, G0, B1, B2)))

    def sample(self, name: str, t) -> np.ndarray:
        fn = getattr(self, name)
        if fn is None:
            raise ValueError(f"envelope {name} is not set")
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape).astype(float, copy=True)

    def sample_all(self, t) -> dict[str, np.ndarray]:
        return {f.name: self.sample(f.name, t) for f in fields(self) if getattr(self, f.name) is not None}

    def negative_parts(self, t) -> dict[str, float]:
        """Most negative sampled value of each envelope that must be non-negative."""
        out = {}
        for name in NONNEGATIVE:
            m = float(np.min(self.sample(name, t)))
            if m < 0:
                out[name] = m
        return out

    def replace(self, **changes) -> "EnvelopeSet":
        cur = {f.name: getattr(self, f.name) for f in fields(self)}
        cur.update({k: _as_fn(v) for k, v in changes.items()})
        return EnvelopeSet(**cur)
