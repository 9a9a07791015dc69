"""Exception types shared across the package."""

from __future__ import annotations


class PseudolinError(Exception):
    """Base class for all package errors."""


class NonFiniteCoefficient(PseudolinError, ArithmeticError):
    def __init__(self, label: str, t: float, u: float, v: float):
        self.label, self.t, self.u, self.v = label, t, u, v
        super().__init__(f"coefficient {label} is not finite at t={t!r}, u={u!r}, v={v!r}")


class UnknownEntry(PseudolinError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown corpus entry {name!r}")

    def __str__(self):
        return self.args[0]


class InvalidParam(PseudolinError, ValueError):
    def __init__(self, name: str, value, reason: str = ""):
        self.name, self.value = name, value
        msg = f"invalid parameter {name}={value!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class UnsupportedParameterCase(PseudolinError, ValueError):
    """No closed form exists for the requested parameter combination."""


class OutOfRange(PseudolinError, ValueError):
    def __init__(self, t: float, lo: float, hi: float):
        self.t = t
        super().__init__(f"t={t!r} outside [{lo!r}, {hi!r}]")


class GridTooCoarse(PseudolinError):
    def __init__(self, error_est: float, cap: float):
        self.error_est, self.cap = error_est, cap
        super().__init__(f"quadrature error estimate {error_est:.3e} exceeds cap {cap:.3e}")


class OverflowGuard(PseudolinError, OverflowError):
    """An exponent spans more than the representable range on one interval."""


class InitMismatch(PseudolinError, ValueError):
    pass


class GammaOutOfRange(PseudolinError, ValueError):
    pass


class NotHomogeneous(PseudolinError, ValueError):
    pass
