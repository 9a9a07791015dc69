"""Classical second-order equations written as pseudo-linear systems.

Each entry fixes one factorisation of the right-hand side into
``R phi + S phi' + G``.  Pendulum-type entries write ``sin phi`` as
``sinc(phi) * phi`` so that ``|R|`` stays bounded; ``cos phi`` terms go to G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import PseudoLinearSystem, from_second_order, sinc
from .envelopes import EnvelopeSet, constant
from .errors import InvalidParam, UnknownEntry, UnsupportedParameterCase


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    citation: str  # classical name of the equation family
    description: str
    params: dict
    _build: Callable = field(repr=False)
    _envelopes: Callable | None = field(default=None, repr=False)
    _ic: Callable = field(default=lambda p: (1.0, 0.0), repr=False)

    def build(self) -> PseudoLinearSystem:
        return self._build(self.params)

    @property
    def system(self) -> PseudoLinearSystem:
        return self.build()

    def default_envelopes(self) -> EnvelopeSet | None:
        return self._envelopes(self.params) if self._envelopes else None

    def default_ic(self) -> tuple[float, float]:
        return self._ic(self.params)

    @property
    def t0(self) -> float:
        return float(self.params["t0"])


@dataclass(frozen=True)
class _Spec:
    citation: str
    description: str
    defaults: dict
    build: Callable
    envelopes: Callable | None = None
    ic: Callable = lambda p: (1.0, 0.0)
    validate: Callable | None = None


def _positive(*names):
    def check(p):
        for n in names:
            if not p[n] > 0:
                raise InvalidParam(n, p[n], "must be positive")
    return check


def _nonzero(*names):
    def check(p):
        for n in names:
            if p[n] == 0:
                raise InvalidParam(n, p[n], "must be non-zero")
    return check


def _all(*checks):
    def check(p):
        for c in checks:
            c(p)
    return check


def _vdp_parametric(p):
    eps, beta = p["eps"], p["beta"]
    return from_second_order(
        A=lambda t, u, v: -(1.0 + beta * np.cos(t)),
        Bc=lambda t, u, v: -eps * (u * u - 1.0),
        t0=p["t0"], name="vdp-parametric",
    )


def _vdp_parametric_env(p):
    if p["eps"] < 0:
        return None
    return EnvelopeSet.of(P0=0.0, Q0=1.0, R0=1.0 + abs(p["beta"]), S0=p["eps"], F0=0.0, G0=0.0)


def _vdp_forced(p):
    eps, gam, om = p["eps"], p["Gamma"], p["omega"]
    return from_second_order(
        A=-1.0,
        Bc=lambda t, u, v: -eps * (u * u - 1.0),
        Fc=lambda t, u, v: gam * np.cos(om * t),
        t0=p["t0"], name="vdp-forced",
    )


def _vdp_forced_env(p):
    if p["eps"] < 0:
        return None
    return EnvelopeSet.of(P0=0.0, Q0=1.0, R0=1.0, S0=p["eps"], F0=0.0, G0=abs(p["Gamma"]))


def _electronic(p):
    l1, l2, om, h, nu = p["lambda1"], p["lambda2"], p["omega"], p["h"], p["nu"]
    return from_second_order(
        A=lambda t, u, v: -om * om * (1.0 - h * np.cos(nu * t)),
        Bc=lambda t, u, v: -2.0 * (l1 + l2 * u * u),
        t0=p["t0"], name="electronic-contour",
    )


def _electronic_env(p):
    if p["lambda2"] < 0:
        return None
    return EnvelopeSet.of(Q0=1.0, R0=p["omega"] ** 2 * (1.0 + abs(p["h"])), S0=-2.0 * p["lambda1"])


def _vdp_mathieu(p):
    al, be, om0, h, ga = p["alpha"], p["beta"], p["omega0"], p["h"], p["gamma"]
    return from_second_order(
        A=lambda t, u, v: -om0 * om0 * (1.0 + h * np.cos(ga * t)),
        Bc=lambda t, u, v: al - be * u * u,
        t0=p["t0"], name="vdp-mathieu",
    )


def _vdp_mathieu_env(p):
    if p["beta"] < 0:
        return None
    return EnvelopeSet.of(Q0=1.0, R0=p["omega0"] ** 2 * (1.0 + abs(p["h"])), S0=p["alpha"])


def _lienard(p):
    eps = p["eps"]
    f = p.get("f")
    g_ratio = p.get("g_ratio")
    damping = f if f is not None else (lambda t, v: eps * (v * v - 1.0))
    if g_ratio is None:
        A = -1.0
    else:
        A = lambda t, u, v: -g_ratio(u)  # noqa: E731
    return from_second_order(A=A, Bc=lambda t, u, v: -damping(t, v), t0=p["t0"], name="lienard")


def _lienard_env(p):
    if p.get("f") is not None or p.get("g_ratio") is not None or p["eps"] < 0:
        return None
    return EnvelopeSet.of(Q0=1.0, R0=1.0, S0=p["eps"])


def _pendulum_light(p):
    g, eps, a, om = p["g"], p["eps"], p["a"], p["omega"]
    return from_second_order(
        A=lambda t, u, v: (g / 2.0 - eps / a * np.cos(om * t)) * sinc(u),
        Bc=0.0, t0=p["t0"], name="pendulum-light",
    )


def _pendulum_light_env(p):
    return EnvelopeSet.of(Q0=1.0, R0=abs(p["g"]) / 2.0 + abs(p["eps"] / p["a"]))


# (m l^2 phi')' + g l sin phi = 0 with l(t) = l0 (1 + delta cos(omega t))
def _pendulum(p):
    m, g, l0, d, om = p["m"], p["g"], p["l0"], p["delta"], p["omega"]

    def S(t, u, v):
        return 2.0 * d * om * np.sin(om * t) / (1.0 + d * np.cos(om * t))

    def A(t, u, v):
        return -g / (m * l0 * (1.0 + d * np.cos(om * t))) * sinc(u)

    return from_second_order(A=A, Bc=S, t0=p["t0"], name="pendulum")


def _pendulum_env(p):
    d = abs(p["delta"])
    return EnvelopeSet.of(
        Q0=1.0,
        R0=abs(p["g"]) / (p["m"] * p["l0"] * (1.0 - d)),
        S0=2.0 * d * abs(p["omega"]) / (1.0 - d),
    )


def _pendulum_check(p):
    _positive("m", "l0")(p)
    if not abs(p["delta"]) < 1:
        raise InvalidParam("delta", p["delta"], "|delta| must be < 1 so the length stays positive")


# zeta(t) = zeta_amp cos(Omega t), eta(t) = eta_amp sin(Omega t)
def _moving_support(p):
    a, g, za, ea, Om = p["a"], p["g"], p["zeta_amp"], p["eta_amp"], p["Omega"]

    def A(t, u, v):
        zeta_dd = -za * Om * Om * np.cos(Om * t)
        return -(g + zeta_dd) / a * sinc(u)

    def Fc(t, u, v):
        eta_dd = -ea * Om * Om * np.sin(Om * t)
        return -eta_dd * np.cos(u) / a

    return from_second_order(A=A, Bc=0.0, Fc=Fc, t0=p["t0"], name="pendulum-moving-support")


def _moving_support_env(p):
    a, Om2 = abs(p["a"]), p["Omega"] ** 2
    return EnvelopeSet.of(Q0=1.0, R0=(abs(p["g"]) + abs(p["zeta_amp"]) * Om2) / a,
                          G0=abs(p["eta_amp"]) * Om2 / a)


def _duffing(p):
    k, al, be, gam, om = p["k"], p["alpha"], p["beta"], p["Gamma"], p["omega"]
    return from_second_order(
        A=lambda t, u, v: -al - be * u * u,
        Bc=-k,
        Fc=lambda t, u, v: gam * np.cos(om * t),
        t0=p["t0"], name="duffing",
    )


def _duffing_env(p):
    # the cubic term makes |R| unbounded unless beta = 0
    if p["beta"] != 0:
        return None
    return EnvelopeSet.of(Q0=1.0, R0=abs(p["alpha"]), S0=-p["k"], G0=abs(p["Gamma"]))


def _damped_pendulum(p):
    eps, gam, k = p["eps"], p["gamma"], p["k"]
    return from_second_order(
        A=lambda t, u, v: (-1.0 + eps * gam * np.sin(t)) * sinc(u),
        Bc=-eps * k, t0=p["t0"], name="damped-pendulum-forced",
    )


def _damped_pendulum_env(p):
    return EnvelopeSet.of(Q0=1.0, R0=1.0 + abs(p["eps"] * p["gamma"]), S0=-p["eps"] * p["k"])


def _rayleigh(p):
    eps = p["eps"]
    if eps == 0:
        return from_second_order(A=-1.0, Bc=0.0, t0=p["t0"], name="rayleigh")
    return from_second_order(A=-1.0, Bc=lambda t, u, v: -eps * (v * v / 3.0 - 1.0), t0=p["t0"], name="rayleigh")


def _rayleigh_env(p):
    if p["eps"] < 0:
        return None
    return EnvelopeSet.of(Q0=1.0, R0=1.0, S0=p["eps"])


def _relativistic(p):
    k, eps = p["k"], p["eps"]
    return from_second_order(A=lambda t, u, v: -1.0 + k * eps * u, Bc=0.0, Fc=k, t0=p["t0"], name="relativistic-orbit")


def _relativistic_env(p):
    if p["k"] * p["eps"] != 0:
        return None
    return EnvelopeSet.of(Q0=1.0, R0=1.0, G0=abs(p["k"]))


def _coupled(p):
    a = p["a"]

    def damp(t, u, v):
        return -(u * u + v * v - 1.0)

    return PseudoLinearSystem.from_functions(
        P=damp, Q=lambda t, u, v: a * np.sin(t), R=lambda t, u, v: -a * np.sin(t), S=damp,
        t0=p["t0"], name="coupled-1.15",
    )


def _coupled_env(p):
    return EnvelopeSet.of(P0=1.0, Q0=abs(p["a"]), R0=abs(p["a"]), S0=1.0, B1=0.0, B2=0.0)


@dataclass(frozen=True)
class EmdenFowlerParams:
    rho: float = 0.0
    sigma: float = -3.0
    n: float = 2.0
    t0: float = 1.0

    def __post_init__(self):
        if not self.t0 > 0:
            raise InvalidParam("t0", self.t0, "Emden-Fowler needs t0 > 0")
        if not self.n > 1:
            raise InvalidParam("n", self.n, "Emden-Fowler needs n > 1")

    @classmethod
    def from_mapping(cls, p) -> "EmdenFowlerParams":
        return cls(float(p["rho"]), float(p["sigma"]), float(p["n"]), float(p["t0"]))


def _emden_fowler(p):
    ef = EmdenFowlerParams.from_mapping(p)
    rho, sigma, n = ef.rho, ef.sigma, ef.n
    m = n - 1.0
    if float(n).is_integer():
        def R(t, u, v):
            return t**sigma * u**m
    else:
        # non-integer powers of negative u are undefined; use |u|^(n-1) phi
        def R(t, u, v):
            return t**sigma * abs(u) ** m
    return PseudoLinearSystem.from_functions(
        P=0.0, Q=lambda t, u, v: t ** (-rho), R=R, S=0.0, t0=ef.t0, name="emden-fowler",
    )


def _emden_fowler_env(p):
    rho, sigma = p["rho"], p["sigma"]
    return EnvelopeSet.of(
        P0=0.0, Q0=lambda t: np.asarray(t, float) ** (-rho), R0=lambda t: np.asarray(t, float) ** sigma,
        S0=0.0, F0=0.0, G0=0.0, B1=0.0, B2=0.0,
    )


def _emden_fowler_check(p):
    EmdenFowlerParams.from_mapping(p)


_REGISTRY: dict[str, _Spec] = {
    "vdp-parametric": _Spec("van der Pol", "van der Pol equation with parametric excitation",
                            {"eps": 0.1, "beta": 0.2, "t0": 0.0}, _vdp_parametric, _vdp_parametric_env,
                            ic=lambda p: (2.0, 0.0)),
    "vdp-forced": _Spec("van der Pol", "forced van der Pol equation",
                        {"eps": 0.1, "Gamma": 0.5, "omega": 1.0, "t0": 0.0}, _vdp_forced, _vdp_forced_env,
                        ic=lambda p: (2.0, 0.0)),
    "electronic-contour": _Spec("parametric oscillator", "electronic contour with parametric excitation",
                                {"lambda1": 0.05, "lambda2": 0.1, "omega": 1.0, "h": 0.3, "nu": 2.0, "t0": 0.0},
                                _electronic, _electronic_env),
    "vdp-mathieu": _Spec("van der Pol-Mathieu", "van der Pol-Mathieu equation (dust grain charge)",
                         {"alpha": 0.1, "beta": 0.1, "omega0": 1.0, "h": 0.2, "gamma": 1.0, "t0": 0.0},
                         _vdp_mathieu, _vdp_mathieu_env),
    "lienard": _Spec("Lienard", "Lienard equation phi'' + f(t,phi')phi' + g(phi) = 0",
                     {"eps": 0.1, "f": None, "g_ratio": None, "t0": 0.0}, _lienard, _lienard_env),
    "pendulum-light": _Spec("pendulum", "pendulum with a light",
                            {"g": 1.0, "eps": 0.2, "a": 1.0, "omega": 1.0, "t0": 0.0},
                            _pendulum_light, _pendulum_light_env, ic=lambda p: (0.1, 0.0),
                            validate=_nonzero("a")),
    "pendulum": _Spec("pendulum", "pendulum of time-varying length l(t) = l0 (1 + delta cos(omega t))",
                      {"m": 1.0, "g": 1.0, "l0": 1.0, "delta": 0.1, "omega": 1.0, "t0": 0.0},
                      _pendulum, _pendulum_env, validate=_pendulum_check),
    "pendulum-moving-support": _Spec("pendulum", "pendulum on a moving support",
                                     {"a": 1.0, "g": 1.0, "zeta_amp": 0.1, "eta_amp": 0.1, "Omega": 2.0, "t0": 0.0},
                                     _moving_support, _moving_support_env, validate=_nonzero("a")),
    "duffing": _Spec("Duffing", "Duffing equation",
                     {"k": 0.3, "alpha": -1.0, "beta": 1.0, "Gamma": 0.5, "omega": 1.2, "t0": 0.0},
                     _duffing, _duffing_env),
    "damped-pendulum-forced": _Spec("pendulum", "damped pendulum with periodic forcing of the pivot",
                                    {"eps": 0.1, "gamma": 1.0, "k": 0.5, "t0": 0.0},
                                    _damped_pendulum, _damped_pendulum_env),
    "rayleigh": _Spec("Rayleigh", "Rayleigh equation", {"eps": 0.1, "t0": 0.0}, _rayleigh, _rayleigh_env),
    "relativistic-orbit": _Spec("Binet orbit", "relativistic perturbation of a planetary orbit",
                                {"k": 1.0, "eps": 0.01, "t0": 0.0}, _relativistic, _relativistic_env),
    "coupled-1.15": _Spec("planar limit cycle", "planar system with limit cycle and rotating forcing",
                          {"a": 1.0, "t0": 0.0}, _coupled, _coupled_env, ic=lambda p: (0.5, 0.5)),
    "emden-fowler": _Spec("Emden-Fowler", "Emden-Fowler equation (t^rho phi')' = t^sigma phi^n",
                          {"rho": 0.0, "sigma": -3.0, "n": 2.0, "t0": 1.0},
                          _emden_fowler, _emden_fowler_env, ic=lambda p: (0.5, 0.9),
                          validate=_emden_fowler_check),
}

CALLABLE_PARAMS = {"f", "g_ratio"}


def corpus_names() -> list[str]:
    return list(_REGISTRY)


def corpus_get(name: str, params: dict | None = None, **overrides) -> CorpusEntry:
    """Look up an entry and merge parameter overrides over its defaults."""
    try:
        spec = _REGISTRY[name]
    except KeyError:
        raise UnknownEntry(name) from None
    merged = dict(spec.defaults)
    for key, val in {**(params or {}), **overrides}.items():
        if key not in merged:
            raise InvalidParam(key, val, f"not a parameter of {name}")
        if key in CALLABLE_PARAMS:
            if val is not None and not callable(val):
                raise InvalidParam(key, val, "must be callable")
        else:
            try:
                val = float(val)
            except (TypeError, ValueError):
                raise InvalidParam(key, val, "must be a real number") from None
            if not math.isfinite(val):
                raise InvalidParam(key, val, "must be finite")
        merged[key] = val
    if spec.validate:
        spec.validate(merged)
    return CorpusEntry(name, spec.citation, spec.description, merged, spec.build, spec.envelopes, spec.ic)


# ---------------------------------------------------------------------------
# Closed forms for the Emden-Fowler bound curve L and the sufficient conditions


def _int_tau_sigma_log(t, t0, sigma):
    """int_{t0}^{t} tau^sigma ln(tau/t0) dtau for sigma != -1."""
    a = sigma + 1.0

    def anti(x):
        x = np.asarray(x, dtype=float)
        return np.power(x, a) / a * (np.log(x / t0) - 1.0 / a)

    return anti(t) - anti(t0)


def emden_fowler_L_closed_form(t, c1: float, c2: float, p: EmdenFowlerParams):
    """Closed-form L(t, c1, c2) for the Emden-Fowler envelopes Q0 = t^-rho, R0 = t^sigma.

    Covers ``rho != 1, sigma != -1, 2 + sigma - rho != 0`` and
    ``rho == 1, sigma != -1``; any other case raises UnsupportedParameterCase
    and must go through numerical quadrature instead.
    """
    rho, sigma, t0 = p.rho, p.sigma, p.t0
    t_arr = np.asarray(t, dtype=float)
    t0a = np.float64(t0)
    if np.any(t_arr < t0):
        raise ValueError("t must be >= t0")
    if not (c1 > 0 and c2 > 0):
        raise ValueError("c1 and c2 must be positive")
    if sigma == -1:
        raise UnsupportedParameterCase(f"sigma = -1 (rho={rho}) has no closed form here")
    s1 = sigma + 1.0
    if rho == 1:
        expo = c1 / c2 * (np.power(t_arr, s1) - np.power(t0a, s1)) / s1 + _int_tau_sigma_log(t_arr, t0, sigma)
    else:
        a = 2.0 + sigma - rho
        if a == 0:
            raise UnsupportedParameterCase("2 + sigma - rho = 0 has no closed form here")
        r1 = 1.0 - rho
        expo = ((c1 / c2 - t0**r1 / r1) * (np.power(t_arr, s1) - np.power(t0a, s1)) / s1
                + (np.power(t_arr, a) - np.power(t0a, a)) / (r1 * a))
    out = c2 * np.exp(expo)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ConditionReport:
    """Which of the three sufficient parameter conditions hold.

    ``cond2`` is evaluated exactly as printed (``0 < c1 < exp(...)``);
    ``cond2_c2`` reads the bound on c2 instead.  ``margins`` maps each
    sub-inequality to ``rhs - lhs`` style values, positive when satisfied
    (zero satisfies only the non-strict ones).
    """

    cond1: bool
    cond2: bool
    cond2_c2: bool
    cond3: bool
    margins: dict

    @property
    def any(self) -> bool:
        return self.cond1 or self.cond2 or self.cond3


def emden_fowler_condition_check(p: EmdenFowlerParams, c1: float, c2: float) -> ConditionReport:
    rho, sigma, t0 = p.rho, p.sigma, p.t0
    nan = float("nan")
    m = {
        "rho<1": 1.0 - rho,
        "sigma<-1": -1.0 - sigma,
        "2+sigma-rho<0": -(2.0 + sigma - rho),
        "c1>0": c1,
        "0<c2<1": min(c2, 1.0 - c2),
        "rho=1": -abs(rho - 1.0),
    }
    if rho < 1 and c2 > 0:
        bound = t0 ** (1.0 - rho) / (1.0 - rho)
        m["c1/c2<=t0^(1-rho)/(1-rho)"] = bound - c1 / c2
        m["c1/c2>t0^(1-rho)/(1-rho)"] = c1 / c2 - bound
    else:
        m["c1/c2<=t0^(1-rho)/(1-rho)"] = nan
        m["c1/c2>t0^(1-rho)/(1-rho)"] = nan
    if sigma != -1:
        cap = math.exp(t0 ** (sigma + 1.0) / (sigma + 1.0))
        m["0<c1<exp(t0^(s+1)/(s+1))"] = min(c1, cap - c1)
        m["0<c2<exp(t0^(s+1)/(s+1))"] = min(c2, cap - c2)
    else:
        m["0<c1<exp(t0^(s+1)/(s+1))"] = m["0<c2<exp(t0^(s+1)/(s+1))"] = nan
    if sigma < -1 and c2 > 0:
        s1 = sigma + 1.0
        tail = t0**s1 / s1**2  # int_{t0}^{inf} tau^sigma ln(tau/t0) dtau
        cap3 = math.exp(c1 / c2 * t0**s1 / s1 - tail)
        m["0<c2<exp(cond3)"] = min(c2, cap3 - c2)
    else:
        m["0<c2<exp(cond3)"] = nan

    def pos(key):
        return m[key] > 0  # NaN compares False

    def nonneg(key):
        return m[key] >= 0

    common = pos("rho<1") and pos("sigma<-1") and pos("2+sigma-rho<0") and pos("c1>0")
    cond1 = common and pos("0<c2<1") and nonneg("c1/c2<=t0^(1-rho)/(1-rho)")
    cond2 = common and pos("0<c1<exp(t0^(s+1)/(s+1))") and pos("c1/c2>t0^(1-rho)/(1-rho)")
    cond2_c2 = common and pos("0<c2<exp(t0^(s+1)/(s+1))") and pos("c1/c2>t0^(1-rho)/(1-rho)")
    cond3 = rho == 1 and pos("sigma<-1") and pos("c1>0") and pos("0<c2<exp(cond3)")
    return ConditionReport(cond1, cond2, cond2_c2, cond3, m)
