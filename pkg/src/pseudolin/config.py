"""Config files and the small expression language used in them.

A config file has up to three sections::

    [system]
    corpus = vdp-parametric      # or give P, Q, R, S, F, G as expressions
    eps = 0.1

    [envelopes]
    Q0 = 1
    R0 = 1 + 0.2*cos(t)

    [run]
    phi0 = 2
    T = 50

Expressions are sums of products of numbers, the variables ``t``, ``u``,
``v`` (state ``phi``, ``psi``), ``pi``, ``e``, parentheses, ``^`` powers and
the functions exp, log, sin, cos, abs, sqrt.  They compile to numpy
closures.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .core import PseudoLinearSystem
from .corpus import CorpusEntry, corpus_get
from .envelopes import ENVELOPE_NAMES, EnvelopeSet


class ConfigError(ValueError):
    pass


_FUNCS = {"exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos, "abs": np.abs, "sqrt": np.sqrt}
_CONSTS = {"pi": math.pi, "e": math.e}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^()]))")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"unexpected character {text[pos:].strip()[:1]!r} in {text!r}")
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return out


class _Parser:
    # expr := term (('+'|'-') term)*
    # term := unary (('*'|'/') unary)*
    # unary := ('-'|'+') unary | power
    # power := atom ('^' unary)?
    # atom := number | name | name '(' expr ')' | '(' expr ')'

    def __init__(self, text, variables):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind or "token"
            raise ConfigError(f"expected {want} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        if not self.toks:
            raise ConfigError("empty expression")
        node = self.expr()
        if self.i != len(self.toks):
            raise ConfigError(f"trailing input {self.toks[self.i][1]!r} in {self.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            node = _bin(np.add if op == "+" else np.subtract, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            node = _bin(np.multiply if op == "*" else np.divide, node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return lambda env: -inner(env)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exp = self.unary()
            return _bin(np.power, base, exp)
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return lambda env, c=val: c
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        if kind == "name":
            self.take()
            if self.peek() == ("op", "("):
                if val not in _FUNCS:
                    raise ConfigError(f"unknown function {val!r} in {self.text!r}")
                self.take()
                arg = self.expr()
                self.take("op", ")")
                fn = _FUNCS[val]
                return lambda env: fn(arg(env))
            if val in self.variables:
                return lambda env, k=val: env[k]
            if val in _CONSTS:
                return lambda env, c=_CONSTS[val]: c
            raise ConfigError(f"unknown name {val!r} in {self.text!r}")
        raise ConfigError(f"unexpected end of {self.text!r}")


def _bin(fn, a, b):
    return lambda env: fn(a(env), b(env))


def compile_expression(text: str, variables=("t", "u", "v")):
    """Compile ``text`` to a function of the given variables (positional)."""
    node = _Parser(text, set(variables)).parse()
    names = tuple(variables)

    def fn(*args):
        if len(args) != len(names):
            raise TypeError(f"expected {len(names)} arguments")
        with np.errstate(all="ignore"):
            return node(dict(zip(names, args)))

    fn.source = text
    return fn


def _float(section, key, raw):
    try:
        return float(compile_expression(raw, ())())
    except ConfigError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


@dataclass
class LoadedConfig:
    system: PseudoLinearSystem
    entry: CorpusEntry | None = None
    envelopes: EnvelopeSet | None = None
    run: dict = field(default_factory=dict)


RUN_KEYS = {"phi0", "psi0", "T", "rtol", "atol", "c1", "c2", "eps", "seed", "t_nodes", "uv_samples"}


def load_config(path: str | os.PathLike) -> LoadedConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {os.fspath(path)!r}: {exc}") from None
    unknown = set(cp.sections()) - {"system", "envelopes", "run"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    if not cp.has_section("system"):
        raise ConfigError("config needs a [system] section")
    sysec = dict(cp.items("system"))

    entry = None
    if "corpus" in sysec:
        name = sysec.pop("corpus")
        params = {k: _float("system", k, v) for k, v in sysec.items()}
        entry = corpus_get(name, params)
        system = entry.system
    else:
        coeffs = {}
        for k, v in sysec.items():
            if k in ("P", "Q", "R", "S", "F", "G"):
                coeffs[k] = compile_expression(v)
            elif k == "t0":
                coeffs["t0"] = _float("system", k, v)
            elif k == "name":
                coeffs["name"] = v
            else:
                raise ConfigError(f"[system] unknown key {k!r}")
        homog = not ({"F", "G"} & set(coeffs))
        if not homog:
            # constant-zero sources still count as homogeneous
            homog = all(sysec.get(k, "0").strip() in ("0", "0.0") for k in ("F", "G"))
        system = PseudoLinearSystem.from_functions(homogeneous=homog, **coeffs)

    env = None
    if cp.has_section("envelopes"):
        items = dict(cp.items("envelopes"))
        bad = set(items) - set(ENVELOPE_NAMES) - {"B1", "B2"}
        if bad:
            raise ConfigError(f"[envelopes] unknown key(s): {', '.join(sorted(bad))}")
        env = EnvelopeSet.of(**{k: _envelope_fn(v) for k, v in items.items()})
    elif entry is not None:
        env = entry.default_envelopes()

    run = {}
    if cp.has_section("run"):
        for k, v in cp.items("run"):
            if k not in RUN_KEYS:
                raise ConfigError(f"[run] unknown key {k!r}")
            run[k] = _float("run", k, v)
    return LoadedConfig(system, entry, env, run)


def _envelope_fn(text):
    f = compile_expression(text, ("t",))

    def fn(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(f(t), dtype=float), t.shape) if t.ndim else float(f(t))

    return fn
