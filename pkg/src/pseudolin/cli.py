"""Command-line front end.

    pseudolin corpus-list
    pseudolin corpus-info --system NAME
    pseudolin integrate   --system NAME [--<param> VALUE ...] --T 50 [--phi0 .. --psi0 ..]
    pseudolin certify-t31 --system NAME ... --T 50
    pseudolin certify-t32 --system NAME ... --c1 .5 --c2 .9 --eps .1 --T 10
    pseudolin kl-curves   --system NAME ... --c1 .5 --c2 .9 --T 10

Any unrecognised ``--name value`` pair is a corpus parameter (``--param
name=value`` does the same and is the only way to pass a parameter whose
name clashes with a command option, e.g. ``eps`` under certify-t32).
``--config FILE`` replaces ``--system``.

Exit status: 0 Completed / Certified, 2 not certified or not completed,
1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, LoadedConfig, load_config
from .corpus import corpus_get, corpus_names
from .criteria import SamplingPlan, certify_t31, certify_t32, compute_KL_curves
from .errors import PseudolinError
from .integrator import IntegrationConfig, Status, integrate

EXIT_OK, EXIT_USAGE, EXIT_NEGATIVE = 0, 1, 2
COMMANDS = ("integrate", "certify-t31", "certify-t32", "corpus-list", "corpus-info", "kl-curves")


class UsageError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="pseudolin", allow_abbrev=False,
                                description="Global-solvability certificates for pseudo-linear 2-D systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name, allow_abbrev=False)
        if name == "corpus-list":
            continue
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--system", help="corpus entry name")
        if name != "corpus-info":
            src.add_argument("--config", help="config file")
        sp.add_argument("--param", action="append", default=[], metavar="NAME=VALUE")
        if name == "corpus-info":
            continue
        sp.add_argument("--T", type=float, help="horizon")
        sp.add_argument("--out", default=".", help="output directory")
        if name in ("integrate", "certify-t31"):
            sp.add_argument("--phi0", type=float)
            sp.add_argument("--psi0", type=float)
        if name in ("certify-t32", "kl-curves"):
            sp.add_argument("--c1", type=float)
            sp.add_argument("--c2", type=float)
        if name == "certify-t32":
            sp.add_argument("--eps", type=float, help="box margin around K and L")
        if name != "kl-curves":
            sp.add_argument("--rtol", type=float)
            sp.add_argument("--atol", type=float)
        if name.startswith("certify"):
            sp.add_argument("--seed", type=int)
            sp.add_argument("--t-nodes", type=int, dest="t_nodes")
            sp.add_argument("--uv-samples", type=int, dest="uv_samples")
        if name == "kl-curves":
            sp.add_argument("--nodes", type=int, default=513, help="grid size")
    return p


def _parse_extras(extras):
    """Turn leftover ``--name value`` pairs into corpus parameters."""
    params, i = {}, 0
    while i < len(extras):
        flag = extras[i]
        if not flag.startswith("--") or len(flag) == 2:
            raise UsageError(f"unexpected argument {flag!r}")
        key = flag[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extras):
                raise UsageError(f"{flag}: missing value")
            val = extras[i + 1]
            i += 2
        params[key] = val
    return params


def _param_pairs(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--param {item!r}: expected NAME=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _load(args, extras) -> LoadedConfig:
    params = {**_parse_extras(extras), **_param_pairs(args.param)}
    if getattr(args, "config", None):
        if params:
            raise UsageError(f"--{next(iter(params))}: parameters go in the config file when --config is used")
        return load_config(args.config)
    entry = corpus_get(args.system, params)
    return LoadedConfig(entry.system, entry, entry.default_envelopes(), {})


def _pick(args, cfg, key, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in cfg.run:
        return cfg.run[key]
    return default


def _integration_cfg(args, cfg):
    kw = {}
    for key in ("rtol", "atol"):
        val = _pick(args, cfg, key)
        if val is not None:
            kw[key] = val
    return IntegrationConfig(**kw)


def _plan(args, cfg):
    seed = os.environ.get("PSEUDOLIN_SEED")
    if seed is not None:
        try:
            seed = int(seed)
        except ValueError:
            raise UsageError(f"PSEUDOLIN_SEED={seed!r} is not an integer") from None
    else:
        seed = int(_pick(args, cfg, "seed", 42))
    return SamplingPlan(t_nodes=int(_pick(args, cfg, "t_nodes", 64)),
                        uv_samples=int(_pick(args, cfg, "uv_samples", 256)), rng_seed=seed)


def _horizon(args, cfg, t0):
    T = _pick(args, cfg, "T")
    if T is None:
        raise UsageError("--T: horizon is required")
    if not (math.isfinite(T) and T > t0):
        raise UsageError(f"--T: need a finite horizon above t0={t0:g}")
    return float(T)


def _ic(args, cfg):
    default = cfg.entry.default_ic() if cfg.entry is not None else (None, None)
    phi0 = _pick(args, cfg, "phi0", default[0])
    psi0 = _pick(args, cfg, "psi0", default[1])
    if phi0 is None or psi0 is None:
        raise UsageError("--phi0/--psi0: initial values are required for a config-defined system")
    return float(phi0), float(psi0)


def _c12(args, cfg):
    default = cfg.entry.default_ic() if cfg.entry is not None else (None, None)
    c1 = _pick(args, cfg, "c1", default[0])
    c2 = _pick(args, cfg, "c2", default[1])
    if c1 is None or c2 is None:
        raise UsageError("--c1/--c2: required")
    if not (c1 > 0 and c2 > 0):
        raise UsageError("--c1/--c2: must be positive")
    return float(c1), float(c2)


def _envelopes(cfg):
    if cfg.envelopes is None:
        raise UsageError("no envelopes: this entry/parameter choice has none by default; give [envelopes] in a config")
    return cfg.envelopes


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_corpus_list(args, extras):
    if extras:
        raise UsageError(f"unexpected argument {extras[0]!r}")
    for name in corpus_names():
        e = corpus_get(name)
        print(f"{name:<26}{e.description}")
    return EXIT_OK


def _cmd_corpus_info(args, extras):
    params = {**_parse_extras(extras), **_param_pairs(args.param)}
    e = corpus_get(args.system, params)
    print(f"name: {e.name}")
    print(f"family: {e.citation}")
    print(f"description: {e.description}")
    for k, v in e.params.items():
        print(f"param {k} = {v!r}")
    print(f"default initial values: {e.default_ic()}")
    print(f"homogeneous: {str(e.system.homogeneous).lower()}")
    print(f"default envelopes: {'yes' if e.default_envelopes() is not None else 'none'}")
    return EXIT_OK


def _cmd_integrate(args, extras):
    cfg = _load(args, extras)
    t0 = cfg.system.t0
    T = _horizon(args, cfg, t0)
    phi0, psi0 = _ic(args, cfg)
    traj = integrate(cfg.system, phi0, psi0, (t0, T), _integration_cfg(args, cfg))
    out = _outdir(args)
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    line = f"status={traj.status} t_last={traj.t_last!r} nodes={len(traj.nodes)}"
    if traj.t_blow is not None:
        line += f" t_blow={traj.t_blow!r}"
    print(line)
    return EXIT_OK if traj.status is Status.COMPLETED else EXIT_NEGATIVE


def _emit_certificate(cert, out):
    cert.trajectory.to_csv(os.path.join(out, "trajectory.csv"))
    if cert.K is not None:
        cert.K.to_csv(os.path.join(out, "K.csv"))
        cert.L.to_csv(os.path.join(out, "L.csv"))
    _write(os.path.join(out, "certificate.txt"), cert.to_text())
    _write(os.path.join(out, "certificate.kv"), cert.to_kv())
    print(f"verdict={cert.verdict}")
    return EXIT_OK if cert.certified else EXIT_NEGATIVE


def _cmd_certify_t31(args, extras):
    cfg = _load(args, extras)
    env = _envelopes(cfg)
    T = _horizon(args, cfg, cfg.system.t0)
    phi0, psi0 = _ic(args, cfg)
    cert = certify_t31(cfg.system, env, phi0, psi0, T, _plan(args, cfg), _integration_cfg(args, cfg))
    return _emit_certificate(cert, _outdir(args))


def _cmd_certify_t32(args, extras):
    cfg = _load(args, extras)
    env = _envelopes(cfg)
    if not cfg.system.homogeneous:
        raise UsageError("certify-t32 needs a homogeneous system (F = G = 0)")
    if env.B1 is None or env.B2 is None:
        raise UsageError("certify-t32 needs B1 and B2 envelopes")
    T = _horizon(args, cfg, cfg.system.t0)
    c1, c2 = _c12(args, cfg)
    eps = float(_pick(args, cfg, "eps", 0.1))
    if not eps > 0:
        raise UsageError("--eps: must be positive")
    cert = certify_t32(cfg.system, env, c1, c2, eps, T, _plan(args, cfg), _integration_cfg(args, cfg))
    return _emit_certificate(cert, _outdir(args))


def _cmd_kl_curves(args, extras):
    cfg = _load(args, extras)
    env = _envelopes(cfg)
    t0 = cfg.system.t0
    T = _horizon(args, cfg, t0)
    c1, c2 = _c12(args, cfg)
    if args.nodes < 2:
        raise UsageError("--nodes: need at least 2")
    K, L = compute_KL_curves(env, c1, c2, np.linspace(t0, T, args.nodes))
    out = _outdir(args)
    K.to_csv(os.path.join(out, "K.csv"))
    L.to_csv(os.path.join(out, "L.csv"))
    print(f"K(T)={K.values[-1]!r} L(T)={L.values[-1]!r}")
    return EXIT_OK


_DISPATCH = {
    "integrate": _cmd_integrate, "certify-t31": _cmd_certify_t31, "certify-t32": _cmd_certify_t32,
    "corpus-list": _cmd_corpus_list, "corpus-info": _cmd_corpus_info, "kl-curves": _cmd_kl_curves,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args, extras = parser.parse_known_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return _DISPATCH[args.command](args, extras)
    except (UsageError, ConfigError, PseudolinError, ValueError) as exc:
        msg = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        print(f"pseudolin {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"pseudolin {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
