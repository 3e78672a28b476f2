"""Command-line entry point.

Subcommands: stationary, transient, sweep, validity, interaction, oracle,
figures. Parameters come from flags or from a config file of the form::

    [common]
    omega_r = 1
    gamma = 0.005
    [sweep]
    temps = 0.2, 1, 5, 20

Flags override the file. Outputs go to ``--out``, else ``$QBM_OUTPUT_DIR``,
else the working directory. Exit status is 2 on configuration errors and 3
on numerical failures.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import compare, exact, markov, nonmarkov, oracle, sysbath
from .errors import DomainError, QBMError
from .params import ModelParams, derive_params_from_bare
from .state import InitialMoments

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

PARAM_KEYS = ("omega_r", "omega", "gamma", "lam", "temp")


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    def __init__(self, op, exc):
        super().__init__(f"{op}: {type(exc).__name__}: {exc}")


def _floats(text):
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def _add_params(p):
    g = p.add_argument_group("model parameters")
    g.add_argument("--omega-r", dest="omega_r", type=float, help="renormalized frequency")
    g.add_argument("--omega", dest="omega", type=float, help="bare frequency (instead of --omega-r)")
    g.add_argument("--gamma", type=float)
    g.add_argument("--lambda", dest="lam", type=float, help="bath cutoff")
    g.add_argument("--temp", type=float, help="temperature")


def _io_options():
    # accepted before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="INI file with a [common] section and one section per command")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--no-timestamp", action="store_true", default=argparse.SUPPRESS,
                   help="omit the generated= header line (byte-identical reruns)")
    return p


def build_parser():
    io = _io_options()
    ap = argparse.ArgumentParser(prog="qbm", description=__doc__.split("\n")[0], parents=[io])
    sub = ap.add_subparsers(dest="command", required=True)
    _sub = sub.add_parser
    sub.add_parser = lambda *a, **kw: _sub(*a, parents=[io], **kw)

    s = sub.add_parser("stationary", help="stationary moments by every scheme")
    _add_params(s)

    s = sub.add_parser("transient", help="moment trajectory from a factorized initial state")
    _add_params(s)
    s.add_argument("--method", choices=("exact", "markov", "nonmarkov"), default="exact")
    s.add_argument("--t-max", dest="t_max", type=float)
    s.add_argument("--n-points", dest="n_points", type=int)
    s.add_argument("--q0", type=float, help="initial mean position (ground-state width otherwise)")
    s.add_argument("--p0", type=float, help="initial mean momentum")

    for name in ("sweep", "figures"):
        s = sub.add_parser(name, help="ratio sweep over Lambda and T" if name == "sweep"
                           else "ratio tables for gamma = 0.001 and 0.005")
        s.add_argument("--omega-r", dest="omega_r", type=float)
        s.add_argument("--gamma", action="append", type=float)
        s.add_argument("--lambdas", help="comma list of cutoffs")
        s.add_argument("--temps", help="comma list of temperatures")
        s.add_argument("--jobs", type=int)
        s.add_argument("--exact", choices=("full", "closed"),
                       help="exact reference: full-pole quadrature or large-Lambda closed form")

    s = sub.add_parser("validity", help="Born-validity report")
    _add_params(s)
    s.add_argument("--preset", choices=sorted(compare.PRESETS))

    s = sub.add_parser("interaction", help="stationary interaction energy and energy flow")
    _add_params(s)
    s.add_argument("--mode", choices=sysbath.MODES)

    s = sub.add_parser("oracle", help="discrete-bath benchmark")
    _add_params(s)
    s.add_argument("--n-modes", dest="n_modes", type=int)
    s.add_argument("--omega-max", dest="omega_max", type=float)
    s.add_argument("--t-max", dest="t_max", type=float)
    s.add_argument("--window", help="t_start,t_end")
    s.add_argument("--n-points", dest="n_points", type=int)
    return ap


DEFAULTS = {
    "common": {"omega_r": "1.0"},
    "transient": {"t_max": "100", "n_points": "1001"},
    "sweep": {"lambdas": ",".join(repr(float(x)) for x in compare.DEFAULT_LAMBDAS),
              "temps": "0.2,1,5,20", "jobs": "1", "gamma": "0.001", "exact": "full"},
    "figures": {"lambdas": ",".join(repr(float(x)) for x in compare.DEFAULT_LAMBDAS),
                "temps": "0.2,1,5,20", "jobs": "1", "gamma": "0.001,0.005", "exact": "full"},
    "interaction": {"mode": "numerical"},
    "oracle": {"n_modes": "4000", "omega_max": "200", "t_max": "100",
               "window": "60,100", "n_points": "401"},
}

KNOWN = {
    "common": set(PARAM_KEYS),
    "stationary": set(PARAM_KEYS),
    "transient": set(PARAM_KEYS) | {"method", "t_max", "n_points", "q0", "p0"},
    "sweep": {"omega_r", "gamma", "lambdas", "temps", "jobs", "exact"},
    "figures": {"omega_r", "gamma", "lambdas", "temps", "jobs", "exact"},
    "validity": set(PARAM_KEYS) | {"preset"},
    "interaction": set(PARAM_KEYS) | {"mode"},
    "oracle": set(PARAM_KEYS) | {"n_modes", "omega_max", "t_max", "window", "n_points"},
}


def resolve(args) -> dict:
    """Merge defaults, config file and flags; reject unknown keys."""
    cmd = args.command
    cfg = {}
    cfg.update(DEFAULTS["common"])
    cfg.update(DEFAULTS.get(cmd, {}))
    if args.config:
        cp = configparser.ConfigParser()
        try:
            with open(args.config) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for section in ("common", cmd):
            if not cp.has_section(section):
                continue
            for k, v in cp.items(section):
                if k not in KNOWN.get(section, set()):
                    raise ConfigError(f"unknown key {k!r} in [{section}]")
                if section == "common" and k not in KNOWN[cmd]:
                    continue
                cfg[k] = v
        extra = set(cp.sections()) - set(KNOWN)
        if extra:
            raise ConfigError(f"unknown sections {sorted(extra)}")
    for k, v in vars(args).items():
        if k in ("command", "config", "out", "no_timestamp") or v is None:
            continue
        cfg[k] = ",".join(map(repr, v)) if isinstance(v, list) else v
    return cfg


def params_from(cfg) -> ModelParams:
    try:
        gamma, lam, temp = (float(cfg[k]) for k in ("gamma", "lam", "temp"))
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        if cfg.get("omega") is not None:
            return derive_params_from_bare(float(cfg["omega"]), gamma, lam, temp)
        return ModelParams(float(cfg["omega_r"]), gamma, lam, temp)
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None


def _meta(params: ModelParams | None, **extra):
    m = {}
    if params is not None:
        m.update(omega_r=params.omega_r, omega_bare=params.omega, gamma=params.gamma,
                 lam=params.lam, temperature=params.temperature)
    m.update(extra)
    return m


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get("QBM_OUTPUT_DIR", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _tag(p: ModelParams):
    return f"wr{p.omega_r:g}_g{p.gamma:g}_L{p.lam:g}_T{p.temperature:g}"


def write_csv(path: Path, meta: dict, columns: list[str], rows, timestamp=True):
    lines = compare.metadata_header(meta, timestamp=timestamp)
    lines.append(",".join(columns))
    for r in rows:
        lines.append(",".join(x if isinstance(x, str) else compare.fmt(x) for x in r))
    path.write_text("\n".join(lines) + "\n")
    return path


def _call(op, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except DomainError as exc:
        raise ConfigError(f"{op}: {exc}") from exc
    except (QBMError, ArithmeticError) as exc:
        raise NumericalFailure(op, exc) from exc


# --------------------------------------------------------------------------- commands

def cmd_stationary(args, cfg):
    p = params_from(cfg)
    rows = [("ExactClosed", _call("exact_hl.stationary_closed", exact.stationary_closed, p)),
            ("BornMarkov", _call("qme_markov.stationary_markov", markov.stationary_markov, p)),
            ("BornNonMarkov", _call("qme_nonmarkov.stationary_nonmarkov", nonmarkov.stationary_nonmarkov, p))]
    out = _out_dir(args) / f"stationary_{_tag(p)}.csv"
    write_csv(out, _meta(p, kind="stationary"), ["method", "q2", "p2", "pq_sym"],
              [(name, m.q2, m.p2, m.pq_sym) for name, m in rows], not args.no_timestamp)
    print(f"{'method':<15}{'<q^2>':>24}{'<p^2>':>24}")
    for name, m in rows:
        print(f"{name:<15}{m.q2:>24.15g}{m.p2:>24.15g}")
    print(f"wrote {out}")


def cmd_transient(args, cfg):
    p = params_from(cfg)
    t = np.linspace(0.0, float(cfg["t_max"]), int(cfg["n_points"]))
    init = InitialMoments.ground(p.omega)
    if cfg.get("q0") is not None or cfg.get("p0") is not None:
        q0, p0 = float(cfg.get("q0") or 0.0), float(cfg.get("p0") or 0.0)
        init = InitialMoments(init.q2 + q0 * q0, init.p2 + p0 * p0, 2 * q0 * p0, q0, p0)
    method = cfg.get("method", "exact")
    if method == "exact":
        tr = _call("exact_hl.transient_moments", exact.transient_moments, p, init, t)
    elif method == "markov":
        tr = _call("qme_markov.integrate_markov", markov.integrate_markov, p, init, t)
    else:
        tr = _call("qme_nonmarkov.integrate_nonmarkov", nonmarkov.integrate_nonmarkov, p, init, t)
    cols = tr.columns()
    out = _out_dir(args) / f"transient_{method}_{_tag(p)}.csv"
    write_csv(out, _meta(p, kind="transient", method=tr.method.value,
                         init=f"q2={init.q2!r};p2={init.p2!r};pq={init.pq_sym!r};q={init.q!r};p={init.p!r}"),
              list(cols), zip(*cols.values()), not args.no_timestamp)
    print(f"wrote {out}")


def _sweep(args, cfg, gammas):
    lams, temps = _floats(cfg["lambdas"]), _floats(cfg["temps"])
    jobs = int(cfg.get("jobs", 1))
    omega_r = float(cfg.get("omega_r", 1.0))
    paths = []
    for g in gammas:
        res = _call("compare.ratio_sweep", compare.ratio_sweep, g, omega_r, lams, temps, jobs,
                    cfg.get("exact", "full"))
        d = _out_dir(args)
        paths.append(res.to_csv(d, timestamp=not args.no_timestamp))
        paths.append(res.to_json(d))
        bad = int(np.sum(res.flags != ""))
        print(f"gamma={g:g}: {res.flags.size - bad} points, {bad} flagged")
    for pth in paths:
        print(f"wrote {pth}")


def cmd_sweep(args, cfg):
    _sweep(args, cfg, _floats(cfg["gamma"]))


def cmd_figures(args, cfg):
    _sweep(args, cfg, _floats(cfg["gamma"]))


def cmd_validity(args, cfg):
    if cfg.get("preset"):
        rep = compare.preset_report(cfg["preset"])
        name = cfg["preset"]
    else:
        p = params_from(cfg)
        rep = compare.validity_report(p)
        name = _tag(p)
    doc = rep.to_dict()
    out = _out_dir(args) / f"validity_{name}.json"
    out.write_text(json.dumps(doc, indent=1, default=str))
    print(json.dumps(doc, indent=1, default=str))
    print(f"wrote {out}")


def cmd_interaction(args, cfg):
    p = params_from(cfg)
    mode = cfg.get("mode", "numerical")
    h = _call("sysbath.interaction_energy_stationary", sysbath.interaction_energy_stationary, p, mode)
    flow = _call("sysbath.energy_flow", sysbath.energy_flow, p, interaction_mode=mode)
    doc = {"params": _meta(p), "mode": mode, "interaction_energy": h,
           "energy_flow": {"delta_e_system": flow.delta_e_system,
                           "delta_e_interaction": flow.delta_e_interaction,
                           "delta_e_bath": flow.delta_e_bath}}
    out = _out_dir(args) / f"interaction_{_tag(p)}.json"
    out.write_text(json.dumps(doc, indent=1))
    print(json.dumps(doc, indent=1))
    print(f"wrote {out}")


def cmd_oracle(args, cfg):
    p = params_from(cfg)
    t_max = float(cfg["t_max"])
    w0, w1 = _floats(cfg["window"])
    bath = _call("oracle_discrete.build_bath", oracle.build_bath, p.spectrum(),
                 int(cfg["n_modes"]), float(cfg["omega_max"]), horizon=t_max)
    t = np.union1d(np.linspace(0, t_max, 11), np.linspace(w0, w1, int(cfg["n_points"])))
    states = _call("oracle_discrete.evolve", oracle.evolve, bath, p, None, t)
    m = _call("oracle_discrete.measure", oracle.measure, states, (w0, w1))
    ref = _call("exact_hl.stationary_closed", exact.stationary_closed, p)
    doc = {"params": _meta(p), "n_modes": bath.n_modes, "omega_max": bath.omega_max,
           "window": [w0, w1], "q2": m.moments.q2, "p2": m.moments.p2,
           "pq_sym": m.moments.pq_sym, "interaction_energy": m.interaction_energy,
           "energy_drift": m.max_energy_drift,
           "q2_rel_diff_vs_exact": m.moments.q2 / ref.q2 - 1,
           "p2_rel_diff_vs_exact": m.moments.p2 / ref.p2 - 1}
    out = _out_dir(args) / f"oracle_{_tag(p)}_N{bath.n_modes}.json"
    out.write_text(json.dumps(doc, indent=1))
    print(json.dumps(doc, indent=1))
    print(f"wrote {out}")


COMMANDS = {"stationary": cmd_stationary, "transient": cmd_transient, "sweep": cmd_sweep,
            "figures": cmd_figures, "validity": cmd_validity, "interaction": cmd_interaction,
            "oracle": cmd_oracle}


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    for k, v in (("config", None), ("out", None), ("no_timestamp", False)):
        if not hasattr(args, k):
            setattr(args, k, v)
    try:
        cfg = resolve(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"qbm {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"qbm {args.command}: numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
