"""Command-line front end.

Every command reads a ring domain (``--domain FILE``, ``--domain-preset`` or
inline ``--circumference/--potential/--points``) plus command parameters,
optionally from a JSON ``--config`` file. CSV output carries a ``#`` metadata
header whose ``# config:`` line reparses to the same run configuration.

Exit codes: 0 success, 2 malformed input, 3 numerical failure.
"""

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .domain import RingDomain, parse_number, piecewise_ring_eigendata, uniform_ring_eigendata
from .errors import NumericalError
from .greens import check_regular, green_matrix
from .oracle import assemble_full_s
from .qmatrix import build_q, default_eigendata, resonance_data
from .scattering import smatrix, unitarity_defect
from .transport import (ENGINES, SwitchSpec, TransmissionCurve, averaged_conductance,
                        barrier_switch, interference_switch, switch_report)

COMMANDS = ("eigen", "green", "qmat", "smat", "sweep", "resonance", "conductance", "switch")

DOMAIN_PRESETS = {
    "interference-open": {"circumference": "2*pi", "potential": 0, "attachment_points": [0, "pi/2"]},
    "interference-closed": {"circumference": "2*pi", "potential": -3, "attachment_points": [0, "pi/2"]},
    "barrier-open": {"circumference": "2*pi", "potential": 0, "attachment_points": [0, "pi"]},
    "barrier-closed": {"circumference": "2*pi", "potential": 3, "attachment_points": [0, "pi"]},
    "single": {"circumference": "2*pi", "potential": 0, "attachment_points": [0]},
}

# parameter name -> (type, default); None default means "required for the command"
PARAMS = {
    "eigen": {"lam_max": (float, None), "modes": (int, 0)},
    "green": {"lam_min": (float, None), "lam_max": (float, None), "num": (int, 50),
              "pole_guard": (float, 1e-6)},
    "qmat": {"lam": (float, None)},
    "resonance": {"lam0": (float, None)},
    "smat": {"lam": (float, None), "beta": (float, None), "engine": (str, "qmatrix")},
    "sweep": {"lam_min": (float, None), "lam_max": (float, None), "num": (int, 500),
              "beta": (float, None), "engine": (str, "qmatrix"), "pole_guard": (float, 1e-6)},
    "conductance": {"betas": (list, None), "taus": (list, None), "mu": (float, None),
                    "source": (int, 0), "drain": (int, 1), "engine": (str, "qmatrix")},
    "switch": {"preset": (str, None), "beta": (float, None), "tau": (float, None),
               "mu": (float, None), "engine": (str, None), "sweep_num": (int, 0),
               "sweep_out": (str, None)},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    domain: dict = None
    params: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"command": self.command, "domain": self.domain, "params": self.params},
                          sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}")
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"command", "domain", "params"}
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        return cls(data.get("command"), data.get("domain"), data.get("params") or {})


def _coerce(command, name, value):
    kind, _ = PARAMS[command][name]
    try:
        if value is None:
            return None
        if kind is float:
            return parse_number(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind is list:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return [parse_number(v) for v in value]
        return str(value)
    except (ValueError, TypeError):
        raise ConfigError(f"parameter {name!r}: cannot interpret {value!r} as {kind.__name__}") from None


def resolve_params(command, file_params, cli_params):
    spec = PARAMS[command]
    unknown = set(file_params) - set(spec)
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {command!r}: {sorted(unknown)}")
    out = {}
    for name, (_, default) in spec.items():
        value = cli_params.get(name)
        if value is None:
            value = file_params.get(name, default)
        out[name] = _coerce(command, name, value)
    engine = out.get("engine")
    if engine is not None and engine not in ENGINES:
        raise ConfigError(f"parameter 'engine' must be one of {ENGINES}")
    return out


def _domain_config(args, file_domain):
    if args.domain:
        try:
            with open(args.domain) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read domain file: {exc}")
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.domain}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if args.domain_preset:
        return dict(DOMAIN_PRESETS[args.domain_preset])
    if args.circumference is not None or args.points is not None:
        return {"circumference": args.circumference or "2*pi",
                "potential": args.potential if args.potential is not None else 0.0,
                "attachment_points": [p for p in (args.points or "0").split(",")]}
    return file_domain


def _make_domain(cfg):
    if cfg is None:
        raise ConfigError("no domain given (use --domain, --domain-preset or --points)")
    try:
        return RingDomain.from_config(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"domain: {exc}")


def _header(config, engine=None, extra=()):
    lines = [f"# ringscatter {__version__}", f"# command: {config.command}"]
    if engine:
        lines.append(f"# engine: {engine}")
    lines += [f"# note: {n}" for n in extra]
    lines.append(f"# config: {config.to_json()}")
    return "\n".join(lines) + "\n"


def _fmt(x):
    return repr(float(x))


def _csv(rows):
    return "".join(",".join(r) + "\n" for r in rows)


def _json_out(config, result, engine=None):
    meta = {"version": __version__, "command": config.command, "config": json.loads(config.to_json())}
    if engine:
        meta["engine"] = engine
    return json.dumps({"meta": meta, "result": result}, indent=2, sort_keys=True) + "\n"


def _grid(lo, hi, num):
    if not hi > lo:
        raise ConfigError("grid bounds must satisfy lam_min < lam_max")
    if num < 2:
        raise ConfigError("grid needs at least 2 points")
    return np.linspace(lo, hi, num)


def _map(fn, items, workers):
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _sweep_row(job):
    dcfg, lam, beta, engine = job
    domain = RingDomain.from_config(dcfg)
    if engine == "direct":
        S = assemble_full_s(domain, lam, beta).S
    else:
        S = smatrix(build_q(domain, None, lam), beta).S
    n = S.shape[0]
    row = [_fmt(lam)]
    row += [_fmt(abs(S[i, j]) ** 2) for i in range(n) for j in range(n)]
    row += [_fmt(np.angle(S[i, j])) for i in range(n) for j in range(n)]
    row.append(_fmt(unitarity_defect(S)))
    return row


def _near_pole(domain, lam, guard):
    try:
        check_regular(domain, lam, guard=guard)
    except NumericalError:
        return True
    return False


def cmd_eigen(config, p, domain, workers):
    if p["lam_max"] is None and not p["modes"]:
        raise ConfigError("eigen needs lam_max (or modes for a uniform ring)")
    if p["modes"]:
        if not domain.is_uniform:
            raise ConfigError("'modes' is only available for uniform rings; use lam_max")
        data = uniform_ring_eigendata(domain.circumference, domain.segments[0][2], p["modes"],
                                      domain.attachment_points)
    else:
        data = piecewise_ring_eigendata(domain, p["lam_max"])
    rows = [["index", "eigenvalue"] + [f"value_{i}" for i in range(domain.n_leads)]]
    rows += [[str(i), _fmt(e)] + [_fmt(v) for v in row] for i, (e, row) in enumerate(zip(data.eigenvalues, data.values))]
    return _header(config) + _csv(rows)


def cmd_green(config, p, domain, workers):
    rows = [["lambda", "s", "t", "value"]]
    pts = domain.attachment_points
    for lam in _grid(p["lam_min"], p["lam_max"], p["num"]):
        if _near_pole(domain, lam, p["pole_guard"]):
            continue
        G = green_matrix(domain, lam)
        for i, s in enumerate(pts):
            for j, t in enumerate(pts):
                rows.append([_fmt(lam), _fmt(s), _fmt(t), _fmt(G[i, j])])
    return _header(config) + _csv(rows)


def cmd_qmat(config, p, domain, workers):
    return _json_out(config, build_q(domain, None, p["lam"]).to_dict())


def cmd_resonance(config, p, domain, workers):
    lam0 = p["lam0"]
    data = default_eigendata(domain, lam0)
    return _json_out(config, resonance_data(domain, data, lam0).to_dict())


def cmd_smat(config, p, domain, workers):
    if p["engine"] == "direct":
        S = assemble_full_s(domain, p["lam"], p["beta"])
    else:
        S = smatrix(build_q(domain, None, p["lam"]), p["beta"])
    return _json_out(config, S.to_dict(), p["engine"])


def cmd_sweep(config, p, domain, workers):
    n = domain.n_leads
    names = ["lambda"] + [f"T_{i}{j}" for i in range(n) for j in range(n)]
    names += [f"phase_{i}{j}" for i in range(n) for j in range(n)] + ["unitarity_defect"]
    grid = [float(x) for x in _grid(p["lam_min"], p["lam_max"], p["num"])]
    if grid[0] <= 0:
        raise ConfigError("sweep needs lam_min > 0 (propagating lead modes)")
    jobs = [(domain.to_config(), lam, p["beta"], p["engine"]) for lam in grid
            if not _near_pole(domain, lam, p["pole_guard"])]
    rows = [names] + _map(_sweep_row, jobs, workers)
    return _header(config, p["engine"], ["unitarity defect is the Frobenius norm of S*S - I"]) + _csv(rows)


def _conductance_job(job):
    dcfg, beta, tau, mu, source, drain, engine = job
    domain = RingDomain.from_config(dcfg)
    return averaged_conductance(domain, beta, mu, tau, source, drain, engine)


def cmd_conductance(config, p, domain, workers):
    if p["betas"] is None or p["taus"] is None or p["mu"] is None:
        raise ConfigError("conductance needs betas, taus and mu")
    jobs = [(domain.to_config(), b, t, p["mu"], p["source"], p["drain"], p["engine"])
            for b in p["betas"] for t in p["taus"]]
    values = _map(_conductance_job, jobs, workers)
    rows = [["beta", "tau", "mu", "sigma"]]
    rows += [[_fmt(j[1]), _fmt(j[2]), _fmt(j[3]), _fmt(v)] for j, v in zip(jobs, values)]
    return _header(config, p["engine"]) + _csv(rows)


def _switch_spec(p, file_switch):
    presets = {"interference": interference_switch, "barrier": barrier_switch}
    if file_switch is not None:
        try:
            spec = SwitchSpec.from_config(file_switch)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"switch: {exc}")
    elif p["preset"] in presets:
        spec = presets[p["preset"]]()
    else:
        raise ConfigError(f"switch needs --preset {sorted(presets)} or a 'switch' block in --config")
    overrides = {k: p[k] for k in ("beta", "tau", "mu", "engine") if p[k] is not None}
    if overrides:
        spec = SwitchSpec(**{**spec.__dict__, **overrides})
    return spec


def cmd_switch(config, p, file_switch, workers):
    spec = _switch_spec(p, file_switch)
    report = switch_report(spec)
    if p["sweep_out"] and p["sweep_num"] >= 2:
        lo, hi = report.metadata["window"]
        curves = [TransmissionCurve(d, spec.beta, spec.source, spec.drain, spec.engine)
                  for d in (spec.open_domain, spec.closed_domain)]
        rows = [["lambda", "T_open", "T_closed"]]
        for lam in np.linspace(lo, hi, p["sweep_num"]):
            rows.append([_fmt(lam), _fmt(curves[0](lam)), _fmt(curves[1](lam))])
        with open(p["sweep_out"], "w") as fh:
            fh.write(_header(config, spec.engine, spec.notes) + _csv(rows))
    return _json_out(config, report.to_dict(), spec.engine)


HANDLERS = {
    "eigen": cmd_eigen, "green": cmd_green, "qmat": cmd_qmat, "resonance": cmd_resonance,
    "smat": cmd_smat, "sweep": cmd_sweep, "conductance": cmd_conductance,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="ringscatter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        if name != "switch":
            g = sp.add_argument_group("domain")
            g.add_argument("--domain", help="JSON domain file")
            g.add_argument("--domain-preset", choices=sorted(DOMAIN_PRESETS))
            g.add_argument("--circumference")
            g.add_argument("--potential")
            g.add_argument("--points", help="comma-separated attachment points, e.g. 0,pi/2")
        for pname in PARAMS[name]:
            flag = "--" + pname.replace("_", "-")
            sp.add_argument(flag, dest=pname, default=None)
    return parser


def run(argv=None, stdout=None):
    """Entry point; returns the process exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        file_cfg = RunConfig(args.command)
        file_switch = None
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}")
            raw = None
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
            if isinstance(raw, dict) and "switch" in raw:
                file_switch = raw.pop("switch")
                text = json.dumps(raw)
            file_cfg = RunConfig.from_json(text)
            if file_cfg.command not in (None, args.command):
                raise ConfigError(f"config is for command {file_cfg.command!r}, not {args.command!r}")
        cli_params = {k: getattr(args, k) for k in PARAMS[args.command]}
        params = resolve_params(args.command, file_cfg.params, cli_params)
        if args.command == "switch":
            config = RunConfig("switch", file_switch, params)
            text = cmd_switch(config, params, file_switch, args.workers)
        else:
            dcfg = _domain_config(args, file_cfg.domain)
            domain = _make_domain(dcfg)
            config = RunConfig(args.command, dcfg, params)
            text = HANDLERS[args.command](config, params, domain, max(1, args.workers))
    except ConfigError as exc:
        print(f"ringscatter {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, ValueError, IndexError) as exc:
        print(f"ringscatter {args.command}: numerical error: {exc}", file=sys.stderr)
        return 3
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
