"""Command-line experiment runner.

Every subcommand resolves its parameters as defaults < ``--config`` INI file
< ``--set key=value`` / explicit flags, echoes the resolved config into its
report and exits 0 when all checks pass, 1 on a failed check and 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import flows, kernels, reach, solver, suites
from ._backend import backend_name
from .models import DEFAULT_NAMES, get_model, list_models

GENERAL_KEYS = {"model": str, "seed": int, "format": str, "out": str}

DEFAULTS: dict[str, dict] = {
    "models": {},
    "verify": {"suite": "all"},
    "flow": {"omega": "", "s": 1.0, "z0": "", "method": "auto", "step": 1e-3},
    "reach": {"z0": "", "n_paths": 1000, "segments": 4, "omega_bound": 3.0, "horizon": 1.0},
    "martin": {"t_base": 0.0, "family": "exponential", "w1": "0", "w2": "0.3333333333333333",
               "k_list": "100,1000,10000", "points": "1,5,-1;0,0,-0.5;0.5,-1,-2;-1,2,-0.3;0.2,0.1,-1.5",
               "bound": 2e-2},
    "solve": {"n": 41, "half_width": 2.0, "u0": "extremal", "v": 0.5, "t_end": 0.25, "boundary": "exact"},
    "kernel": {"z": "", "zeta": "", "g": ""},
}

DEFAULT_MODEL = {"verify": "heisenberg_heat", "flow": "mumford", "reach": "mumford", "martin": "kolmogorov",
                 "solve": "kolmogorov", "kernel": "kolmogorov", "models": "heat"}


class ConfigError(ValueError):
    pass


def _vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from exc


def _cast(value, like, key: str):
    try:
        if isinstance(like, bool):
            return str(value).lower() in ("1", "true", "yes")
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read {value!r} as {type(like).__name__}") from exc
    return str(value)


def resolve_config(command: str, args) -> dict:
    cfg = {"model": DEFAULT_MODEL[command], "seed": 0, "format": "json", "out": ""}
    cfg.update(DEFAULTS[command])
    if args.config:
        parser = configparser.ConfigParser()
        try:
            with open(args.config) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        for section in parser.sections():
            allowed = GENERAL_KEYS if section == "general" else DEFAULTS.get(section)
            if allowed is None:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in allowed:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                if section in ("general", command):
                    like = cfg[key] if section == command else GENERAL_KEYS[key]()
                    cfg[key] = _cast(value, like, key)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in DEFAULTS[command]:
            raise ConfigError(f"unknown parameter {key!r} for {command}")
        cfg[key] = _cast(value, DEFAULTS[command][key], key)
    for key in ("model", "seed", "format", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "suite", None) is not None:
        cfg["suite"] = args.suite
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return cfg


def _model(cfg):
    try:
        return get_model(cfg["model"])
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


# --- formatting ---

def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def make_report(suite: str, cfg: dict, checks: list) -> dict:
    n_pass = sum(c.passed for c in checks)
    return {"suite": suite, "config": cfg, "checks": [c.as_dict() for c in checks],
            "summary": {"total": len(checks), "passed": n_pass, "failed": len(checks) - n_pass}}


def emit(report: dict, cfg: dict, table: tuple | None = None, extra: dict | None = None) -> int:
    """Print the report, write ``--out`` files and return the exit status."""
    if cfg["format"] == "json":
        sys.stdout.write(to_json(report))
    else:
        sys.stdout.write(to_csv(["name", "inputs_digest", "value", "threshold", "passed"],
                                [[c["name"], c["inputs_digest"], c["value"], c["threshold"], c["passed"]]
                                 for c in report["checks"]]))
    if cfg["out"]:
        os.makedirs(cfg["out"], exist_ok=True)
        solver.write_atomic(os.path.join(cfg["out"], "report.json"), to_json(report))
        if table is not None:
            solver.write_atomic(os.path.join(cfg["out"], "table.csv"), to_csv(*table))
        for name, text in (extra or {}).items():
            solver.write_atomic(os.path.join(cfg["out"], name), text)
    return 0 if report["summary"]["failed"] == 0 else 1


# --- subcommands ---

def cmd_models(cfg) -> int:
    rows = []
    for m in list_models():
        rows.append({"name": m.name, "N": m.N, "m": m.m, "group_law": m.law is not None,
                     "dilation": None if m.dilation is None else list(m.dilation.exponents),
                     "closed_form_exp": m.exp_closed_form is not None,
                     "attainable_oracle": m.attainable_oracle is not None, "kernel": m.kernel is not None,
                     "extremal_catalog": m.extremal_support is not None})
    if cfg["format"] == "json":
        sys.stdout.write(to_json(rows))
    else:
        keys = list(rows[0])
        sys.stdout.write(to_csv(keys, [[r[k] if r[k] is not None else "" for k in keys] for r in rows]))
    return 0


def cmd_verify(cfg) -> int:
    model = _model(cfg)
    if cfg["suite"] != "all" and cfg["suite"] not in suites.SUITES:
        raise ConfigError(f"unknown suite {cfg['suite']!r}; choose from all, {', '.join(suites.SUITES)}")
    checks = suites.run_suite(cfg["suite"], model, cfg["seed"])
    return emit(make_report(f"verify:{cfg['suite']}", cfg, checks), cfg)


def _point(cfg, key, model, default=None):
    z = _vector(cfg[key], key) if cfg[key] else (np.zeros(model.dim) if default is None else default)
    if z.shape != (model.dim,):
        raise ConfigError(f"{key} must have {model.dim} coordinates for {model.name}")
    return z


def cmd_flow(cfg) -> int:
    model = _model(cfg)
    z0 = _point(cfg, "z0", model)
    w = _vector(cfg["omega"], "omega") if cfg["omega"] else np.zeros(model.m)
    if w.shape != (model.m,):
        raise ConfigError(f"omega must have {model.m} entries")
    if cfg["s"] < 0:
        raise ConfigError("s must be >= 0")
    end = flows.exp_map(model, w, cfg["s"], z0, cfg["method"], cfg["step"])
    checks = [suites.check("time_coordinate", abs(end[-1] - (z0[-1] - cfg["s"])), 1e-12, ["t", cfg["s"]])]
    if model.exp_closed_form is not None:
        other = flows.exp_map(model, w, cfg["s"], z0, "rk4")
        ref = flows.exp_map(model, w, cfg["s"], z0, "closed")
        checks.append(suites.check("closed_form_vs_rk4", np.max(np.abs(other - ref)), 1e-8, [w, cfg["s"], z0]))
    if model.law is not None:
        checks.append(suites.check("right_translation", flows.right_translation_residual(model, w, cfg["s"], z0),
                                   1e-8, [w, cfg["s"], z0]))
    report = make_report("flow", cfg, checks)
    report["endpoint"] = end.tolist()
    table = (["coordinate", "start", "end"], [[c, a, b] for c, a, b in zip(list(model.coords) + ["t"], z0, end)])
    return emit(report, cfg, table)


def cmd_reach(cfg) -> int:
    model = _model(cfg)
    z0 = _point(cfg, "z0", model)
    try:
        cloud = reach.sample_attainable(model, z0, cfg["n_paths"], cfg["segments"], cfg["omega_bound"],
                                        cfg["horizon"], cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    margins = reach.margin(model, z0, cloud.endpoints)
    checks = [suites.check("dropped_paths", cloud.dropped, 0, [cfg["n_paths"], cfg["seed"]])]
    if margins is None:
        verdicts = ["unknown"] * len(cloud)
        margins = np.full(len(cloud), np.nan)
    else:
        verdicts = [reach.MembershipVerdict.from_margin(float(m)).verdict for m in margins]
        worst = -float(np.min(margins)) if len(margins) else 0.0
        checks.append(suites.check("soundness_min_slack", worst, 1e-6, [cfg["n_paths"], cfg["seed"], z0]))
    report = make_report("reach", cfg, checks)
    report["n_endpoints"] = len(cloud)
    header = ["path_id"] + list(model.coords) + ["t", "verdict", "margin"]
    rows = [[int(i)] + list(p) + [v, m] for i, p, v, m in zip(cloud.path_ids, cloud.endpoints, verdicts, margins)]
    return emit(report, cfg, (header, rows))


def _martin_sequence(cfg):
    w1, w2 = _vector(cfg["w1"], "w1"), _vector(cfg["w2"], "w2")
    fam = cfg["family"]
    if fam == "exponential":
        if w1.shape != w2.shape:
            raise ConfigError("w1 and w2 need equal length")
        return kernels.MartinSequence.exponential(w1, w2, cfg["t_base"]), kernels.martin_limit_predicted(w1, w2)
    zero = lambda z: np.zeros(np.shape(z)[:-1])  # noqa: E731
    if fam == "escaping":
        return kernels.MartinSequence.escaping(w1, -1.0, cfg["t_base"]), zero
    if fam == "bounded_tau":
        return kernels.MartinSequence.bounded_tau(w1, -1.0, cfg["t_base"]), zero
    raise ConfigError(f"unknown family {fam!r}")


def cmd_martin(cfg) -> int:
    seq, predicted = _martin_sequence(cfg)
    ks = [int(k) for k in _vector(cfg["k_list"], "k_list")]
    if len(ks) < 2 or ks != sorted(ks):
        raise ConfigError("k_list needs at least two increasing entries")
    pts = np.array([_vector(p, "points") for p in cfg["points"].split(";") if p.strip()])
    if pts.ndim != 2 or pts.shape[1] != 2 * seq.m + 1:
        raise ConfigError(f"points must have {2 * seq.m + 1} coordinates")
    rows, errs = [], []
    try:
        for k in ks:
            uk = kernels.martin_quotient(seq, k, pts)
            pred = predicted(pts)
            err = np.abs(uk - pred)
            errs.append(float(np.max(err)))
            rows += [[k] + list(z) + [a, b, e] for z, a, b, e in zip(pts, uk, pred, err)]
    except ValueError as exc:
        raise ConfigError(f"degenerate sequence: {exc}") from exc
    decreasing = all(b <= a for a, b in zip(errs, errs[1:]))
    checks = [suites.check("error_decreasing", 0 if decreasing else 1, 0, [cfg["family"], ks]),
              suites.check("final_error", errs[-1], cfg["bound"], [cfg["family"], ks[-1]])]
    report = make_report("martin", cfg, checks)
    report["max_error_by_k"] = dict(zip(map(str, ks), errs))
    report["fitted_rate"] = kernels.convergence_rate(ks, errs)
    m = seq.m
    coords = [f"x{i + 1}" for i in range(m)] + [f"y{i + 1}" for i in range(m)] if m > 1 else ["x", "y"]
    header = ["k"] + coords + ["t", "u_k", "predicted", "error"]
    return emit(report, cfg, (header, rows))


def cmd_solve(cfg) -> int:
    model = _model(cfg)
    if model.name not in ("heat", "kolmogorov", "grushin"):
        raise ConfigError(f"no grid solver for {model.name}")
    L, n = cfg["half_width"], cfg["n"]
    box = ((-L, L, n),) * 2
    if cfg["u0"] == "extremal":
        if model.extremal_support is None:
            raise ConfigError(f"{model.name} has no extremal catalog")
        alpha = np.zeros(model.N)
        alpha[0] = cfg["v"]
        exact = solver.extremal(model, alpha)
    elif cfg["u0"] == "constant":
        exact = lambda z: np.ones(np.shape(z)[:-1])  # noqa: E731
    else:
        raise ConfigError("u0 must be extremal or constant")
    if cfg["boundary"] not in ("exact", "trace"):
        raise ConfigError("boundary must be exact or trace")
    u0 = solver.GridField.from_function(box, exact)
    lim = solver.cfl_limit(model, u0)
    steps = max(1, math.ceil(cfg["t_end"] / lim - 1e-12))
    dt = cfg["t_end"] / steps
    devs, mins = [], []

    def watch(k, f):
        devs.append(solver.y_independence_deviation(f))
        mins.append(float(f.values.min()))

    u = solver.solve_cauchy(model, u0, dt, steps, boundary=exact if cfg["boundary"] == "exact" else None,
                            callback=watch)
    zz = np.concatenate([u.mesh(), np.full(u.values.shape + (1,), u.time)], axis=-1)
    mask = u.interior_mask(0.5)
    err = float(np.max(np.abs(u.values[mask] / exact(zz)[mask] - 1)))
    checks = [suites.check("interior_relative_error", err, 1e-3, [model.name, n, cfg["v"], cfg["t_end"]]),
              suites.check("nonnegativity", max(0.0, -min(mins)), 0.0, [n])]
    if model.name == "kolmogorov":
        checks.append(suites.check("y_independence", max(devs), 1e-10, [n, cfg["v"]]))
    report = make_report("solve", cfg, checks)
    report["steps"] = steps
    report["dt"] = dt
    return emit(report, cfg, extra={"grid.csv": u.to_csv()})


def cmd_kernel(cfg) -> int:
    model = _model(cfg)
    if model.name not in ("kolmogorov", "heat"):
        raise ConfigError(f"no kernel for {model.name}")
    dz = np.zeros(model.dim)
    dz[-1] = 1.0
    z = _point(cfg, "z", model, dz)
    zeta = _point(cfg, "zeta", model, np.zeros(model.dim))
    rng = np.random.default_rng(cfg["seed"])
    if model.name == "kolmogorov":
        m = model.m
        logv = kernels.kolmogorov_log_kernel(m, z, zeta)
        g = _point(cfg, "g", model, rng.uniform(-2, 2, model.dim))
        u = lambda p: np.exp(kernels.kolmogorov_log_kernel(m, p, zeta))  # noqa: E731
        checks = []
        if np.isfinite(logv):
            checks.append(suites.check("pde_residual", abs(kernels.pde_residual(model, u, z) / u(z)), 1e-4, [z, zeta]))
            checks.append(suites.check("invariance", kernels.kernel_invariance_residual(m, g, z, zeta), 1e-10,
                                       [g, z, zeta]))
        if m == 1:
            checks.append(suites.check("mass_vs_sqrt_2pi", abs(kernels.kolmogorov_mass() / math.sqrt(2 * math.pi) - 1),
                                       1e-2, ["mass"]))
    else:
        logv = kernels.heat_log_kernel(model.N, z, zeta)
        u = lambda p: np.exp(kernels.heat_log_kernel(model.N, p, zeta))  # noqa: E731
        checks = []
        if np.isfinite(logv):
            checks.append(suites.check("pde_residual", abs(kernels.pde_residual(model, u, z) / u(z)), 1e-6, [z, zeta]))
    report = make_report("kernel", cfg, checks)
    report["log_value"] = float(logv)
    report["value"] = float(np.exp(logv))
    return emit(report, cfg)


COMMANDS = {"models": cmd_models, "verify": cmd_verify, "flow": cmd_flow, "reach": cmd_reach, "martin": cmd_martin,
            "solve": cmd_solve, "kernel": cmd_kernel}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypocone", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s ({backend_name()} kernels)")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=COMMANDS[name].__doc__)
        sp.add_argument("--model", choices=DEFAULT_NAMES)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--config")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a subcommand parameter")
        sp.add_argument("--timing", action="store_true", help="report wall time on stderr")
        if name == "verify":
            sp.add_argument("--suite", help="all or one of: " + ", ".join(suites.SUITES))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = resolve_config(args.command, args)
        status = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"hypocone: config error: {exc}", file=sys.stderr)
        return 2
    if args.timing:
        print(f"wall time: {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
