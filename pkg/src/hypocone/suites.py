"""Invariant suites run by ``hypocone verify``; each returns Check records."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import flows, kernels, reach, solver
from .fields import (bracket, hormander_rank, invariance_test_functions, left_invariance_residual,
                     minimal_hormander_order)
from .groups import automorphism_residual, scaled_residual
from .models import OperatorModel


@dataclass(frozen=True)
class Check:
    name: str
    inputs_digest: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def digest(inputs) -> str:
    blob = json.dumps(inputs, sort_keys=True, default=lambda a: np.asarray(a).tolist())
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def check(name: str, value: float, threshold: float, inputs, upper: bool = True) -> Check:
    value = float(value)
    ok = value <= threshold if upper else value >= threshold
    return Check(name, digest(inputs), value, float(threshold), bool(ok and math.isfinite(value)))


def _points(rng, model: OperatorModel, n: int, scale: float = 2.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(n, model.dim))


def groups_suite(model: OperatorModel, rng, n: int = 1000) -> list[Check]:
    law = model.law
    if law is None:
        return []
    a, b, c = (_points(rng, model, n, 10.0) for _ in range(3))
    e = law.identity
    out = [
        check("associativity", np.max(scaled_residual(law.compose(law.compose(a, b), c),
                                                      law.compose(a, law.compose(b, c)))), 1e-10, ["assoc", n]),
        check("left_identity", np.max(np.abs(law.compose(e, a) - a)), 1e-10, ["lid", n]),
        check("right_identity", np.max(np.abs(law.compose(a, e) - a)), 1e-10, ["rid", n]),
        check("right_inverse", np.max(scaled_residual(law.compose(a, law.inverse(a)), e)), 1e-10, ["rinv", n]),
        check("left_inverse", np.max(scaled_residual(law.compose(law.inverse(a), a), e)), 1e-10, ["linv", n]),
    ]
    if model.dilation is not None:
        rs = rng.uniform(0.2, 3.0, size=n)
        worst = max(float(np.max(scaled_residual(model.dilation.apply(r, law.compose(x, y)),
                                                 law.compose(model.dilation.apply(r, x), model.dilation.apply(r, y)))))
                    for r, x, y in zip(rs[:50], a[:50], b[:50]))
        out.append(check("dilation_automorphism", worst, 1e-10, ["dil", 50]))
        out.append(check("dilation_automorphism_r1", automorphism_residual(law, model.dilation, 1.0, a[0], b[0]),
                         0.0, ["dil1"]))
    if model.layers is not None:
        first = list(model.layers.first)
        ab = law.compose(a, b)
        out.append(check("first_layer_additive", np.max(np.abs(ab[:, first] - (a[:, first] + b[:, first]))), 0.0,
                         ["first", n]))
        last = np.zeros_like(a)
        last[:, list(model.layers.last)] = a[:, list(model.layers.last)]
        resid = max(np.max(np.abs(law.compose(last, b) - (last + b))), np.max(np.abs(law.compose(b, last) - (last + b))))
        out.append(check("last_layer_central", resid, 1e-12, ["last", n]))
    return out


def fields_suite(model: OperatorModel, rng, n: int = 100) -> list[Check]:
    pts = _points(rng, model, n)
    probe = np.concatenate([pts, np.where(np.arange(model.dim) == 0, 0.0, pts)])
    order = minimal_hormander_order(model, probe, max_order=4)
    out = [check("hormander_full_rank", 0 if order else 1, 0, ["horm", n])]
    if order and order > 1:
        below = np.asarray(hormander_rank(model, probe, order - 1))
        out.append(check("hormander_strict_below", int(np.min(below)), model.dim - 1, ["strict", n]))
    gens = list(model.lifted_generators) + [model.Y]
    X, Z, W = (gens * 3)[:3]
    jac = bracket(X, bracket(Z, W))(pts) + bracket(Z, bracket(W, X))(pts) + bracket(W, bracket(X, Z))(pts)
    out.append(check("jacobi_identity", np.max(np.abs(jac)), 1e-8, ["jacobi", n]))
    anti = max(np.max(np.abs(bracket(A, B)(pts) + bracket(B, A)(pts))) for A in gens for B in gens)
    out.append(check("bracket_antisymmetry", anti, 0.0, ["anti", n]))
    if model.law is not None:
        fam = invariance_test_functions(model.dim)
        worst = 0.0
        for j in range(0, model.m + 1):
            for zeta, z in zip(pts[:10], _points(rng, model, 10, 1.0)):
                for f in fam.values():
                    r = left_invariance_residual(model, j, zeta, z, f)
                    worst = max(worst, r / (1 + abs(f(model.law.compose(zeta, z)))))
        out.append(check("left_invariance", worst, 1e-5, ["linv", 10]))
    return out


def flows_suite(model: OperatorModel, rng, n: int = 100) -> list[Check]:
    z = _points(rng, model, n, 1.0)
    w = rng.uniform(-1.5, 1.5, size=(n, model.m))
    s1, s2 = rng.uniform(0, 1, n), rng.uniform(0, 1, n)
    out = []
    if model.exp_closed_form is not None:
        s = rng.uniform(0, 2, n)
        diff = np.max(np.abs(flows.exp_map(model, w, s, z, "closed") - flows.exp_map(model, w, s, z, "rk4")))
        out.append(check("closed_form_vs_rk4", diff, 1e-8, ["cf", n]))
    semi = np.max(np.abs(flows.exp_map(model, w, s1 + s2, z)
                         - flows.exp_map(model, w, s2, flows.exp_map(model, w, s1, z))))
    out.append(check("semigroup", semi, 1e-8, ["semi", n]))
    if model.law is not None:
        worst = max(flows.right_translation_residual(model, w[i], s1[i], z[i]) for i in range(min(n, 20)))
        out.append(check("right_translation", worst, 1e-8, ["rt", 20]))
    sched = flows.ControlSchedule(tuple((0.25, tuple(map(float, wi))) for wi in w[:4]))
    path = flows.integrate_admissible(model, sched, z[0], step=1e-3)
    out.append(check("time_normalization", abs(path.end[-1] - (z[0, -1] - sched.total_duration)), 1e-12, ["tn"]))
    return out


def loops_suite(model: OperatorModel, rng, n: int = 50) -> list[Check]:
    out = []
    if model.name == "heisenberg_heat":
        origin = flows.heisenberg_loop(1.0, 1.0, np.zeros(4), model)
        out.append(check("heisenberg_loop_origin", np.max(np.abs(origin - [0, 0, 1, -4])), 1e-10, ["hl0"]))
        c, s = rng.uniform(-2, 2, n), rng.uniform(0.1, 2, n)
        z = _points(rng, model, n)
        expect = z + np.stack([0 * c, 0 * c, c**2 * s**2, -4 * s], axis=-1)
        out.append(check("heisenberg_loop", np.max(np.abs(flows.heisenberg_loop(c, s, z, model, "rk4") - expect)),
                         1e-8, ["hl", n]))
    if model.name == "mumford":
        s = rng.uniform(0.2, 2, n)
        z = _points(rng, model, n)
        fwd = z + np.stack([2 * np.pi + 0 * s, 0 * s, 0 * s, -s], axis=-1)
        rt = z + np.stack([0 * s, 0 * s, 0 * s, -2 * s], axis=-1)
        out.append(check("mumford_forward_leg", np.max(np.abs(flows.mumford_forward_leg(s, z, model) - fwd)), 1e-8,
                         ["mf", n]))
        out.append(check("mumford_round_trip", np.max(np.abs(flows.mumford_loop(s, z, model) - rt)), 1e-8,
                         ["mr", n]))
    z0 = _points(rng, model, 1, 0.5)[0]
    for j in range(0, model.m + 1):
        for k in range(j + 1, model.m + 1):
            # the O(s) constant is model dependent; the rate check below is the real test
            r1 = flows.bch_loop_residual(model, j, k, 2e-2, z0)
            r2 = flows.bch_loop_residual(model, j, k, 1e-2, z0)
            out.append(check(f"bch_{j}{k}", r2, 5e-2, ["bch", j, k]))
            if r1 > 1e-9:
                out.append(check(f"bch_{j}{k}_rate", r1 / r2, 1.5, ["bchrate", j, k], upper=False))
    return out


def reach_suite(model: OperatorModel, rng, n: int = 2000) -> list[Check]:
    if model.attainable_oracle is None:
        return []
    seed = int(rng.integers(2**31))
    cloud = reach.sample_attainable(model, model.law.identity, n, 4, 3.0, 1.0, seed)
    margins = reach.margin(model, model.law.identity, cloud.endpoints)
    out = [check("soundness_min_slack", -np.min(margins) if len(margins) else 0.0, 1e-6, ["sound", n, seed]),
           check("dropped_paths", cloud.dropped, 0, ["drop", n, seed])]
    if model.name == "cmp":
        z0 = np.array([1.0, 0, 0, 0])
        z = flows.exp_map(model, [0.0], 1.0, z0)
        v = reach.membership(model, z0, z)
        out.append(check("cmp_drift_point_boundary", abs(v.margin), 1e-9, ["cmpb"]))
    return out


def kernel_suite(model: OperatorModel, rng, n: int = 100) -> list[Check]:
    out = []
    if model.name == "kolmogorov":
        m = model.m
        z = np.concatenate([rng.uniform(-1, 1, (n, m)), rng.uniform(-0.5, 0.5, (n, m)), rng.uniform(0.5, 1.5, (n, 1))],
                           axis=1)
        zeta = np.zeros(2 * m + 1)
        u = lambda p: np.exp(kernels.kolmogorov_log_kernel(m, p, zeta))  # noqa: E731
        out.append(check("kernel_pde_residual", np.max(np.abs(kernels.pde_residual(model, u, z) / u(z))), 1e-4,
                         ["kres", n]))
        g = rng.uniform(-2, 2, 2 * m + 1)
        out.append(check("kernel_invariance", kernels.kernel_invariance_residual(m, g, z[:10], zeta), 1e-10,
                         ["kinv", g]))
        if m == 1:
            out.append(check("kernel_mass_vs_sqrt_2pi", abs(kernels.kolmogorov_mass() / math.sqrt(2 * math.pi) - 1),
                             1e-2, ["kmass"]))
    if model.name == "heat":
        z = np.concatenate([rng.uniform(-1, 1, (n, model.N)), rng.uniform(0.5, 1.5, (n, 1))], axis=1)
        zeta = np.zeros(model.dim)
        u = lambda p: np.exp(kernels.heat_log_kernel(model.N, p, zeta))  # noqa: E731
        out.append(check("heat_kernel_pde_residual", np.max(np.abs(kernels.pde_residual(model, u, z) / u(z))), 1e-6,
                         ["hres", n]))
        out.append(check("heat_mass", abs(kernels.heat_mass() - 1), 1e-6, ["hmass"]))
    return out


def solver_suite(model: OperatorModel, rng, n: int = 41) -> list[Check]:
    if model.name not in ("heat", "kolmogorov", "grushin") or model.N > 2 or (model.name == "kolmogorov" and model.m != 1):
        return []
    box = ((-2.0, 2.0, n),) * (model.N if model.name != "kolmogorov" else 2)
    ones = solver.GridField(box, np.ones(tuple(b[2] for b in box)))
    dt = solver.cfl_limit(model, ones)
    const = solver.solve_cauchy(model, ones, dt, 50)
    out = [check("constant_preserved", np.max(np.abs(const.values - 1)), 0.0, ["const", n])]
    bump = solver.GridField.from_function(box, lambda z: np.exp(-np.sum(z[..., :-1] ** 2, axis=-1) * 2))
    mins = []
    solver.solve_cauchy(model, bump, dt, 50, callback=lambda k, f: mins.append(f.values.min()))
    out.append(check("nonnegativity", -min(mins), 0.0, ["nonneg", n]))
    if model.name == "kolmogorov":
        v = 0.5
        ex = solver.extremal(model, [v, 0.0])
        u0 = solver.GridField.from_function(box, ex)
        steps = math.ceil(0.25 / dt)
        devs = []
        u = solver.solve_cauchy(model, u0, 0.25 / steps, steps, boundary=ex,
                                callback=lambda k, f: devs.append(solver.y_independence_deviation(f)))
        mask = u.interior_mask(0.5)
        zz = np.concatenate([u.mesh(), np.full(u.values.shape + (1,), u.time)], axis=-1)
        err = np.max(np.abs(u.values[mask] / ex(zz)[mask] - 1))
        out.append(check("extremal_interior_error", err, 1e-3, ["kext", n]))
        out.append(check("y_independence", max(devs), 1e-10, ["yind", n]))
    return out


def separation_suite(model: OperatorModel, rng, n: int = 100) -> list[Check]:
    out = []
    if model.extremal_support is not None:
        alpha = np.zeros(model.N)
        alpha[list(model.extremal_support)] = rng.uniform(-1, 1, len(model.extremal_support))
        u = solver.extremal(model, alpha)
        s = 0.7
        z = _points(rng, model, n)
        mean, dev = flows.separation_ratio(model, u, np.zeros(model.m), s, z)
        out.append(check("separation_constant", dev / mean, 1e-12, ["sep", alpha]))
        out.append(check("separation_beta", abs(mean / math.exp(-s * u.beta) - 1), 1e-12, ["sepb", alpha]))
        out.append(check("extremal_pde_residual", np.max(np.abs(kernels.pde_residual(model, u, z) / u(z))), 1e-6,
                         ["exres", alpha]))
    if model.name == "ou":
        z = np.column_stack([rng.uniform(-2, 2, n), rng.uniform(-1, 1, n)])
        worst = 0.0
        for lam in (-1.0, 0.5, 1.0):
            f = lambda p: kernels.ou_minimal(lam, p[..., 0], p[..., 1])  # noqa: E731
            worst = max(worst, float(np.max(np.abs(kernels.pde_residual(model, f, z) / f(z)))))
        out.append(check("ou_minimal_pde_residual", worst, 1e-6, ["ou", n]))
    return out


SUITES: dict[str, Callable] = {
    "groups": groups_suite, "fields": fields_suite, "flows": flows_suite, "loops": loops_suite,
    "reach": reach_suite, "kernel": kernel_suite, "solver": solver_suite, "separation": separation_suite,
}


def run_suite(name: str, model: OperatorModel, seed: int) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for nm in names:
        if nm not in SUITES:
            raise KeyError(f"unknown suite {nm!r}")
        rng = np.random.default_rng([seed, list(SUITES).index(nm)])
        out += [Check(f"{nm}.{c.name}", c.inputs_digest, c.value, c.threshold, c.passed)
                for c in SUITES[nm](model, rng)]
    return out
