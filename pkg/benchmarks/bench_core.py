"""Compiled core vs numpy fallback on the two hot loops.

    python3 benchmarks/bench_core.py [--paths 10000] [--grid 161]
"""
import argparse
import time

import numpy as np

from hypocone import _backend, get_model
from hypocone.solver import GridField, cfl_limit


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_rk4(model, n_paths, segments, substeps, repeat):
    rng = np.random.default_rng(0)
    z0 = np.zeros((n_paths, model.dim))
    om = rng.uniform(-3, 3, (n_paths, segments, model.m))
    dur = rng.uniform(0, 0.25, (n_paths, segments))
    tc, (zc, _) = best_of(lambda: _backend.rk4_segments(model, z0, om, dur, substeps), repeat)
    tp, (zp, _) = best_of(lambda: _backend.rk4_segments(model, z0, om, dur, substeps, pure=True), repeat)
    return tc, tp, float(np.max(np.abs(zc - zp)))


def bench_fd(n, steps, repeat):
    model = get_model("kolmogorov")
    u0 = GridField.from_function(((-2, 2, n), (-2, 2, n)), lambda z: np.exp(0.5 * z[..., 0]))
    x = u0.axes[0]
    dt = cfl_limit(model, u0)
    hx, hy = u0.spacing

    def run(pure):
        u = u0.values
        for _ in range(steps):
            u = _backend.fd_step(u, np.zeros_like(x), x, hx, hy, dt, True, pure=pure)
        return u

    tc, uc = best_of(lambda: run(False), repeat)
    tp, up = best_of(lambda: run(True), repeat)
    return tc, tp, float(np.max(np.abs(uc - up)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=10000)
    ap.add_argument("--grid", type=int, default=161)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _backend.HAVE_CORE:
        raise SystemExit("compiled core not built; reinstall with Cython available")
    print(f"{'kernel':<34}{'cython [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name in ("mumford", "cmp", "heisenberg_heat"):
        tc, tp, d = bench_rk4(get_model(name), args.paths, 4, 250, args.repeat)
        print(f"{'rk4 ' + name + f' ({args.paths} paths)':<34}{tc:>12.3f}{tp:>12.3f}{tp / tc:>10.1f}{d:>12.1e}")
    tc, tp, d = bench_fd(args.grid, 200, args.repeat)
    print(f"{f'fd_step kolmogorov {args.grid}^2 x200':<34}{tc:>12.3f}{tp:>12.3f}{tp / tc:>10.1f}{d:>12.1e}")


if __name__ == "__main__":
    main()
