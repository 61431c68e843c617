"""Pure numpy versions of the compiled kernels in ``_core.pyx``.

Signatures match the compiled ones except that the RK4 integrator takes the
model's vectorized right-hand side instead of a builtin-model code.
"""
from __future__ import annotations

import numpy as np


def rk4_segments(rhs, z0, omegas, durations, substeps: int, record: bool = False):
    """Integrate n paths of S constant-control segments each.

    z0: (n, d); omegas: (n, S, m); durations: (n, S), any sign (a negative
    duration runs the segment's flow backwards). Every segment is split into
    ``substeps`` equal RK4 steps. Returns ``(z, bad)`` or ``(z, bad, traj)``
    where ``bad[i]`` is the first segment at which path i went non-finite
    (-1 if never) and ``traj`` has shape (n, S*substeps + 1, d).
    """
    z = np.array(z0, dtype=float, copy=True)
    n, d = z.shape
    omegas = np.asarray(omegas, dtype=float)
    durations = np.asarray(durations, dtype=float)
    S = durations.shape[1]
    bad = np.full(n, -1, dtype=np.int64)
    traj = np.empty((n, S * substeps + 1, d)) if record else None
    if record:
        traj[:, 0] = z
    k = 1
    # divergence is reported through ``bad``, not as floating-point warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for seg in range(S):
            w = omegas[:, seg]
            h = (durations[:, seg] / substeps)[:, None]
            for _ in range(substeps):
                k1 = rhs(z, w)
                k2 = rhs(z + 0.5 * h * k1, w)
                k3 = rhs(z + 0.5 * h * k2, w)
                k4 = rhs(z + h * k3, w)
                z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if record:
                    traj[:, k] = z
                    k += 1
            newly = (bad < 0) & ~np.all(np.isfinite(z), axis=1)
            bad[newly] = seg
    if record:
        return z, bad, traj
    return z, bad


def fd_step(u, cyy, by, hx: float, hy: float, dt: float, ychar: bool):
    """One explicit step of ``u_t = u_xx + cyy(x) u_yy + by(x) u_y``.

    u: (nx, ny). Rows 0 and nx-1 are left untouched (Dirichlet, set by the
    caller). Columns 0 and ny-1 are also left untouched unless ``ychar``:
    then the y-direction is characteristic (no y-diffusion) and edge columns
    advance with the upwind stencil using a zero-gradient ghost node.
    """
    u = np.asarray(u, dtype=float)
    new = u.copy()
    up = np.concatenate([u[:, 1:], u[:, -1:]], axis=1)
    dn = np.concatenate([u[:, :1], u[:, :-1]], axis=1)
    uxx = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / hx**2
    b = np.asarray(by, dtype=float)[1:-1, None]
    c = np.asarray(cyy, dtype=float)[1:-1, None]
    mid = u[1:-1]
    drift = np.where(b > 0, b * (up[1:-1] - mid), b * (mid - dn[1:-1])) / hy
    incr = uxx + drift
    if not ychar:
        incr = incr + c * (up[1:-1] - 2.0 * mid + dn[1:-1]) / hy**2
        new[1:-1, 1:-1] = mid[:, 1:-1] + dt * incr[:, 1:-1]
    else:
        new[1:-1] = mid + dt * incr
    return new
