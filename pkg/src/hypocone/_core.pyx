# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: batched RK4 for the builtin models and the explicit
finite-difference step. ``_fallback.py`` mirrors both in numpy."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, isfinite

cnp.import_array()

# builtin model codes; keep in sync with models.py
cdef enum:
    HEAT = 0
    HEISENBERG = 1
    KOLMOGOROV = 2
    MUMFORD = 3
    CMP = 4
    GRUSHIN = 5
    GRUSHIN_LIFTED = 6
    OU = 7
    LINKED = 8


cdef inline void rhs(int kind, int p, double kappa, int d, const double* z, const double* w, double* out) noexcept nogil:
    cdef int i
    out[d - 1] = -1.0
    if kind == HEAT:
        for i in range(p):
            out[i] = w[i]
    elif kind == HEISENBERG:
        out[0] = w[0]
        out[1] = w[1]
        out[2] = kappa * (z[0] * w[1] - z[1] * w[0])
    elif kind == KOLMOGOROV:
        for i in range(p):
            out[i] = w[i]
            out[p + i] = z[i]
    elif kind == MUMFORD:
        out[0] = w[0]
        out[1] = cos(z[0])
        out[2] = sin(z[0])
    elif kind == CMP:
        out[0] = w[0]
        out[1] = z[0] * z[0]
        out[2] = z[0]
    elif kind == GRUSHIN:
        out[0] = w[0]
        out[1] = w[1] * z[0]
    elif kind == GRUSHIN_LIFTED:
        out[0] = w[0]
        out[1] = w[1] * z[0]
        out[2] = w[1]
    elif kind == OU:
        for i in range(p):
            out[i] = w[i] + z[i]
    elif kind == LINKED:
        out[0] = w[0]
        out[1] = w[1]
        out[2] = w[0] * z[1] - w[1] * z[0]
        out[3] = z[0]


def rk4_segments(int kind, int ipar, double fpar, z0, omegas, durations, int substeps, bint record=False):
    """See ``_fallback.rk4_segments``; the field is selected by ``kind``."""
    z_arr = np.array(z0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] z = z_arr
    cdef const double[:, :, ::1] om = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef const double[:, ::1] dur = np.ascontiguousarray(durations, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0]
    cdef int d = <int>z.shape[1]
    if d > 32:
        raise ValueError("compiled core supports at most 32 coordinates")
    cdef Py_ssize_t S = dur.shape[1]
    cdef cnp.int64_t[::1] bad = np.full(n, -1, dtype=np.int64)
    traj_arr = np.empty((n, S * substeps + 1 if record else 1, d))
    cdef double[:, :, ::1] traj = traj_arr
    # per-path state lives on the stack
    cdef double zl[32]
    cdef double k1[32]
    cdef double k2[32]
    cdef double k3[32]
    cdef double k4[32]
    cdef double tmp[32]
    cdef const double* w
    cdef Py_ssize_t i, seg, it, kk, step
    cdef double h, h2, h6
    cdef bint ok
    with nogil:
        for i in range(n):
            for kk in range(d):
                zl[kk] = z[i, kk]
            step = 0
            if record:
                for kk in range(d):
                    traj[i, 0, kk] = zl[kk]
            for seg in range(S):
                h = dur[i, seg] / substeps
                h2 = 0.5 * h
                h6 = h / 6.0
                w = &om[i, seg, 0]
                for it in range(substeps):
                    rhs(kind, ipar, fpar, d, zl, w, k1)
                    for kk in range(d):
                        tmp[kk] = zl[kk] + h2 * k1[kk]
                    rhs(kind, ipar, fpar, d, tmp, w, k2)
                    for kk in range(d):
                        tmp[kk] = zl[kk] + h2 * k2[kk]
                    rhs(kind, ipar, fpar, d, tmp, w, k3)
                    for kk in range(d):
                        tmp[kk] = zl[kk] + h * k3[kk]
                    rhs(kind, ipar, fpar, d, tmp, w, k4)
                    for kk in range(d):
                        zl[kk] = zl[kk] + h6 * (k1[kk] + 2.0 * k2[kk] + 2.0 * k3[kk] + k4[kk])
                    if record:
                        step += 1
                        for kk in range(d):
                            traj[i, step, kk] = zl[kk]
                if bad[i] < 0:
                    ok = True
                    for kk in range(d):
                        if not isfinite(zl[kk]):
                            ok = False
                    if not ok:
                        bad[i] = seg
            for kk in range(d):
                z[i, kk] = zl[kk]
    if record:
        return z_arr, np.asarray(bad), traj_arr
    return z_arr, np.asarray(bad)


def fd_step(u_in, cyy_in, by_in, double hx, double hy, double dt, bint ychar):
    """See ``_fallback.fd_step``."""
    cdef const double[:, ::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef const double[::1] cyy = np.ascontiguousarray(cyy_in, dtype=np.float64)
    cdef const double[::1] by = np.ascontiguousarray(by_in, dtype=np.float64)
    new_arr = np.array(u, copy=True)
    cdef double[:, ::1] new = new_arr
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t i, j, j0, j1
    cdef double uxx, uyy, drift, up, dn, b, mid
    cdef double ihx2 = 1.0 / (hx * hx), ihy = 1.0 / hy, ihy2 = 1.0 / (hy * hy)
    j0 = 0 if ychar else 1
    j1 = ny if ychar else ny - 1
    with nogil:
        for i in range(1, nx - 1):
            b = by[i]
            for j in range(j0, j1):
                mid = u[i, j]
                up = u[i, j + 1] if j + 1 < ny else mid
                dn = u[i, j - 1] if j > 0 else mid
                uxx = (u[i + 1, j] - 2.0 * mid + u[i - 1, j]) * ihx2
                if b > 0:
                    drift = b * (up - mid) * ihy
                else:
                    drift = b * (mid - dn) * ihy
                if ychar:
                    new[i, j] = mid + dt * (uxx + drift)
                else:
                    uyy = (up - 2.0 * mid + dn) * ihy2
                    new[i, j] = mid + dt * (uxx + drift + cyy[i] * uyy)
    return new_arr
