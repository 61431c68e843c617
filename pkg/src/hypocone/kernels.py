"""Fundamental solutions, minimal solutions and Martin quotients.

Kernel arithmetic happens in log-space; a vanishing kernel has
``log_value = -inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .fields import OperatorModel, VectorField
from .groups import kolmogorov_law

PDE_STEP = 1e-3
HOMOGENEITY_RADII = (0.5, 2.0, 3.0)
TAIL = 1e-12


@dataclass(frozen=True)
class KernelValue:
    log_value: np.ndarray | float

    @property
    def value(self):
        return np.exp(self.log_value)

    def __float__(self):
        return float(self.value)


def _split(z, m: int):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 2 * m + 1:
        raise ValueError(f"Kolmogorov points for m={m} have {2 * m + 1} coordinates")
    return z[..., :m], z[..., m:2 * m], z[..., -1]


def kolmogorov_log_kernel(m: int, z, zeta) -> np.ndarray:
    """``log Gamma(z, zeta)`` for ``d_t - Laplace_x - x . grad_y``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    x, y, t = _split(z, m)
    xi, eta, tau = _split(zeta, m)
    d = t - tau
    pos = d > 0
    ds = np.where(pos, d, 1.0)
    q1 = np.sum((x - xi) ** 2, axis=-1) / (4.0 * ds)
    q2 = 3.0 * np.sum((y - eta + 0.5 * ds[..., None] * (x + xi)) ** 2, axis=-1) / ds**3
    logk = 0.5 * m * math.log(3.0 / (2.0 * math.pi)) - 2.0 * m * np.log(ds) - q1 - q2
    out = np.where(pos, logk, -np.inf)
    return out[()] if out.ndim == 0 else out


def kolmogorov_kernel(m: int, z, zeta) -> KernelValue:
    return KernelValue(kolmogorov_log_kernel(m, z, zeta))


def heat_log_kernel(N: int, z, zeta) -> np.ndarray:
    """Log of the Gaussian kernel of ``d_t - Laplace`` on R^N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    z = np.asarray(z, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    d = z[..., -1] - zeta[..., -1]
    pos = d > 0
    ds = np.where(pos, d, 1.0)
    logk = -0.5 * N * np.log(4.0 * np.pi * ds) - np.sum((z[..., :N] - zeta[..., :N]) ** 2, axis=-1) / (4.0 * ds)
    out = np.where(pos, logk, -np.inf)
    return out[()] if out.ndim == 0 else out


def heat_kernel(N: int, z, zeta) -> KernelValue:
    return KernelValue(heat_log_kernel(N, z, zeta))


def ou_minimal(lam: float, x, t):
    """Minimal positive solution ``exp(lam^2 e^{2t} - sqrt(2) lam x e^t)`` of
    ``u_t = u_xx + x u_x``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.exp(lam**2 * np.exp(2.0 * t) - math.sqrt(2.0) * lam * x * np.exp(t))


def _field_flow(X: VectorField, z: np.ndarray, h: float, substeps: int = 4) -> np.ndarray:
    dt = h / substeps
    for _ in range(substeps):
        k1 = X(z)
        k2 = X(z + 0.5 * dt * k1)
        k3 = X(z + 0.5 * dt * k2)
        k4 = X(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def _raw_residual(model: OperatorModel, u: Callable, z: np.ndarray, h: float) -> np.ndarray:
    u0 = np.asarray(u(z), dtype=float)
    et = np.zeros(model.dim)
    et[-1] = 1.0
    res = (u(z + h * et) - u(z - h * et)) / (2.0 * h)
    for X in model.lifted_generators:
        res = res - (u(_field_flow(X, z, h)) - 2.0 * u0 + u(_field_flow(X, z, -h))) / h**2
    b0 = model.lift(model.drift_x0)(z)
    return res - (u(z + h * b0) - u(z - h * b0)) / (2.0 * h)


def pde_residual(model: OperatorModel, u: Callable, z, h: float = PDE_STEP, richardson: bool = True):
    """``d_t u - sum X_j^2 u - X_0 u`` at z by finite differences.

    ``X_j^2 u`` is the second difference along the RK4 flow of X_j; ``d_t``
    and ``X_0`` use central differences. All stencils are even in h, so one
    Richardson step on ``(h, h/2)`` lifts the truncation error to O(h^4).
    """
    z = np.asarray(z, dtype=float)
    res = _raw_residual(model, u, z, h)
    if richardson:
        res = (4.0 * _raw_residual(model, u, z, h / 2) - res) / 3.0
    res = np.asarray(res, dtype=float)
    if not np.all(np.isfinite(res)):
        raise FloatingPointError("non-finite PDE residual")
    return res[()] if res.ndim == 0 else res


def kolmogorov_dilation(m: int, r: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    scale = np.concatenate([np.full(m, r), np.full(m, r**3), [r**2]])
    return z * scale


def kernel_invariance_residual(m: int, g, z, zeta, radii: Sequence[float] = HOMOGENEITY_RADII) -> float:
    """Worst relative defect of ``Gamma(g o z, g o zeta) = Gamma(z, zeta)`` and
    ``r^{4m} Gamma(delta_r z, delta_r zeta) = Gamma(z, zeta)`` over ``radii``."""
    law = kolmogorov_law(m)
    base = kolmogorov_log_kernel(m, z, zeta)
    if not np.all(np.isfinite(base)):
        raise ValueError("needs t > tau")
    moved = kolmogorov_log_kernel(m, law.compose(g, z), law.compose(g, zeta))
    worst = float(np.max(np.abs(np.expm1(moved - base))))
    for r in radii:
        scaled = kolmogorov_log_kernel(m, kolmogorov_dilation(m, r, z), kolmogorov_dilation(m, r, zeta))
        worst = max(worst, float(np.max(np.abs(np.expm1(4 * m * math.log(r) + scaled - base)))))
    return worst


# --- quadrature oracles (m = 1 / N = 1) ---

def _gauss_halfwidth(var: float) -> float:
    # exp(-u^2 / (2 var)) < TAIL beyond this
    return math.sqrt(-2.0 * var * math.log(TAIL))


def kolmogorov_mass(d: float = 1.0) -> float:
    """``int Gamma((x, y, d), 0) dx dy`` for m = 1 by adaptive quadrature."""
    zeta = np.zeros(3)
    Lx = _gauss_halfwidth(2.0 * d)
    Ly = _gauss_halfwidth(d**3 / 6.0)

    def f(y, x):
        return math.exp(kolmogorov_log_kernel(1, np.array([x, y, d]), zeta))

    val, _ = integrate.dblquad(f, -Lx, Lx, lambda x: -0.5 * d * x - Ly, lambda x: -0.5 * d * x + Ly,
                               epsabs=0, epsrel=1e-10)
    return val


def heat_mass(d: float = 1.0) -> float:
    L = _gauss_halfwidth(2.0 * d)
    val, _ = integrate.quad(lambda x: math.exp(heat_log_kernel(1, np.array([x, d]), np.zeros(2))), -L, L,
                            epsabs=0, epsrel=1e-12)
    return val


def chapman_kolmogorov_ratio(z, s: float, zeta) -> float:
    """``int Gamma(z, (x', y', s)) Gamma((x', y', s), zeta) dx' dy' / Gamma(z, zeta)``
    for m = 1 and ``tau < s < t``; a single constant for a consistent kernel."""
    z = np.asarray(z, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if not zeta[2] < s < z[2]:
        raise ValueError("need tau < s < t")
    a = s - zeta[2]
    Lx = _gauss_halfwidth(2.0 * a)
    Ly = _gauss_halfwidth(a**3 / 6.0)
    xi, eta = zeta[0], zeta[1]

    def f(y, x):
        w = np.array([x, y, s])
        return math.exp(kolmogorov_log_kernel(1, z, w) + kolmogorov_log_kernel(1, w, zeta))

    def centre(x):
        return eta - 0.5 * a * (x + xi)

    val, _ = integrate.dblquad(f, xi - Lx, xi + Lx, lambda x: centre(x) - Ly, lambda x: centre(x) + Ly,
                               epsabs=0, epsrel=1e-8)
    return val / math.exp(kolmogorov_log_kernel(1, z, zeta))


# --- Martin quotients ---

@dataclass(frozen=True)
class MartinSequence:
    """``k -> (xi_k, eta_k, tau_k)`` normalised at the base point ``(0, 0, T)``."""

    generator: Callable[[int], tuple[np.ndarray, np.ndarray, float]]
    T: float = 0.0
    m: int = 1
    label: str = ""

    def __call__(self, k: int):
        xi, eta, tau = self.generator(k)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if xi.shape != (self.m,) or eta.shape != (self.m,):
            raise ValueError(f"sequence entries must lie in R^{self.m}")
        tau = float(tau)
        if not tau < self.T:
            raise ValueError(f"tau_k = {tau} must stay below T = {self.T}")
        return xi, eta, tau

    def pole(self, k: int) -> np.ndarray:
        xi, eta, tau = self(k)
        return np.concatenate([xi, eta, [tau]])

    @classmethod
    def exponential(cls, w1, w2, T: float = 0.0) -> "MartinSequence":
        """``(2k w1, k^2 w2, -k)``; its limit is ``exp(<x,v> + t|v|^2)``, ``v = 3 w2 - 2 w1``."""
        w1 = np.atleast_1d(np.asarray(w1, dtype=float))
        w2 = np.atleast_1d(np.asarray(w2, dtype=float))
        return cls(lambda k: (2.0 * k * w1, k**2 * w2, -float(k)), T, len(w1), "exponential")

    @classmethod
    def escaping(cls, w, tau: float = -1.0, T: float = 0.0) -> "MartinSequence":
        """``(k w, 0, tau)``: the quotients die out."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        return cls(lambda k: (k * w, np.zeros_like(w), tau), T, len(w), "escaping")

    @classmethod
    def bounded_tau(cls, w, tau_limit: float = -1.0, T: float = 0.0) -> "MartinSequence":
        """``(k w, 0, tau_limit - 1/k)``: bounded poles in time."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        return cls(lambda k: (k * w, np.zeros_like(w), tau_limit - 1.0 / k), T, len(w), "bounded_tau")


def martin_log_quotient(seq: MartinSequence, k: int, z):
    pole = seq.pole(k)
    base = np.zeros(2 * seq.m + 1)
    base[-1] = seq.T
    den = kolmogorov_log_kernel(seq.m, base, pole)
    if not np.isfinite(den):
        raise ZeroDivisionError("Martin quotient denominator vanishes")
    return kolmogorov_log_kernel(seq.m, z, pole) - den


def martin_quotient(seq: MartinSequence, k: int, z):
    """``Gamma(z, zeta_k) / Gamma((0, 0, T), zeta_k)``, as a log difference."""
    return np.exp(martin_log_quotient(seq, k, z))


def martin_limit_predicted(w1, w2) -> Callable:
    """``(x, y, t) -> exp(<x, v> + t |v|^2)`` with ``v = 3 w2 - 2 w1``."""
    v = 3.0 * np.atleast_1d(np.asarray(w2, dtype=float)) - 2.0 * np.atleast_1d(np.asarray(w1, dtype=float))
    return kolmogorov_extremal(v)


def kolmogorov_extremal(v) -> Callable:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    m = len(v)

    def u(z):
        z = np.asarray(z, dtype=float)
        return np.exp(z[..., :m] @ v + z[..., -1] * (v @ v))

    return u


def normalized_sequence(seq: MartinSequence, k: int):
    """``(xi_k / -tau_k, eta_k / tau_k^2, 3 eta~ - xi~)``."""
    xi, eta, tau = seq(k)
    if tau >= 0:
        raise ValueError("normalisation needs tau_k < 0")
    xt = xi / -tau
    et = eta / tau**2
    return xt, et, 3.0 * et - xt


def convergence_rate(ks: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log error`` against ``log k``."""
    ks = np.asarray(ks, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if np.any(errors <= 0):
        return float("-inf")
    return float(np.polyfit(np.log(ks), np.log(errors), 1)[0])
