"""Admissible paths, constant-control exponentials and flow identities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .fields import OperatorModel, bracket

DEFAULT_STEP = 1e-3
MIN_SUBSTEPS = 100


class IntegrationError(RuntimeError):
    """A path left the finite floats; ``s`` is where it was first seen."""

    def __init__(self, message: str, s: float):
        super().__init__(message)
        self.s = s


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant control: ordered ``(duration, omega)`` segments."""

    segments: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a control schedule needs at least one segment")
        for dur, _ in self.segments:
            if not (math.isfinite(dur) and dur > 0):
                raise ValueError(f"segment durations must be positive and finite, got {dur}")

    @classmethod
    def constant(cls, omega: Sequence[float], duration: float) -> "ControlSchedule":
        return cls(((float(duration), tuple(float(w) for w in omega)),))

    @property
    def total_duration(self) -> float:
        return math.fsum(d for d, _ in self.segments)


@dataclass(frozen=True)
class Path:
    s: np.ndarray
    points: np.ndarray
    step: float

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def _omega_array(model: OperatorModel, omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if w.ndim == 0:
        w = w[None]
    if w.shape[-1] != model.m:
        raise ValueError(f"{model.name} takes controls in R^{model.m}")
    return w


def integrate_admissible(model: OperatorModel, control: ControlSchedule, z0, step: float = DEFAULT_STEP) -> Path:
    """RK4 solution of ``g' = sum omega_j(s) X_j(g) + Y(g)``, restarting at
    every segment boundary."""
    shortest = min(d for d, _ in control.segments)
    if not 0 < step <= shortest:
        raise ValueError(f"step {step} must lie in (0, {shortest}] (shortest segment)")
    z = np.asarray(z0, dtype=float).reshape(1, model.dim)
    t0 = z[0, -1]
    s_parts, p_parts = [np.zeros(1)], [z.copy()]
    elapsed = 0.0
    for dur, omega in control.segments:
        n = max(1, math.ceil(dur / step - 1e-12))
        w = _omega_array(model, omega).reshape(1, 1, model.m)
        z, bad, traj = _backend.rk4_segments(model, z, w, np.array([[dur]]), n, record=True)
        if bad[0] >= 0 or not np.all(np.isfinite(traj)):
            k = int(np.argmax(~np.all(np.isfinite(traj[0]), axis=1)))
            raise IntegrationError(f"{model.name}: path blew up", elapsed + k * dur / n)
        s_parts.append(elapsed + dur * np.arange(1, n + 1) / n)
        p_parts.append(traj[0, 1:])
        elapsed += dur
    points = np.concatenate(p_parts)
    s = np.concatenate(s_parts)
    # the time coordinate obeys t' = -1 exactly
    points[:, -1] = t0 - s
    return Path(s=s, points=points, step=step)


def _flow(model: OperatorModel, omega, s, z0, method: str = "auto", step: float = DEFAULT_STEP) -> np.ndarray:
    """Signed-time flow of the constant-control field ``omega . X + Y``."""
    w = _omega_array(model, omega)
    z0 = np.asarray(z0, dtype=float)
    s = np.asarray(s, dtype=float)
    shape = np.broadcast_shapes(w.shape[:-1], s.shape, z0.shape[:-1])
    if method == "auto":
        method = "closed" if model.exp_closed_form is not None else "rk4"
    if method == "closed":
        if model.exp_closed_form is None:
            raise ValueError(f"{model.name} has no closed-form exponential")
        out = model.exp_closed_form(np.broadcast_to(w, shape + (model.m,)), np.broadcast_to(s, shape),
                                    np.broadcast_to(z0, shape + (model.dim,)))
    elif method == "rk4":
        W = np.broadcast_to(w, shape + (model.m,)).reshape(-1, 1, model.m)
        Sv = np.broadcast_to(s, shape).reshape(-1, 1)
        Z = np.broadcast_to(z0, shape + (model.dim,)).reshape(-1, model.dim)
        smax = float(np.max(np.abs(Sv))) if Sv.size else 0.0
        n = max(MIN_SUBSTEPS, math.ceil(smax / step - 1e-9))
        Z1, bad = _backend.rk4_segments(model, Z, W, Sv, n)
        if np.any(bad >= 0):
            raise IntegrationError(f"{model.name}: flow blew up", float(Sv[np.argmax(bad >= 0), 0]))
        out = Z1.reshape(shape + (model.dim,))
        out[..., -1] = np.broadcast_to(z0[..., -1], shape) - np.broadcast_to(s, shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.where((np.broadcast_to(s, shape) == 0)[..., None], np.broadcast_to(z0, shape + (model.dim,)), out)


def exp_map(model: OperatorModel, omega, s, z0, method: str = "auto", step: float = DEFAULT_STEP) -> np.ndarray:
    """``exp(s (omega . X + Y)) z0``; broadcasts over leading axes.

    ``method`` is ``"closed"``, ``"rk4"`` or ``"auto"`` (closed form when the
    model has one). RK4 uses steps no longer than ``min(step, s/100)``.
    """
    if np.any(np.asarray(s) < 0):
        raise ValueError("exp_map needs s >= 0")
    return _flow(model, omega, s, z0, method, step)


def right_translation_residual(model: OperatorModel, omega, s, z0, method: str = "auto") -> float:
    """``|exp(s(wX+Y)) z0 - z0 o exp(s(wX+Y)) 0|`` in the sup norm."""
    lhs = exp_map(model, omega, s, z0, method)
    rhs = model.law.compose(z0, exp_map(model, omega, s, model.law.identity, method))
    return float(np.max(np.abs(lhs - rhs)))


def _builtin(name: str) -> OperatorModel:
    from .models import get_model

    return get_model(name)


def heisenberg_loop(c, s, z0, model: OperatorModel | None = None, method: str = "auto") -> np.ndarray:
    """Endpoint of the legs ``cX1, cX2, -cX1, -cX2`` (each with the drift
    ``-d_t`` and duration s), applied in that order."""
    model = model or _builtin("heisenberg_heat")
    c = np.asarray(c, dtype=float)
    z = np.asarray(z0, dtype=float)
    zero = np.zeros_like(c)
    for w in ((c, zero), (zero, c), (-c, zero), (zero, -c)):
        z = exp_map(model, np.stack(w, axis=-1), s, z, method)
    return z


def mumford_forward_leg(s, z0, model: OperatorModel | None = None, method: str = "auto") -> np.ndarray:
    """``exp(s(wX + Y)) z0`` with ``w = 2 pi / s``."""
    model = model or _builtin("mumford")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("mumford loops need s > 0")
    return exp_map(model, (2 * np.pi / s)[..., None], s, z0, method)


def mumford_loop(s, z0, model: OperatorModel | None = None, method: str = "auto") -> np.ndarray:
    """Forward leg with ``w = 2 pi / s`` followed by the leg with ``-w``."""
    model = model or _builtin("mumford")
    s = np.asarray(s, dtype=float)
    z = mumford_forward_leg(s, z0, model, method)
    return exp_map(model, (-2 * np.pi / s)[..., None], s, z, method)


def harnack_chain(model: OperatorModel, omega, s: float, k: int, z0, method: str = "auto") -> list[np.ndarray]:
    """``[z0, exp(s(wX+Y)) z0, ..., exp(ks(wX+Y)) z0]`` built step by step."""
    if k < 1:
        raise ValueError("a Harnack chain needs k >= 1")
    chain = [np.asarray(z0, dtype=float)]
    for _ in range(k):
        chain.append(exp_map(model, omega, s, chain[-1], method))
    return chain


def separation_ratio(model: OperatorModel, u: Callable, omega, s: float, samples) -> tuple[float, float]:
    """Mean of ``u(exp(s(wX+Y)) z) / u(z)`` over the samples and the largest
    deviation from that mean."""
    samples = np.asarray(samples, dtype=float)
    base = np.asarray(u(samples), dtype=float)
    if np.any(base <= 0) or not np.all(np.isfinite(base)):
        raise ValueError("u must be strictly positive and finite on the samples")
    moved = np.asarray(u(exp_map(model, omega, s, samples)), dtype=float)
    r = moved / base
    mean = float(np.mean(r))
    return mean, float(np.max(np.abs(r - mean)))


def _unit_control(model: OperatorModel, j: int) -> np.ndarray:
    w = np.zeros(model.m)
    if j:
        w[j - 1] = 1.0
    return w


def loop_bracket(model: OperatorModel, j: int, k: int):
    """Space-time field ``[e_j.X + Y, e_k.X + Y]`` (index 0 means omega = 0)."""
    A = model.Y if j == 0 else _sum_fields(model, model.field(j), model.Y)
    B = model.Y if k == 0 else _sum_fields(model, model.field(k), model.Y)
    return bracket(A, B)


def _sum_fields(model: OperatorModel, X, Z):
    from .fields import VectorField

    return VectorField(exprs=[a + b for a, b in zip(X.exprs, Z.exprs)], symbols=model.space_time_symbols,
                       name=f"{X.name}+{Z.name}")


def bch_loop_endpoint(model: OperatorModel, j: int, k: int, s, z0, method: str = "auto") -> np.ndarray:
    """Run A forward, B forward, A backward, B backward for time s each, with
    ``A = e_j.X + Y`` and ``B = e_k.X + Y``."""
    wa, wb = _unit_control(model, j), _unit_control(model, k)
    z = np.asarray(z0, dtype=float)
    for w, sign in ((wa, 1), (wb, 1), (wa, -1), (wb, -1)):
        z = _flow(model, w, sign * np.asarray(s, dtype=float), z, method)
    return z


def bch_loop_residual(model: OperatorModel, j: int, k: int, s: float = 1e-2, z0=None, method: str = "auto") -> float:
    """``|(loop(z0) - z0)/s^2 - [A, B](z0)|`` in the sup norm.

    The loop increment over ``s^2`` tends to the bracket at rate O(s); with
    the bracket convention ``[X, Z] = DZ X - DX Z`` the first leg's field
    comes first.
    """
    z0 = model.law.identity if z0 is None else np.asarray(z0, dtype=float)
    end = bch_loop_endpoint(model, j, k, s, z0, method)
    target = loop_bracket(model, j, k)(z0)
    return float(np.max(np.abs((end - z0) / s**2 - target)))
