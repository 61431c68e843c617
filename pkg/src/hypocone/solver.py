"""Explicit finite differences for the Cauchy problem and the extremal
catalog ``exp(<x, a> + |a|^2 t)``."""
from __future__ import annotations

import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .fields import OperatorModel

CSV_FMT = "%.17g"


class CFLError(ValueError):
    pass


class SolverError(FloatingPointError):
    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


@dataclass
class GridField:
    """Values on a uniform box grid; ``box`` holds ``(min, max, points)`` per axis."""

    box: tuple[tuple[float, float, int], ...]
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.box = tuple((float(a), float(b), int(n)) for a, b, n in self.box)
        self.values = np.asarray(self.values, dtype=float)
        for a, b, n in self.box:
            if n < 3 or not b > a:
                raise ValueError("each axis needs min < max and at least 3 points")
        if self.values.shape != tuple(n for _, _, n in self.box):
            raise ValueError(f"values of shape {self.values.shape} do not match the box")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, n) for a, b, n in self.box]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in self.box)

    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``values.shape + (ndim,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @classmethod
    def from_function(cls, box, f: Callable, time: float = 0.0) -> "GridField":
        tmp = cls(box, np.zeros(tuple(int(n) for _, _, n in box)), time)
        z = np.concatenate([tmp.mesh(), np.full(tmp.values.shape + (1,), float(time))], axis=-1)
        tmp.values = np.asarray(f(z), dtype=float) * np.ones(tmp.values.shape)
        return tmp

    def interior_mask(self, margin: float) -> np.ndarray:
        mask = np.ones(self.values.shape, dtype=bool)
        for k, (ax, (a, b, _)) in enumerate(zip(self.axes, self.box)):
            ok = (ax >= a + margin - 1e-12) & (ax <= b - margin + 1e-12)
            shape = [1] * len(self.box)
            shape[k] = -1
            mask &= ok.reshape(shape)
        return mask

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# time {self.time!r}\n")
        for k, (a, b, n) in enumerate(self.box):
            buf.write(f"# axis {k} {a!r} {b!r} {n}\n")
        names = [f"x{k}" for k in range(len(self.box))]
        rows = np.column_stack([self.mesh().reshape(-1, len(self.box)), self.values.reshape(-1)])
        np.savetxt(buf, rows, delimiter=",", fmt=CSV_FMT, header=",".join(names + ["value"]), comments="")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        write_atomic(path, self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "GridField":
        time, box = 0.0, []
        lines = text.splitlines()
        body = []
        for line in lines:
            if line.startswith("# time"):
                time = float(line.split()[2])
            elif line.startswith("# axis"):
                _, _, _, a, b, n = line.split()
                box.append((float(a), float(b), int(n)))
            elif line and not line.startswith("#"):
                body.append(line)
        data = np.loadtxt(io.StringIO("\n".join(body[1:])), delimiter=",", ndmin=2)
        return cls(tuple(box), data[:, -1].reshape(tuple(n for _, _, n in box)), time)

    @classmethod
    def read_csv(cls, path) -> "GridField":
        with open(path) as fh:
            return cls.from_csv(fh.read())


def write_atomic(path, text: str) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- extremal catalog ---

@dataclass(frozen=True)
class ExtremalSolution:
    """``u(x, t) = exp(<x, alpha> + |alpha|^2 t)``; its stationary factor
    ``exp(<x, alpha>)`` carries ``lam = -|alpha|^2``."""

    model_name: str
    alpha: np.ndarray = field(repr=False)
    lambda0: float = 0.0

    @property
    def beta(self) -> float:
        return float(self.alpha @ self.alpha)

    @property
    def lam(self) -> float:
        return -self.beta

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(z[..., :-1] @ self.alpha + self.beta * z[..., -1])

    def stationary(self, x):
        return np.exp(np.asarray(x, dtype=float) @ self.alpha)


def extremal(model: OperatorModel, alpha) -> ExtremalSolution:
    if model.extremal_support is None:
        raise ValueError(f"{model.name} has no extremal catalog")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (model.N,):
        raise ValueError(f"alpha must lie in R^{model.N}")
    outside = np.setdiff1d(np.arange(model.N), model.extremal_support)
    if np.any(alpha[outside] != 0):
        raise ValueError(f"alpha must vanish off coordinates {model.extremal_support}")
    return ExtremalSolution(model.name, alpha)


def stationary_mixture(model: OperatorModel, lam: float, atoms, weights) -> Callable:
    """``e^{-lam t} sum_i c_i exp(sqrt(-lam) <x, xi_i>)`` with unit atoms xi_i
    on the generator coordinates; a solution of ``Lu = 0`` for ``lam <= 0``."""
    if lam > 0:
        raise ValueError("needs lam <= 0")
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not math.isclose(weights.sum(), 1.0):
        raise ValueError("weights must form a probability vector")
    if not np.allclose(np.linalg.norm(atoms, axis=1), 1.0):
        raise ValueError("atoms must lie on the unit sphere")
    sols = [extremal(model, math.sqrt(-lam) * a) for a in atoms]

    def u(z):
        return sum(c * s(z) for c, s in zip(weights, sols))

    return u


# --- Cauchy solver ---

def _stencil(model: OperatorModel, u0: GridField):
    """Coefficients of ``u_t = u_xx + cyy(x) u_yy + by(x) u_y`` and whether
    the y-direction is characteristic."""
    name = model.name
    x = u0.axes[0]
    if name == "heat" and model.N == 1 and len(u0.box) == 1:
        return np.zeros_like(x), np.zeros_like(x), True
    if len(u0.box) != 2:
        raise ValueError(f"{name} needs a two-axis grid")
    if name == "heat" and model.N == 2:
        return np.ones_like(x), np.zeros_like(x), False
    if name == "kolmogorov" and model.N == 2:
        return np.zeros_like(x), x.copy(), True
    if name == "grushin":
        return x**2, np.zeros_like(x), False
    raise ValueError(f"no finite-difference stencil for {name} (N={model.N})")


def cfl_limit(model: OperatorModel, u0: GridField) -> float:
    cyy, by, _ = _stencil(model, u0)
    h = u0.spacing
    lim = 0.25 * min(h) ** 2
    if len(h) > 1:
        if np.max(np.abs(by)) > 0:
            lim = min(lim, 0.5 * h[1] / np.max(np.abs(by)))
        if np.max(cyy) > 1:
            lim = min(lim, 0.25 * h[1] ** 2 / np.max(cyy))
    return lim


def solve_cauchy(model: OperatorModel, u0: GridField, dt: float, steps: int,
                 boundary: Callable | None = None, callback: Callable | None = None,
                 pure: bool = False) -> GridField:
    """Explicit Euler with centred second differences and upwinded drift.

    Boundary nodes are clamped to the trace of ``u0`` unless ``boundary``
    gives Dirichlet data as a function of space-time node arrays. For the
    Kolmogorov stencil the y-edges are outflow/inflow edges and advance with
    a zero-gradient ghost node instead. ``callback(n, field)`` sees every
    step.
    """
    cyy, by, ychar = _stencil(model, u0)
    if dt <= 0 or steps < 0:
        raise ValueError("need dt > 0 and steps >= 0")
    lim = cfl_limit(model, u0)
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"dt = {dt} exceeds the stability limit {lim}")
    h = u0.spacing
    hx = h[0]
    hy = h[1] if len(h) > 1 else 1.0
    u = u0.values.reshape(len(u0.axes[0]), -1).copy()
    mesh = None
    if boundary is not None:
        m = u0.mesh()
        mesh = m.reshape(u.shape + (m.shape[-1],))
    trace = u.copy()
    t = u0.time
    for n in range(1, steps + 1):
        u = _backend.fd_step(u, cyy, by, hx, hy, dt, ychar, pure=pure)
        t = u0.time + n * dt
        edge = trace
        if boundary is not None:
            z = np.concatenate([mesh, np.full(u.shape + (1,), t)], axis=-1)
            edge = np.asarray(boundary(z), dtype=float) * np.ones(u.shape)
        u[0], u[-1] = edge[0], edge[-1]
        if not ychar:
            u[:, 0], u[:, -1] = edge[:, 0], edge[:, -1]
        if not np.all(np.isfinite(u)):
            raise SolverError(f"non-finite values at step {n}", n)
        if callback is not None:
            callback(n, GridField(u0.box, u.reshape(u0.values.shape), t))
    return GridField(u0.box, u.reshape(u0.values.shape), t)


def y_independence_deviation(field: GridField, axis: int = 1) -> float:
    """Largest jump between neighbouring nodes along ``axis``."""
    if not 0 <= axis < field.values.ndim:
        raise ValueError(f"axis {axis} out of range")
    return float(np.max(np.abs(np.diff(field.values, axis=axis))))


def liouville_growth_check(samples, eps: float) -> bool:
    """Whether ``u(0, t) e^{-eps t}`` stays bounded over the samples.

    ``samples`` maps increasing times to values (dict or pair of arrays).
    Bounded means ``log u - eps t`` reaches no new maximum on the later half
    of the samples (tolerance 1e-9).
    """
    if isinstance(samples, dict):
        ts, us = map(np.asarray, zip(*sorted(samples.items())))
    else:
        ts, us = (np.asarray(a, dtype=float) for a in samples)
    if len(ts) < 3:
        raise ValueError("need at least 3 samples")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample times must increase")
    if np.any(us < 0):
        raise ValueError("u must be nonnegative")
    with np.errstate(divide="ignore"):
        g = np.log(us.astype(float)) - eps * ts.astype(float)
    half = len(g) // 2
    return bool(np.max(g[half:]) <= np.max(g[:half]) + 1e-9)
