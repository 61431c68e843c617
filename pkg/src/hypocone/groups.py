"""Lie group laws and dilations on space-time R^{N+1}.

Points are plain float arrays whose last coordinate is time; every law and
dilation here broadcasts over leading axes, so a batch of points is an array
of shape ``(..., N+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

ABS_TOL = 1e-10


def as_points(z, dim: int | None = None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if dim is not None and z.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {z.shape[-1]}")
    return z


@dataclass(frozen=True)
class GroupLaw:
    name: str
    dim: int
    _compose: Callable[[np.ndarray, np.ndarray], np.ndarray]
    _inverse: Callable[[np.ndarray], np.ndarray]

    @property
    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def compose(self, a, b) -> np.ndarray:
        a = as_points(a, self.dim)
        b = as_points(b, self.dim)
        a, b = np.broadcast_arrays(a, b)
        return self._compose(a, b)

    def inverse(self, a) -> np.ndarray:
        return self._inverse(as_points(a, self.dim))


@dataclass(frozen=True)
class Dilation:
    """Coordinate-wise scaling ``z_i -> r**exponents[i] * z_i``."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(int(e) < 1 for e in self.exponents):
            raise ValueError("dilation exponents must be >= 1")

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def apply(self, r, z) -> np.ndarray:
        """``r`` is a scalar or an array broadcasting against ``z[..., :1]``."""
        r = np.asarray(r, dtype=float)
        if not np.all(r > 0):
            raise ValueError(f"dilation factor must be positive, got {r}")
        z = as_points(z, self.dim)
        if r.ndim:
            r = r[..., None] if r.shape[-1:] != (1,) else r
        return z * np.power(r, np.asarray(self.exponents, dtype=float))


@dataclass(frozen=True)
class LayerStructure:
    """Stratification of the spatial coordinates of a Carnot group.

    ``layers[i]`` holds the coordinate indices of the i-th layer; the first
    layer carries the generators.
    """

    layers: tuple[tuple[int, ...], ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.layers)

    @property
    def first(self) -> tuple[int, ...]:
        return self.layers[0]

    @property
    def last(self) -> tuple[int, ...]:
        return self.layers[-1]


def compose(law: GroupLaw, a, b) -> np.ndarray:
    return law.compose(a, b)


def inverse(law: GroupLaw, a) -> np.ndarray:
    return law.inverse(a)


def dilate(dil: Dilation, r: float, z) -> np.ndarray:
    return dil.apply(r, z)


def automorphism_residual(law: GroupLaw, dil: Dilation, r: float, a, b) -> float:
    """Sup-norm defect of ``dilate(r, a*b) == dilate(r, a) * dilate(r, b)``."""
    lhs = dil.apply(r, law.compose(a, b))
    rhs = law.compose(dil.apply(r, a), dil.apply(r, b))
    return float(np.max(np.abs(lhs - rhs)))


def scaled_residual(a, b) -> np.ndarray:
    """Absolute error below unit scale, relative error above it (per point)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    err = np.max(np.abs(a - b), axis=-1)
    scale = np.maximum(1.0, np.maximum(np.max(np.abs(a), axis=-1), np.max(np.abs(b), axis=-1)))
    return err / scale


# builtin laws -------------------------------------------------------------

def euclidean_law(dim: int) -> GroupLaw:
    return GroupLaw(f"euclidean{dim}", dim, lambda a, b: a + b, lambda a: -a)


def heisenberg_law(kappa: float = 0.5) -> GroupLaw:
    """Heisenberg group on (x, y, z, t).

    ``z`` picks up ``kappa * (a_x b_y - a_y b_x)``. With ``kappa = 1/2`` the
    left-invariant fields are ``d_x - y/2 d_z`` and ``d_y + x/2 d_z``; with
    ``kappa = -1`` they are ``d_x + y d_z`` and ``d_y - x d_z``.
    """

    def comp(a, b):
        out = a + b
        out[..., 2] += kappa * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
        return out

    return GroupLaw(f"heisenberg(kappa={kappa:g})", 4, comp, lambda a: -a)


def kolmogorov_law(m: int = 1) -> GroupLaw:
    """``(xi, eta, tau) o (x, y, t) = (x + xi, y + eta - t xi, t + tau)``."""

    def comp(a, b):
        out = a + b
        out[..., m:2 * m] -= b[..., -1:] * a[..., :m]
        return out

    def inv(a):
        out = -a
        out[..., m:2 * m] = -a[..., m:2 * m] - a[..., -1:] * a[..., :m]
        return out

    return GroupLaw(f"kolmogorov(m={m})", 2 * m + 1, comp, inv)


def _mumford_compose(a, b):
    c, s = np.cos(a[..., 0]), np.sin(a[..., 0])
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 0] + b[..., 0]
    out[..., 1] = a[..., 1] + b[..., 1] * c - b[..., 2] * s
    out[..., 2] = a[..., 2] + b[..., 1] * s + b[..., 2] * c
    out[..., 3] = a[..., 3] + b[..., 3]
    return out


def _mumford_inverse(a):
    c, s = np.cos(a[..., 0]), np.sin(a[..., 0])
    out = np.empty_like(a)
    out[..., 0] = -a[..., 0]
    out[..., 1] = -(a[..., 1] * c + a[..., 2] * s)
    out[..., 2] = a[..., 1] * s - a[..., 2] * c
    out[..., 3] = -a[..., 3]
    return out


def mumford_law() -> GroupLaw:
    """Roto-translation group on (x, y, w, t); x is never reduced mod 2 pi."""
    return GroupLaw("roto-translation", 4, _mumford_compose, _mumford_inverse)


def _cmp_compose(a, b):
    out = a + b
    ax, bt = a[..., 0], b[..., 3]
    out[..., 1] += 2.0 * ax * b[..., 2] - bt * ax**2
    out[..., 2] -= bt * ax
    return out


def _cmp_inverse(a):
    x, y, w, t = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    out = np.empty_like(a)
    out[..., 0] = -x
    out[..., 1] = -y + 2.0 * x * w + t * x**2
    out[..., 2] = -w - t * x
    out[..., 3] = -t
    return out


def cmp_law() -> GroupLaw:
    return GroupLaw("cmp", 4, _cmp_compose, _cmp_inverse)


def grushin_lifted_law() -> GroupLaw:
    """Law on (x, y, w, t) whose left-invariant fields are d_x and d_w + x d_y."""

    def comp(a, b):
        out = a + b
        out[..., 1] += a[..., 0] * b[..., 2]
        return out

    def inv(a):
        out = -a
        out[..., 1] = -a[..., 1] + a[..., 0] * a[..., 2]
        return out

    return GroupLaw("grushin-lift", 4, comp, inv)


def ou_law(n: int = 1) -> GroupLaw:
    """``(y, s) o (x, t) = (x + exp(-t) y, t + s)`` (left translations of OU)."""

    def comp(a, b):
        out = np.empty(np.broadcast_shapes(a.shape, b.shape))
        out[..., :n] = b[..., :n] + np.exp(-b[..., -1:]) * a[..., :n]
        out[..., -1] = a[..., -1] + b[..., -1]
        return out

    def inv(a):
        out = np.empty_like(a)
        out[..., :n] = -np.exp(a[..., -1:]) * a[..., :n]
        out[..., -1] = -a[..., -1]
        return out

    return GroupLaw(f"ornstein-uhlenbeck(n={n})", n + 1, comp, inv)


def linked_law() -> GroupLaw:
    """Law on (x, y, s, w, t) joining the Heisenberg law on (x, y, s) with
    the Kolmogorov law on (x, w, t)."""

    def comp(a, b):
        out = a + b
        out[..., 2] += a[..., 1] * b[..., 0] - a[..., 0] * b[..., 1]
        out[..., 3] -= b[..., 4] * a[..., 0]
        return out

    def inv(a):
        out = -a
        out[..., 3] = -a[..., 3] - a[..., 4] * a[..., 0]
        return out

    return GroupLaw("linked", 5, comp, inv)


def product_dilation(spatial: Sequence[int], time: int = 2) -> Dilation:
    return Dilation(tuple(int(e) for e in spatial) + (int(time),))
