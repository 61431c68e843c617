"""Vector fields, Lie brackets, Hörmander rank and invariance checks.

Builtin fields carry their coefficients as sympy expressions, so brackets of
any order (and their Jacobians) are exact. User fields may be plain callables;
their Jacobians then fall back to central differences.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .groups import Dilation, GroupLaw, LayerStructure

RANK_PIVOT = 1e-9
FD_STEP = 1e-5


def _flatten(vals):
    for v in vals:
        if isinstance(v, (list, tuple)):
            yield from _flatten(v)
        else:
            yield v


def _broadcast_eval(fn, shape: tuple[int, ...], p: np.ndarray) -> np.ndarray:
    # lambdified constants come back as scalars; broadcast them per entry
    vals = list(_flatten(fn(*np.moveaxis(p, -1, 0))))
    out = np.empty(p.shape[:-1] + (len(vals),))
    for i, v in enumerate(vals):
        out[..., i] = v
    return out.reshape(p.shape[:-1] + shape)


class VectorField:
    """Coefficient map ``p -> b(p)`` on R^dim, vectorized over leading axes."""

    def __init__(self, coeff: Callable | None = None, jacobian: Callable | None = None,
                 dim: int | None = None, *, exprs: Sequence | None = None,
                 symbols: Sequence[sp.Symbol] | None = None, name: str = ""):
        self.name = name
        if exprs is not None:
            self.exprs = tuple(sp.sympify(e) for e in exprs)
            self.symbols = tuple(symbols)
            self.dim = len(self.symbols)
            if len(self.exprs) != self.dim:
                raise ValueError("need one coefficient per coordinate")
            self._coeff = None
            self._jacobian = None
        else:
            if coeff is None or dim is None:
                raise ValueError("numeric fields need coeff and dim")
            self.exprs = None
            self.symbols = None
            self.dim = int(dim)
            self._coeff = coeff
            self._jacobian = jacobian

    @property
    def symbolic(self) -> bool:
        return self.exprs is not None

    @cached_property
    def _coeff_fn(self):
        return sp.lambdify(self.symbols, list(self.exprs), "numpy")

    @cached_property
    def _jac_fn(self):
        jac = sp.Matrix(self.exprs).jacobian(sp.Matrix(self.symbols))
        return sp.lambdify(self.symbols, jac.tolist(), "numpy")

    @property
    def analytic_jacobian(self) -> bool:
        return self.symbolic or self._jacobian is not None

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise ValueError(f"field of dimension {self.dim} evaluated at {p.shape[-1]}-point")
        if self.symbolic:
            return _broadcast_eval(self._coeff_fn, (self.dim,), p)
        return np.asarray(self._coeff(p), dtype=float)

    def jacobian(self, p) -> np.ndarray:
        """``J[..., i, k] = d b_i / d p_k``."""
        p = np.asarray(p, dtype=float)
        if self.symbolic:
            return _broadcast_eval(self._jac_fn, (self.dim, self.dim), p)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(p), dtype=float)
        h = FD_STEP * np.maximum(1.0, np.linalg.norm(p, axis=-1))[..., None]
        cols = []
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = 1.0
            cols.append((self(p + h * e) - self(p - h * e)) / (2.0 * h))
        return np.stack(cols, axis=-1)

    def apply(self, f: Callable, p, h: float = FD_STEP):
        """Central-difference directional derivative ``(X f)(p)``."""
        p = np.asarray(p, dtype=float)
        v = self(p)
        return (f(p + h * v) - f(p - h * v)) / (2.0 * h)

    def __repr__(self):
        body = ", ".join(map(str, self.exprs)) if self.symbolic else "<numeric>"
        return f"VectorField({self.name or '?'}: {body})"


def bracket(X: VectorField, Z: VectorField) -> VectorField:
    """``[X, Z](p) = DZ(p) X(p) - DX(p) Z(p)``."""
    if X.dim != Z.dim:
        raise ValueError(f"bracket of fields of dimension {X.dim} and {Z.dim}")
    name = f"[{X.name},{Z.name}]"
    if X.symbolic and Z.symbolic and X.symbols == Z.symbols:
        s = X.symbols
        exprs = [
            sp.expand(sum(X.exprs[k] * sp.diff(Z.exprs[i], s[k]) - Z.exprs[k] * sp.diff(X.exprs[i], s[k])
                          for k in range(len(s))))
            for i in range(len(s))
        ]
        return VectorField(exprs=exprs, symbols=s, name=name)

    def coeff(p):
        return (np.einsum("...ik,...k->...i", Z.jacobian(p), X(p))
                - np.einsum("...ik,...k->...i", X.jacobian(p), Z(p)))

    return VectorField(coeff, dim=X.dim, name=name)


def is_zero(X: VectorField) -> bool:
    return X.symbolic and all(e == 0 for e in X.exprs)


@dataclass(eq=False)
class OperatorModel:
    """``L = d_t - sum X_j^2 - X_0`` together with its group structure and
    whatever closed forms are known for it.

    Space-time points carry time last. Generators and ``drift_x0`` are spatial
    fields on R^N.
    """

    name: str
    N: int
    m: int
    coords: tuple[str, ...]
    generators: tuple[VectorField, ...]
    drift_x0: VectorField
    law: GroupLaw | None
    dilation: Dilation | None = None
    layers: LayerStructure | None = None
    exp_closed_form: Callable | None = None
    attainable_oracle: Callable | None = None
    kernel: Callable | None = None
    extremal_support: tuple[int, ...] | None = None
    core_kind: int | None = None
    core_ipar: int = 0
    core_fpar: float = 0.0
    notes: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def spatial_symbols(self) -> tuple[sp.Symbol, ...]:
        return self.drift_x0.symbols

    @cached_property
    def time_symbol(self) -> sp.Symbol:
        return sp.Symbol("t", real=True)

    @cached_property
    def space_time_symbols(self) -> tuple[sp.Symbol, ...]:
        return tuple(self.spatial_symbols) + (self.time_symbol,)

    def lift(self, X: VectorField, time_coeff=0) -> VectorField:
        return VectorField(exprs=tuple(X.exprs) + (time_coeff,), symbols=self.space_time_symbols,
                           name=X.name)

    @cached_property
    def lifted_generators(self) -> tuple[VectorField, ...]:
        return tuple(self.lift(X) for X in self.generators)

    @cached_property
    def Y(self) -> VectorField:
        return self.lift(self.drift_x0, -1)

    @cached_property
    def rhs(self) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        """Vectorized ``(z, omega) -> sum_j omega_j X_j(z) + Y(z)``."""
        omega = sp.symbols(f"w0:{self.m}", real=True)
        exprs = [self.drift_x0.exprs[i] + sum(omega[j] * self.generators[j].exprs[i] for j in range(self.m))
                 for i in range(self.N)] + [sp.Integer(-1)]
        fn = sp.lambdify(tuple(self.space_time_symbols) + tuple(omega), exprs, "numpy")
        d = self.dim

        def rhs(z, w):
            vals = fn(*np.moveaxis(z, -1, 0), *np.moveaxis(w, -1, 0))
            out = np.empty(np.broadcast_shapes(z.shape, w.shape[:-1] + (d,)))
            for i, v in enumerate(vals):
                out[..., i] = v
            return out

        return rhs

    def field(self, j: int) -> VectorField:
        """Space-time field: ``j = 0`` is the drift Y, ``j >= 1`` is X_j."""
        if j == 0:
            return self.Y
        if not 1 <= j <= self.m:
            raise IndexError(f"{self.name} has generators X_1..X_{self.m}")
        return self.lifted_generators[j - 1]

    def bracket_levels(self, max_order: int) -> list[list[VectorField]]:
        key = ("levels", max_order)
        if key not in self._cache:
            first = list(self.lifted_generators) + [self.Y]
            levels = [first]
            for _ in range(max_order - 1):
                new = []
                for a, b in itertools.product(first, levels[-1]):
                    c = bracket(a, b)
                    if not is_zero(c):
                        new.append(c)
                levels.append(new)
            self._cache[key] = levels
        return self._cache[key]


def drift(model: OperatorModel) -> VectorField:
    """Space-time drift ``Y = X_0 - d_t``."""
    return model.Y


def hormander_rank(model: OperatorModel, z, max_order: int):
    """Rank of the span of X_1..X_m, Y and their brackets up to ``max_order``.

    Order 1 is the fields themselves; order k adds brackets of an order-1
    field with an order-(k-1) one. Returns an int, or an int array for a
    batch of points.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    z = np.asarray(z, dtype=float)
    fields = [X for level in model.bracket_levels(max_order) for X in level]
    M = np.stack([X(z) for X in fields], axis=-2)
    flat = M.reshape((-1,) + M.shape[-2:])
    ranks = np.array([_tolerant_rank(A) for A in flat])
    return int(ranks[0]) if z.ndim == 1 else ranks.reshape(z.shape[:-1])


def _tolerant_rank(A: np.ndarray) -> int:
    scale = np.max(np.linalg.norm(A, axis=1)) if A.size else 0.0
    if scale == 0.0:
        return 0
    return int(np.linalg.matrix_rank(A, tol=RANK_PIVOT * scale))


def minimal_hormander_order(model: OperatorModel, z, max_order: int = 5) -> int | None:
    """Smallest order at which the rank is N+1 at every point of ``z``."""
    for order in range(1, max_order + 1):
        if np.all(np.asarray(hormander_rank(model, z, order)) == model.dim):
            return order
    return None


def left_invariance_residual(model: OperatorModel, j: int, zeta, z, f: Callable,
                             h: float = FD_STEP) -> float:
    """``|(X_j f)(zeta o z) - X_j (f(zeta o .))(z)|`` by central differences."""
    if model.law is None:
        raise ValueError(f"{model.name} carries no group law")
    X = model.field(j)
    zeta = np.asarray(zeta, dtype=float)
    z = np.asarray(z, dtype=float)
    lhs = X.apply(f, model.law.compose(zeta, z), h)
    rhs = X.apply(lambda p: f(model.law.compose(zeta, p)), z, h)
    return float(np.max(np.abs(lhs - rhs)))


def gauge_shift(u: Callable, lam: float) -> Callable:
    """``(x, t) -> exp(-lam t) u(x, t)``."""

    def shifted(z):
        z = np.asarray(z, dtype=float)
        return np.exp(-lam * z[..., -1]) * u(z)

    return shifted


def invariance_test_functions(dim: int) -> dict[str, Callable]:
    """Fixed family used by the invariance suites: low-degree polynomials
    times sin/cos of a single coordinate."""
    fam = {
        "sum_squares": lambda p: np.sum(p**2, axis=-1),
        "product": lambda p: np.prod(p, axis=-1),
        "cubic": lambda p: p[..., 0] ** 3 - 2.0 * p[..., 0] * p[..., -1] + p[..., min(1, dim - 1)] ** 2,
    }
    for k in range(min(dim, 3)):
        fam[f"sin{k}_poly"] = (lambda k: lambda p: np.sin(p[..., k]) * (1.0 + p[..., -1] + 0.5 * p[..., (k + 1) % dim] ** 2))(k)
        fam[f"cos{k}_lin"] = (lambda k: lambda p: np.cos(p[..., k]) * (p[..., (k + 1) % dim] - 0.3 * p[..., -1]))(k)
    return fam
