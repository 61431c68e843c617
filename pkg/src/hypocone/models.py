"""The builtin operators with their groups, closed-form flows and oracles."""
from __future__ import annotations

import functools

import numpy as np
import sympy as sp

from . import groups
from .fields import OperatorModel, VectorField
from .reach import DriftlessOracle, cmp_slacks, mumford_slacks

# codes understood by the compiled core
HEAT, HEISENBERG, KOLMOGOROV, MUMFORD, CMP, GRUSHIN, GRUSHIN_LIFTED, OU, LINKED = range(9)

DEFAULT_NAMES = ("heat", "heisenberg_heat", "kolmogorov", "mumford", "cmp", "grushin", "grushin_lifted", "ou",
                 "linked")


def _syms(names):
    return sp.symbols(" ".join(names), real=True, seq=True)


def _fields(symbols, rows, prefix="X"):
    return tuple(VectorField(exprs=r, symbols=symbols, name=f"{prefix}{j + 1}") for j, r in enumerate(rows))


def _out(z):
    return np.array(z, dtype=float, copy=True)


# --- closed-form exponentials: (omega (..., m), s (...), z (..., N+1)) -> point ---

def _heat_exp(w, s, z):
    out = _out(z)
    out[..., :-1] += w * s[..., None]
    out[..., -1] -= s
    return out


def _heisenberg_exp(kappa):
    def f(w, s, z):
        out = _out(z)
        x, y = z[..., 0], z[..., 1]
        out[..., 0] += w[..., 0] * s
        out[..., 1] += w[..., 1] * s
        out[..., 2] += kappa * s * (x * w[..., 1] - y * w[..., 0])
        out[..., 3] -= s
        return out

    return f


def _kolmogorov_exp(m):
    def f(w, s, z):
        out = _out(z)
        x = z[..., :m]
        sv = s[..., None]
        out[..., :m] += w * sv
        out[..., m:2 * m] += sv * x + w * sv**2 / 2
        out[..., -1] -= s
        return out

    return f


def _mumford_exp(w, s, z):
    # sinc form of (sin(x + s w) - sin x) / w, exact at w = 0
    out = _out(z)
    x, om = z[..., 0], w[..., 0]
    half = s * om / 2
    sinc = np.sinc(half / np.pi)
    out[..., 0] += om * s
    out[..., 1] += s * np.cos(x + half) * sinc
    out[..., 2] += s * np.sin(x + half) * sinc
    out[..., 3] -= s
    return out


def mumford_exp_branched(w, s, z):
    """Closed form with separate ``w = 0`` and ``w != 0`` branches."""
    z = np.asarray(z, dtype=float)
    x, y, ww, t = z
    if w == 0:
        return np.array([x, y + s * np.cos(x), ww + s * np.sin(x), t - s])
    return np.array([x + w * s, y + (np.sin(x + w * s) - np.sin(x)) / w,
                     ww - (np.cos(x + w * s) - np.cos(x)) / w, t - s])


def _cmp_exp(w, s, z):
    out = _out(z)
    x, om = z[..., 0], w[..., 0]
    out[..., 0] += om * s
    out[..., 1] += x**2 * s + x * om * s**2 + om**2 * s**3 / 3
    out[..., 2] += x * s + om * s**2 / 2
    out[..., 3] -= s
    return out


def _grushin_exp(w, s, z):
    out = _out(z)
    x = z[..., 0]
    out[..., 0] += w[..., 0] * s
    out[..., 1] += w[..., 1] * (x * s + w[..., 0] * s**2 / 2)
    out[..., 2] -= s
    return out


def _grushin_lifted_exp(w, s, z):
    out = _out(z)
    x = z[..., 0]
    out[..., 0] += w[..., 0] * s
    out[..., 1] += w[..., 1] * (x * s + w[..., 0] * s**2 / 2)
    out[..., 2] += w[..., 1] * s
    out[..., 3] -= s
    return out


def _ou_exp(w, s, z):
    out = _out(z)
    out[..., :-1] = (z[..., :-1] + w) * np.exp(s)[..., None] - w
    out[..., -1] -= s
    return out


def _linked_exp(w, s, z):
    out = _out(z)
    x, y = z[..., 0], z[..., 1]
    a, b = w[..., 0], w[..., 1]
    out[..., 0] += a * s
    out[..., 1] += b * s
    out[..., 2] += s * (a * y - b * x)
    out[..., 3] += x * s + a * s**2 / 2
    out[..., 4] -= s
    return out


# --- models ---

def heat(N: int = 2) -> OperatorModel:
    names = tuple(f"x{i + 1}" for i in range(N))
    X = _syms(names)
    rows = [[1 if i == j else 0 for i in range(N)] for j in range(N)]
    return OperatorModel(
        name="heat", N=N, m=N, coords=names, generators=_fields(X, rows),
        drift_x0=VectorField(exprs=[0] * N, symbols=X, name="X0"),
        law=groups.euclidean_law(N + 1), dilation=groups.product_dilation([1] * N),
        layers=groups.LayerStructure((tuple(range(N)),)), exp_closed_form=_heat_exp,
        attainable_oracle=DriftlessOracle(), kernel=functools.partial(_heat_kernel, N),
        extremal_support=tuple(range(N)), core_kind=HEAT, core_ipar=N,
        notes="heat equation, Euclidean translations")


def _heat_kernel(N, z, zeta):
    from .kernels import heat_kernel

    return heat_kernel(N, z, zeta)


def _kolmogorov_kernel(m, z, zeta):
    from .kernels import kolmogorov_kernel

    return kolmogorov_kernel(m, z, zeta)


def heisenberg_heat() -> OperatorModel:
    x, y, z = X = _syms(("x", "y", "z"))
    kappa = 0.5
    return OperatorModel(
        name="heisenberg_heat", N=3, m=2, coords=("x", "y", "z"),
        generators=_fields(X, [[1, 0, -y / 2], [0, 1, x / 2]]),
        drift_x0=VectorField(exprs=[0, 0, 0], symbols=X, name="X0"),
        law=groups.heisenberg_law(kappa), dilation=groups.product_dilation([1, 1, 2]),
        layers=groups.LayerStructure(((0, 1), (2,))), exp_closed_form=_heisenberg_exp(kappa),
        attainable_oracle=DriftlessOracle(), extremal_support=(0, 1), core_kind=HEISENBERG, core_fpar=kappa,
        notes="heat equation for the Heisenberg sub-Laplacian")


def kolmogorov(m: int = 1) -> OperatorModel:
    names = tuple(f"x{i + 1}" for i in range(m)) + tuple(f"y{i + 1}" for i in range(m)) if m > 1 else ("x", "y")
    S = _syms(names)
    rows = [[1 if i == j else 0 for i in range(2 * m)] for j in range(m)]
    return OperatorModel(
        name="kolmogorov", N=2 * m, m=m, coords=names, generators=_fields(S, rows),
        drift_x0=VectorField(exprs=[0] * m + list(S[:m]), symbols=S, name="X0"),
        law=groups.kolmogorov_law(m), dilation=groups.product_dilation([1] * m + [3] * m),
        exp_closed_form=_kolmogorov_exp(m), kernel=functools.partial(_kolmogorov_kernel, m),
        extremal_support=tuple(range(m)), core_kind=KOLMOGOROV, core_ipar=m,
        notes="Kolmogorov-Fokker-Planck operator")


def mumford() -> OperatorModel:
    x, y, w = X = _syms(("x", "y", "w"))
    return OperatorModel(
        name="mumford", N=3, m=1, coords=("x", "y", "w"), generators=_fields(X, [[1, 0, 0]]),
        drift_x0=VectorField(exprs=[0, sp.cos(x), sp.sin(x)], symbols=X, name="X0"),
        law=groups.mumford_law(), exp_closed_form=_mumford_exp, attainable_oracle=mumford_slacks,
        core_kind=MUMFORD, notes="Mumford operator on the roto-translation group")


def cmp() -> OperatorModel:
    x, y, w = X = _syms(("x", "y", "w"))
    return OperatorModel(
        name="cmp", N=3, m=1, coords=("x", "y", "w"), generators=_fields(X, [[1, 0, 0]]),
        drift_x0=VectorField(exprs=[0, x**2, x], symbols=X, name="X0"),
        law=groups.cmp_law(), dilation=groups.product_dilation([1, 4, 3]), exp_closed_form=_cmp_exp,
        attainable_oracle=cmp_slacks, core_kind=CMP, notes="degenerate operator with drift x^2 d_y + x d_w")


def grushin() -> OperatorModel:
    x, y = X = _syms(("x", "y"))
    return OperatorModel(
        name="grushin", N=2, m=2, coords=("x", "y"), generators=_fields(X, [[1, 0], [0, x]]),
        drift_x0=VectorField(exprs=[0, 0], symbols=X, name="X0"),
        law=None, dilation=groups.product_dilation([1, 2]), exp_closed_form=_grushin_exp,
        core_kind=GRUSHIN, notes="Grushin operator; no translation group")


def grushin_lifted() -> OperatorModel:
    x, y, w = X = _syms(("x", "y", "w"))
    return OperatorModel(
        name="grushin_lifted", N=3, m=2, coords=("x", "y", "w"), generators=_fields(X, [[1, 0, 0], [0, x, 1]]),
        drift_x0=VectorField(exprs=[0, 0, 0], symbols=X, name="X0"),
        law=groups.grushin_lifted_law(), dilation=groups.product_dilation([1, 2, 1]),
        layers=groups.LayerStructure(((0, 2), (1,))), exp_closed_form=_grushin_lifted_exp,
        attainable_oracle=DriftlessOracle(), core_kind=GRUSHIN_LIFTED, notes="Grushin operator lifted to a group")


def ou(N: int = 1) -> OperatorModel:
    names = tuple(f"x{i + 1}" for i in range(N)) if N > 1 else ("x",)
    X = _syms(names)
    rows = [[1 if i == j else 0 for i in range(N)] for j in range(N)]
    return OperatorModel(
        name="ou", N=N, m=N, coords=names, generators=_fields(X, rows),
        drift_x0=VectorField(exprs=list(X), symbols=X, name="X0"),
        law=groups.ou_law(N), exp_closed_form=_ou_exp, core_kind=OU, core_ipar=N,
        notes="nondegenerate Ornstein-Uhlenbeck operator")


def linked() -> OperatorModel:
    x, y, s, w = X = _syms(("x", "y", "s", "w"))
    return OperatorModel(
        name="linked", N=4, m=2, coords=("x", "y", "s", "w"),
        generators=_fields(X, [[1, 0, y, 0], [0, 1, -x, 0]]),
        drift_x0=VectorField(exprs=[0, 0, 0, x], symbols=X, name="X0"),
        law=groups.linked_law(), dilation=groups.product_dilation([1, 1, 2, 3]), exp_closed_form=_linked_exp,
        core_kind=LINKED, notes="Heisenberg heat operator linked with a Kolmogorov drift")


_FACTORIES = {"heat": heat, "heisenberg_heat": heisenberg_heat, "kolmogorov": kolmogorov, "mumford": mumford,
              "cmp": cmp, "grushin": grushin, "grushin_lifted": grushin_lifted, "ou": ou, "linked": linked}


@functools.lru_cache(maxsize=None)
def _cached(name: str, params: tuple) -> OperatorModel:
    return _FACTORIES[name](**dict(params))


def get_model(name: str, **params) -> OperatorModel:
    """Builtin model by name; ``heat``/``ou`` take ``N``, ``kolmogorov`` takes ``m``."""
    if name not in _FACTORIES:
        raise KeyError(f"unknown model {name!r}; choose from {', '.join(DEFAULT_NAMES)}")
    return _cached(name, tuple(sorted(params.items())))


def list_models() -> list[OperatorModel]:
    return [get_model(n) for n in DEFAULT_NAMES]
