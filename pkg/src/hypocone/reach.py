"""Attainable sets: random piecewise-constant controls and exact oracles."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .fields import OperatorModel

log = logging.getLogger(__name__)

BOUNDARY_EPS = 1e-9
SAMPLER_STEP = 1e-3


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: str  # inside | boundary | outside | unknown
    margin: float

    @classmethod
    def from_margin(cls, margin: float, eps: float = BOUNDARY_EPS) -> "MembershipVerdict":
        if abs(margin) <= eps:
            return cls("boundary", margin)
        return cls("inside" if margin > 0 else "outside", margin)


UNKNOWN = MembershipVerdict("unknown", float("nan"))


@dataclass(frozen=True)
class ReachCloud:
    origin: np.ndarray
    endpoints: np.ndarray  # (n, N+1)
    omegas: np.ndarray  # (n, segments, m)
    durations: np.ndarray  # (n, segments)
    horizon: float
    path_ids: np.ndarray
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.endpoints)


# --- oracles: each maps (z0, z) to an array of slacks, all >= 0 inside ---

def mumford_slacks(z0, z) -> np.ndarray:
    z0, z = np.broadcast_arrays(np.asarray(z0, float), np.asarray(z, float))
    dist = np.hypot(z[..., 1] - z0[..., 1], z[..., 2] - z0[..., 2])
    return (z0[..., 3] - z[..., 3] - dist)[..., None]


def cmp_slacks(z0, z) -> np.ndarray:
    z0, z = np.broadcast_arrays(np.asarray(z0, float), np.asarray(z, float))
    dt = z0[..., 3] - z[..., 3]
    dy = z[..., 1] - z0[..., 1]
    dw = z[..., 2] - z0[..., 2]
    return np.stack([dt, dy, dy * dt - dw**2], axis=-1)


class DriftlessOracle:
    """``t <= t0`` on an optional box cylinder ``O x I``."""

    def __init__(self, box: Sequence[tuple[float, float]] | None = None):
        self.box = None if box is None else np.asarray(box, dtype=float)

    def __call__(self, z0, z) -> np.ndarray:
        z0, z = np.broadcast_arrays(np.asarray(z0, float), np.asarray(z, float))
        slacks = [(z0[..., -1] - z[..., -1])[..., None]]
        if self.box is not None:
            slacks += [z - self.box[:, 0], self.box[:, 1] - z]
        return np.concatenate(slacks, axis=-1)


def margin(model: OperatorModel, z0, z):
    """Smallest oracle slack, or None when the model has no oracle."""
    if model.attainable_oracle is None:
        return None
    return np.min(model.attainable_oracle(z0, z), axis=-1)


def membership(model: OperatorModel, z0, z, eps: float = BOUNDARY_EPS) -> MembershipVerdict:
    m = margin(model, z0, z)
    if m is None:
        return UNKNOWN
    return MembershipVerdict.from_margin(float(m), eps)


def sample_attainable(model: OperatorModel, z0, n_paths: int, segments: int, omega_bound: float,
                      horizon: float, seed: int, step: float = SAMPLER_STEP) -> ReachCloud:
    """Endpoints of ``n_paths`` random admissible paths from ``z0``.

    Durations are uniform on ``(0, horizon/segments]`` and controls uniform in
    the sup-norm ball of radius ``omega_bound``. Paths that blow up are
    dropped and counted.
    """
    if n_paths < 0 or segments < 1:
        raise ValueError("need n_paths >= 0 and segments >= 1")
    if omega_bound <= 0 or horizon <= 0:
        raise ValueError("omega_bound and horizon must be positive")
    z0 = np.asarray(z0, dtype=float)
    rng = np.random.default_rng(seed)
    # 1 - U(0,1) lies in (0, 1]
    durations = (1.0 - rng.random((n_paths, segments))) * (horizon / segments)
    omegas = rng.uniform(-omega_bound, omega_bound, size=(n_paths, segments, model.m))
    substeps = max(1, math.ceil(horizon / segments / step))
    Z0 = np.broadcast_to(z0, (n_paths, model.dim))
    if n_paths:
        Z, bad = _backend.rk4_segments(model, Z0, omegas, durations, substeps)
    else:
        Z, bad = np.empty((0, model.dim)), np.empty(0, dtype=np.int64)
    ok = (bad < 0) & np.all(np.isfinite(Z), axis=1)
    dropped = int(np.count_nonzero(~ok))
    if dropped:
        log.warning("%s: dropped %d diverging sample paths", model.name, dropped)
    Z = Z[ok]
    Z[:, -1] = z0[-1] - durations[ok].sum(axis=1)
    return ReachCloud(origin=z0, endpoints=Z, omegas=omegas[ok], durations=durations[ok], horizon=horizon,
                      path_ids=np.flatnonzero(ok), dropped=dropped)


def interior_coverage(model: OperatorModel, z0, cloud: ReachCloud, probes, eps: float) -> float:
    """Fraction of probes within ``eps`` (sup norm) of some cloud endpoint."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if len(probes) == 0:
        raise ValueError("no probes given")
    if len(cloud) == 0:
        return 0.0
    dist, _ = cKDTree(cloud.endpoints).query(probes, k=1, p=np.inf, distance_upper_bound=eps)
    return float(np.mean(dist <= eps))
