"""Selects the compiled kernels when the extension is importable.

Set ``HYPOCONE_PURE=1`` to force the numpy fallback.
"""
from __future__ import annotations

import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

try:
    if os.environ.get("HYPOCONE_PURE", "") not in ("", "0"):
        raise ImportError("pure mode requested")
    from . import _core
except ImportError as exc:  # pragma: no cover - depends on the build
    log.debug("compiled core unavailable (%s); using numpy kernels", exc)
    _core = None

HAVE_CORE = _core is not None


def backend_name() -> str:
    return "cython" if HAVE_CORE else "numpy"


def rk4_segments(model, z0, omegas, durations, substeps: int, record: bool = False, pure: bool = False):
    if HAVE_CORE and not pure and model.core_kind is not None:
        return _core.rk4_segments(model.core_kind, model.core_ipar, model.core_fpar,
                                  z0, omegas, durations, int(substeps), record)
    return _fallback.rk4_segments(model.rhs, z0, omegas, durations, int(substeps), record)


def fd_step(u, cyy, by, hx, hy, dt, ychar, pure: bool = False):
    if HAVE_CORE and not pure:
        return _core.fd_step(u, cyy, by, float(hx), float(hy), float(dt), bool(ychar))
    return _fallback.fd_step(u, cyy, by, hx, hy, dt, ychar)
