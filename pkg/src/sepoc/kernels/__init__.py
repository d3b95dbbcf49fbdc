"""Integration kernels with a compiled fast path and a pure-Python fallback.

The backend is selected once at import: the Cython extension ``_core`` is
used when it importable and the environment variable ``SEPOC_PURE_PYTHON``
is unset (or "0"); otherwise the numpy fallback runs.  Both backends
implement identical numerics, see ``benchmarks/bench_kernels.py`` for the
speed comparison and the parity test in the suite for agreement.

Contract of :func:`solve_model`:

    solve_model(spec, z0, cheb, span, tol, t_eval, with_sens, backend=None)
        -> (Y, sens, z_final)

* ``spec``     packed model arrays (:class:`KernelSpec`)
* ``cheb``     plain Chebyshev coefficients of the control over [0, span],
               or None for the unit-input (time-rescaled) flow
* ``t_eval``   sorted sample times in [0, span]; Y has one state row each
* ``with_sens`` also integrate the variational system and return the
               terminal (n, q) sensitivities of the state with respect to
               the control coefficients
* ``z_final``  state at t=span from stepping (no interpolation)
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import IntegrationFailureError
from .dp45 import dp45
from .fallback import KIND_ADN, KIND_KURAMOTO, KIND_OA, KernelSpec
from . import fallback

try:
    from . import _core
except ImportError:  # extension not built; fallback carries the load
    _core = None

_FORCE_PY = os.environ.get("SEPOC_PURE_PYTHON", "").strip() not in ("", "0")

HAVE_COMPILED = _core is not None

_EMPTY_EDGES = np.empty((0, 2), dtype=np.int64)
_EMPTY_W = np.empty(0)


def active_backend() -> str:
    return "compiled" if (HAVE_COMPILED and not _FORCE_PY) else "python"


def solve_model(spec, z0, cheb, span, tol, t_eval, with_sens, backend=None):
    name = backend or active_backend()
    if name == "compiled":
        if _core is None:
            raise RuntimeError("compiled backend requested but _core is not built")
        edges = spec.edges if spec.edges is not None else _EMPTY_EDGES
        w1 = spec.w1 if spec.w1 is not None else _EMPTY_W
        w2 = spec.w2 if spec.w2 is not None else _EMPTY_W
        te = np.ascontiguousarray(t_eval if t_eval is not None else np.empty(0), dtype=float)
        Y, sens, z_final, status, t_fail = _core.solve(
            spec.kind,
            np.ascontiguousarray(edges, dtype=np.int64),
            np.ascontiguousarray(w1, dtype=float),
            np.ascontiguousarray(w2, dtype=float),
            np.ascontiguousarray(z0, dtype=float),
            None if cheb is None else np.ascontiguousarray(cheb, dtype=float),
            float(span),
            float(tol),
            te,
            bool(with_sens),
        )
        if status == 1:
            raise IntegrationFailureError(t_fail)
        if status == 2:
            raise IntegrationFailureError(t_fail, f"step budget exhausted at t={t_fail:.6g}")
        return Y, sens, z_final
    return fallback.solve_model(spec, np.asarray(z0, dtype=float), cheb, span, tol,
                                np.asarray(t_eval if t_eval is not None else np.empty(0), dtype=float),
                                with_sens)


__all__ = [
    "KernelSpec",
    "KIND_KURAMOTO",
    "KIND_OA",
    "KIND_ADN",
    "HAVE_COMPILED",
    "active_backend",
    "solve_model",
    "dp45",
]
