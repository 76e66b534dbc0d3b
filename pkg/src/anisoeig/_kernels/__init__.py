"""Kernel backend selection.

The compiled Cython kernel is preferred; the NumPy implementation is the
fallback when the extension was not built or when ANISOEIG_PURE_PYTHON is
set in the environment.  Both backends implement identical semantics (see
tests/test_kernels.py and benchmarks/bench_kernels.py).
"""

from __future__ import annotations

import importlib
import os

import numpy as np

from ..norms import _KIND_QUADRATIC, _Lowered
from . import fem_numpy

_fem_cy = None
if not os.environ.get("ANISOEIG_PURE_PYTHON"):
    try:
        _fem_cy = importlib.import_module("._fem_cy", __name__)
    except ImportError:
        _fem_cy = None

BACKEND = "cython" if _fem_cy is not None else "numpy"


def _pack(low: _Lowered):
    if low.kind == _KIND_QUADRATIC:
        A = low.A
        return low.kind, 0.0, float(A[0, 0]), float(A[0, 1]), float(A[1, 1]), 0.0
    return low.kind, float(low.p), 0.0, 0.0, 0.0, float(low.eps)


def energy_and_gradient(tri, grads, areas, u, low: _Lowered, backend: str | None = None):
    """Energy, nodal gradient and zero-gradient area for nodal values u."""
    grad = np.zeros(len(u))
    use = backend or BACKEND
    if use == "cython" and _fem_cy is not None and low.n == 2:
        kind, p, a11, a12, a22, eps = _pack(low)
        energy, zero_area = _fem_cy.energy_and_gradient(
            tri, grads, areas, u, kind, p, a11, a12, a22, eps, grad
        )
        return energy, grad, zero_area
    energy, zero_area = fem_numpy.energy_and_gradient(tri, grads, areas, u, low, grad)
    return energy, grad, zero_area


def mass_value(tri, areas, u, backend: str | None = None) -> float:
    use = backend or BACKEND
    if use == "cython" and _fem_cy is not None:
        return _fem_cy.mass_value(tri, areas, u)
    return fem_numpy.mass_value(tri, areas, u)


def mass_and_action(tri, areas, u, backend: str | None = None):
    out = np.zeros(len(u))
    use = backend or BACKEND
    if use == "cython" and _fem_cy is not None:
        return _fem_cy.mass_and_action(tri, areas, u, out), out
    return fem_numpy.mass_and_action(tri, areas, u, out), out
