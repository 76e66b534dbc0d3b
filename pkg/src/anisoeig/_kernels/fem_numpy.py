"""Pure-NumPy fallback for the compiled energy/gradient kernel.

Same contract as ``_fem_cy.energy_and_gradient``; vectorized over elements
with a bincount scatter (deterministic index-order accumulation).
"""

from __future__ import annotations

import numpy as np

from ..norms import _Lowered, batch_sq_and_halfgrad


def energy_and_gradient(tri, grads, areas, u, low: _Lowered, grad_out):
    g = np.einsum("tv,tvd->td", u[tri], grads)
    f2, G = batch_sq_and_halfgrad(low, g)
    zero = ~np.any(g != 0.0, axis=1)
    zero_area = float(areas[zero].sum())
    energy = float(areas @ f2)
    contrib = 2.0 * areas[:, None, None] * G[:, None, :] * grads
    contrib = contrib.sum(axis=2)  # (m, 3): per-vertex shares
    grad_out += np.bincount(tri.ravel(), weights=contrib.ravel(), minlength=len(u))
    return energy, zero_area


def mass_value(tri, areas, u):
    ut = u[tri]
    su = ut.sum(axis=1)
    return float(np.sum(areas / 12.0 * (su * su + np.einsum("ij,ij->i", ut, ut))))


def mass_and_action(tri, areas, u, out):
    ut = u[tri]
    su = ut.sum(axis=1)
    w = areas / 12.0
    contrib = w[:, None] * (su[:, None] + ut)
    out += np.bincount(tri.ravel(), weights=contrib.ravel(), minlength=len(u))
    return float(np.sum(w * (su * su + np.einsum("ij,ij->i", ut, ut))))
