# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-triangle energy/gradient kernel.

One fused pass over the elements of a P1 triangulation: for each triangle
the constant gradient g = sum_v u_v grad(phi_v) is formed, the squared
anisotropic norm F(g)^2 and the half-square gradient G = grad(F^2/2)(g) are
evaluated in closed form for the lowered family (euclidean / p-norm /
quadratic, each with an additive eps |.|^2 regularization already folded
in), and 2 |T| <G, grad(phi_v)> is scattered into the nodal gradient.

Scatter order is the element order, so results are bit-for-bit
deterministic.  Semantics match anisoeig._kernels.fem_numpy exactly.
"""

from libc.math cimport fabs, pow

import numpy as np

cimport numpy as cnp

cnp.import_array()


def energy_and_gradient(
    cnp.int32_t[:, ::1] tri,
    double[:, :, ::1] grads,
    double[::1] areas,
    double[::1] u,
    int kind,
    double p,
    double a11,
    double a12,
    double a22,
    double eps,
    double[::1] grad_out,
):
    """Return (energy, zero_gradient_area); accumulates into grad_out."""
    cdef Py_ssize_t m = tri.shape[0]
    cdef Py_ssize_t t, v
    cdef int i0, i1, i2
    cdef double gx, gy, ax, ay, s, f2, scale, ggx, ggy, area, w
    cdef double energy = 0.0
    cdef double zero_area = 0.0

    for t in range(m):
        i0 = tri[t, 0]
        i1 = tri[t, 1]
        i2 = tri[t, 2]
        gx = u[i0] * grads[t, 0, 0] + u[i1] * grads[t, 1, 0] + u[i2] * grads[t, 2, 0]
        gy = u[i0] * grads[t, 0, 1] + u[i1] * grads[t, 1, 1] + u[i2] * grads[t, 2, 1]
        area = areas[t]

        if gx == 0.0 and gy == 0.0:
            zero_area += area
            continue

        if kind == 0:  # euclidean
            f2 = gx * gx + gy * gy
            ggx = gx
            ggy = gy
        elif kind == 2:  # quadratic (eps folded into A)
            ggx = a11 * gx + a12 * gy
            ggy = a12 * gx + a22 * gy
            f2 = gx * ggx + gy * ggy
        else:  # p-norm with additive eps regularization
            ax = fabs(gx)
            ay = fabs(gy)
            s = pow(ax, p) + pow(ay, p)
            f2 = pow(s, 2.0 / p)
            scale = pow(s, (2.0 - p) / p)
            ggx = scale * pow(ax, p - 1.0)
            if gx < 0.0:
                ggx = -ggx
            ggy = scale * pow(ay, p - 1.0)
            if gy < 0.0:
                ggy = -ggy
            if eps != 0.0:
                f2 += eps * (gx * gx + gy * gy)
                ggx += eps * gx
                ggy += eps * gy

        energy += area * f2
        w = 2.0 * area
        for v in range(3):
            grad_out[tri[t, v]] += w * (ggx * grads[t, v, 0] + ggy * grads[t, v, 1])

    return energy, zero_area


def mass_value(cnp.int32_t[:, ::1] tri, double[::1] areas, double[::1] u):
    """Exact integral of u^2 for P1 nodal values u."""
    cdef Py_ssize_t m = tri.shape[0]
    cdef Py_ssize_t t
    cdef double u0, u1, u2, su
    cdef double acc = 0.0
    for t in range(m):
        u0 = u[tri[t, 0]]
        u1 = u[tri[t, 1]]
        u2 = u[tri[t, 2]]
        su = u0 + u1 + u2
        acc += areas[t] / 12.0 * (su * su + u0 * u0 + u1 * u1 + u2 * u2)
    return acc


def mass_and_action(cnp.int32_t[:, ::1] tri, double[::1] areas, double[::1] u,
                    double[::1] out):
    """Exact integral of u^2; accumulates the mass-matrix action into out."""
    cdef Py_ssize_t m = tri.shape[0]
    cdef Py_ssize_t t
    cdef int i0, i1, i2
    cdef double u0, u1, u2, su, w
    cdef double acc = 0.0
    for t in range(m):
        i0 = tri[t, 0]
        i1 = tri[t, 1]
        i2 = tri[t, 2]
        u0 = u[i0]
        u1 = u[i1]
        u2 = u[i2]
        su = u0 + u1 + u2
        w = areas[t] / 12.0
        acc += w * (su * su + u0 * u0 + u1 * u1 + u2 * u2)
        out[i0] += w * (su + u0)
        out[i1] += w * (su + u1)
        out[i2] += w * (su + u2)
    return acc
