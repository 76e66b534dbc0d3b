"""Pointwise identity/inequality checks and the eigenvalue bound reports.

Pointwise identities (Bochner-type formula, Kato-type inequality, the
extended curvature-dimension inequality, the level-set curvature identity)
are verified on smooth closed-form probe functions: piecewise-linear FEM
output has no second derivatives, so those checks never touch the
eigensolver.  The PDE-level claims (gradient comparison against the 1-D
profile, the two gradient bounds, the Poincare-type eigenvalue bounds) are
evaluated on FEM output per triangle with explicit discretization
allowances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dual_geometry import dual_norm
from .errors import ConfigurationError, DomainError
from .domain import SmoothBoundaryCurve, TriMesh, f_mean_curvature
from .eigensolver import EigenResult, P1Assembly
from .model1d import OneDSolution, v_prime_of_u
from .norms import NormSpec, _lower, batch_value, eval_tensors

__all__ = [
    "TestFunction",
    "polynomial_probe",
    "trig_probe",
    "radial_probe",
    "random_polynomial",
    "CheckReport",
    "bochner_residual",
    "kato_gap",
    "extended_cd_gap",
    "levelset_identity_residual",
    "gradient_comparison_check",
    "neumann_gradient_bound_check",
    "dirichlet_gradient_bound_check",
    "poincare_bound_report",
    "safe_probe_point",
]


# ---------------------------------------------------------------------------
# probe functions with closed-form derivatives through third order
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Smooth probe with exact partial derivatives up to order three.

    kinds: ``polynomial`` (coeffs[i, j] x^i y^j, total degree <= 4),
    ``trig_product`` (amp sin(k1 x + p1) sin(k2 y + p2)), and ``radial``
    (c0 + c1 sqrt(x^T B x), smooth away from the center).
    """

    kind: str
    coeffs: np.ndarray | None = None
    params: tuple = ()
    B: np.ndarray | None = None

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return float(np.polynomial.polynomial.polyval2d(x[0], x[1], self.coeffs))
        if self.kind == "trig_product":
            amp, k1, p1, k2, p2 = self.params
            return amp * np.sin(k1 * x[0] + p1) * np.sin(k2 * x[1] + p2)
        c0, c1 = self.params
        return c0 + c1 * np.sqrt(x @ self.B @ x)

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            cx, cy = _poly_dx(self.coeffs), _poly_dy(self.coeffs)
            pv = np.polynomial.polynomial.polyval2d
            return np.array([pv(x[0], x[1], cx), pv(x[0], x[1], cy)])
        if self.kind == "trig_product":
            amp, k1, p1, k2, p2 = self.params
            s1, c1 = np.sin(k1 * x[0] + p1), np.cos(k1 * x[0] + p1)
            s2, c2 = np.sin(k2 * x[1] + p2), np.cos(k2 * x[1] + p2)
            return amp * np.array([k1 * c1 * s2, k2 * s1 * c2])
        _, c1 = self.params
        Bx = self.B @ x
        return c1 * Bx / np.sqrt(x @ Bx)

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            pv = np.polynomial.polynomial.polyval2d
            cx = _poly_dx(self.coeffs)
            cy = _poly_dy(self.coeffs)
            return np.array([
                [pv(x[0], x[1], _poly_dx(cx)), pv(x[0], x[1], _poly_dy(cx))],
                [pv(x[0], x[1], _poly_dy(cx)), pv(x[0], x[1], _poly_dy(cy))],
            ])
        if self.kind == "trig_product":
            amp, k1, p1, k2, p2 = self.params
            s1, c1 = np.sin(k1 * x[0] + p1), np.cos(k1 * x[0] + p1)
            s2, c2 = np.sin(k2 * x[1] + p2), np.cos(k2 * x[1] + p2)
            return amp * np.array([
                [-k1 * k1 * s1 * s2, k1 * k2 * c1 * c2],
                [k1 * k2 * c1 * c2, -k2 * k2 * s1 * s2],
            ])
        _, c1 = self.params
        B = self.B
        Bx = B @ x
        rho = np.sqrt(x @ Bx)
        return c1 * (B / rho - np.outer(Bx, Bx) / rho**3)

    def third(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            pv = np.polynomial.polynomial.polyval2d
            out = np.empty((2, 2, 2))
            for idx in np.ndindex(2, 2, 2):
                c = self.coeffs
                for ax in idx:
                    c = _poly_dx(c) if ax == 0 else _poly_dy(c)
                out[idx] = pv(x[0], x[1], c)
            return out
        if self.kind == "trig_product":
            amp, k1, p1, k2, p2 = self.params
            out = np.empty((2, 2, 2))
            for idx in np.ndindex(2, 2, 2):
                nx = sum(1 for ax in idx if ax == 0)
                ny = 3 - nx
                out[idx] = (
                    amp
                    * k1**nx * np.sin(k1 * x[0] + p1 + nx * np.pi / 2)
                    * k2**ny * np.sin(k2 * x[1] + p2 + ny * np.pi / 2)
                )
            return out
        _, c1 = self.params
        B = self.B
        Bx = B @ x
        rho = np.sqrt(x @ Bx)
        sym = (
            B[:, :, None] * Bx[None, None, :]
            + B[:, None, :] * Bx[None, :, None]
            + B[None, :, :] * Bx[:, None, None]
        )
        return c1 * (-sym / rho**3 + 3.0 * np.einsum("i,j,k->ijk", Bx, Bx, Bx) / rho**5)


def _poly_dx(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    if c.shape[0] > 1:
        out[:-1, :] = c[1:, :] * np.arange(1, c.shape[0])[:, None]
    return out


def _poly_dy(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    if c.shape[1] > 1:
        out[:, :-1] = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
    return out


def polynomial_probe(coeffs) -> TestFunction:
    c = np.asarray(coeffs, dtype=float)
    if c.shape[0] > 5 or c.shape[1] > 5:
        raise ConfigurationError("polynomial probes are limited to total degree 4")
    return TestFunction("polynomial", coeffs=c)


def trig_probe(amp, k1, p1, k2, p2) -> TestFunction:
    return TestFunction("trig_product", params=(amp, k1, p1, k2, p2))


def radial_probe(c0: float, c1: float, B=None) -> TestFunction:
    B = np.eye(2) if B is None else np.asarray(B, dtype=float)
    return TestFunction("radial", params=(c0, c1), B=B)


def random_polynomial(rng, degree: int = 3) -> TestFunction:
    c = np.zeros((5, 5))
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c[i, j] = rng.uniform(-1.0, 1.0)
    return polynomial_probe(c)


def safe_probe_point(spec: NormSpec, u: TestFunction, rng, box=2.0, min_comp: float = 0.05):
    """Random x where the probe gradient is bounded away from zero and from
    the coordinate axes (p-norm tensors are evaluated there singularity-free)."""
    for _ in range(500):
        x = rng.uniform(-box, box, 2)
        g = u.grad(x)
        gn = np.linalg.norm(g)
        if gn > 0.2 and np.min(np.abs(g)) > min_comp * gn:
            return x
    raise DomainError("could not find a safe probe point")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckReport:
    name: str
    sample_count: int
    worst_violation: float
    worst_location: tuple | None
    threshold: float
    passed: bool
    metadata: dict = field(default_factory=dict)


def make_report(name, sample_count, worst, location, threshold, **metadata) -> CheckReport:
    return CheckReport(
        name=name,
        sample_count=sample_count,
        worst_violation=float(worst),
        worst_location=tuple(np.asarray(location).tolist()) if location is not None else None,
        threshold=float(threshold),
        passed=bool(worst <= threshold),
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# pointwise identities on smooth probes
# ---------------------------------------------------------------------------


def _probe_tensors(spec: NormSpec, u: TestFunction, x, want_a3: bool):
    g1 = u.grad(x)
    if not np.any(g1):
        raise DomainError("probe gradient vanishes at the evaluation point")
    return g1, eval_tensors(spec, g1, want_a3=want_a3)


def bochner_residual(spec: NormSpec, u: TestFunction, x) -> float:
    """|LHS - RHS| of the Bochner-type identity for w = F^2(grad u)/2:

        a_ij w_ij = a_ij a_kl u_ik u_jl + (Qu)_k G_k - a_ijl w_l u_ij

    with G = grad(F^2/2) at grad u and Qu = a_ij u_ij; every term is
    assembled from closed-form derivatives, nothing finite-differenced.
    """
    g1, t = _probe_tensors(spec, u, x, want_a3=True)
    H = u.hess(x)
    U3 = u.third(x)
    a, a3 = t.a, t.a3
    G = t.value * t.grad
    w1 = H @ G  # gradient of w
    w_hess = H @ a @ H + np.einsum("k,kij->ij", G, U3)
    lhs = float(np.tensordot(a, w_hess))
    qu_grad = np.einsum("ijl,lk,ij->k", a3, H, H) + np.einsum("ij,ijk->k", a, U3)
    rhs = (
        float(np.einsum("ij,kl,ik,jl->", a, a, H, H))
        + float(qu_grad @ G)
        - float(np.einsum("ijl,l,ij->", a3, w1, H))
    )
    return abs(lhs - rhs)


def kato_gap(spec: NormSpec, u: TestFunction, x) -> float:
    """a_ij a_kl u_ik u_jl - a_ij F_k F_l u_ik u_jl  (nonnegative)."""
    g1, t = _probe_tensors(spec, u, x, want_a3=False)
    H = u.hess(x)
    a = t.a
    lhs = float(np.einsum("ij,kl,ik,jl->", a, a, H, H))
    y = H @ t.grad
    return lhs - float(y @ a @ y)


def extended_cd_gap(spec: NormSpec, u: TestFunction, x) -> float:
    """Slack of the curvature-dimension-type refinement:

        a_ij a_kl u_ik u_jl >= (Qu)^2/n + n/(n-1) (Qu/n - F_i F_j u_ij)^2.
    """
    n = spec.n
    if n < 2:
        raise DomainError("the refined inequality needs n >= 2")
    g1, t = _probe_tensors(spec, u, x, want_a3=False)
    H = u.hess(x)
    a = t.a
    lhs = float(np.einsum("ij,kl,ik,jl->", a, a, H, H))
    qu = float(np.tensordot(a, H))
    aff = float(t.grad @ H @ t.grad)
    bound = qu * qu / n + n / (n - 1.0) * (qu / n - aff) ** 2
    return lhs - bound


def levelset_identity_residual(spec: NormSpec, u: TestFunction, x,
                               n_curve_samples: int = 2048) -> float:
    """|Qu + F H_F - F_i F_j u_ij| on the probe's level curve through x.

    The level sets of a radial probe are the centered ellipses
    {y : y^T B y = const}, realized as a SmoothBoundaryCurve so that H_F
    comes from the curvature machinery rather than from the same algebra
    being checked.  The curvature is oriented along -grad u / |grad u|
    (the outward normal of the superlevel region).
    """
    if u.kind != "radial":
        raise DomainError("level-set identity checks need a radial probe "
                          "(its level sets are closed curves)")
    x = np.asarray(x, dtype=float)
    g1, t = _probe_tensors(spec, u, x, want_a3=False)
    H = u.hess(x)
    qu = float(np.tensordot(t.a, H))
    aff = float(t.grad @ H @ t.grad)

    B = u.B
    evals, evecs = np.linalg.eigh(B)
    sqB_inv = evecs @ np.diag(evals**-0.5) @ evecs.T
    rho = float(np.sqrt(x @ B @ x))
    C = rho * sqB_inv
    z = np.linalg.solve(C, x)
    s0 = float(np.arctan2(z[1], z[0])) % (2.0 * np.pi)
    s = np.linspace(0.0, 2.0 * np.pi, n_curve_samples, endpoint=False)
    cs, sn = np.cos(s), np.sin(s)
    pos = np.stack([cs, sn], axis=1) @ C.T
    d1 = np.stack([-sn, cs], axis=1) @ C.T
    d2 = -pos
    curve = SmoothBoundaryCurve(s, pos, d1, d2)
    hf = f_mean_curvature(curve, spec, s0)
    # the curve's normal points away from the center (along Bx); the
    # identity is oriented along -grad u/|grad u|, and H_F is odd under
    # flipping the normal
    if float(g1 @ (B @ x)) > 0.0:
        hf = -hf
    return abs(qu + t.value * hf - aff)


# ---------------------------------------------------------------------------
# FEM-level checks with discretization allowances
# ---------------------------------------------------------------------------


def _element_state(mesh: TriMesh, spec: NormSpec, eig: EigenResult):
    asm = P1Assembly(mesh)
    g = asm.element_gradients(eig.nodal_values)
    fvals = batch_value(_lower(spec), g)
    ubar = eig.nodal_values[asm.tri].mean(axis=1)
    centroids = mesh.nodes[asm.tri].mean(axis=1)
    return fvals, ubar, centroids


def gradient_comparison_check(mesh: TriMesh, spec: NormSpec, eig: EigenResult,
                              sol: OneDSolution, threshold: float = 0.05) -> CheckReport:
    """Per-triangle check of F(grad u) <= v'(v^{-1}(u)) against the matched
    1-D profile; violations are relative to max v' and positive-part only
    (the continuum inequality is exact, the discrete one carries an
    allowance)."""
    if not eig.converged:
        raise DomainError("gradient comparison needs a converged eigen result")
    fvals, ubar, centroids = _element_state(mesh, spec, eig)
    lo, hi = sol.v[0], sol.v[-1]
    if ubar.min() < lo - 1e-9 or ubar.max() > hi + 1e-9:
        raise DomainError(
            f"eigenfunction range [{ubar.min():.6f}, {ubar.max():.6f}] not inside "
            f"the model range [{lo:.6f}, {hi:.6f}]"
        )
    vmax = float(sol.v_prime.max())
    vp = v_prime_of_u(sol, np.clip(ubar, lo, hi))
    rel = (fvals - vp) / vmax
    i = int(np.argmax(rel))
    worst = max(0.0, float(rel[i]))
    return make_report(
        "gradient_comparison", len(rel), worst, centroids[i], threshold,
        signed_worst=float(rel[i]), model_m=float(sol.m), vmax=vmax,
    )


def neumann_gradient_bound_check(mesh: TriMesh, spec: NormSpec, eig: EigenResult,
                                 rel_threshold: float = 0.05) -> CheckReport:
    """F(grad u)^2 + lam u^2 <= lam max(u)^2 per triangle, allowance rel_threshold*lam."""
    if eig.bc != "neumann":
        raise DomainError("this bound applies to Neumann results")
    fvals, ubar, centroids = _element_state(mesh, spec, eig)
    lam = eig.lam
    cap = lam * float(np.max(np.abs(eig.nodal_values))) ** 2
    viol = fvals**2 + lam * ubar**2 - cap
    i = int(np.argmax(viol))
    return make_report(
        "neumann_gradient_bound", len(viol), max(0.0, float(viol[i])), centroids[i],
        rel_threshold * lam, signed_worst=float(viol[i]), lam=lam,
    )


def dirichlet_gradient_bound_check(mesh: TriMesh, spec: NormSpec, eig: EigenResult,
                                   alpha: float, rel_threshold: float = 0.05) -> CheckReport:
    """F^2(grad u) / ((alpha+1)^2 - (alpha+u)^2) <= lam per triangle."""
    if eig.bc != "dirichlet":
        raise DomainError("this bound applies to Dirichlet results")
    if not alpha > 0.0:
        raise DomainError("alpha must be > 0")
    fvals, ubar, centroids = _element_state(mesh, spec, eig)
    if ubar.min() < -1e-10 or ubar.max() > 1.0 + 1e-12:
        raise DomainError(
            f"Dirichlet values outside [0, 1] beyond clip tolerance: "
            f"[{ubar.min():.3e}, {ubar.max():.3e}]"
        )
    ubar = np.clip(ubar, 0.0, 1.0)
    lam = eig.lam
    denom = (alpha + 1.0) ** 2 - (alpha + ubar) ** 2
    assert np.all(denom > 0.0), "denominator must stay positive for u <= 1"
    viol = fvals**2 / denom - lam
    i = int(np.argmax(viol))
    return make_report(
        "dirichlet_gradient_bound", len(viol), max(0.0, float(viol[i])), centroids[i],
        rel_threshold * lam, signed_worst=float(viol[i]), alpha=alpha, lam=lam,
    )


def poincare_bound_report(lam: float, geom: float, kind: str,
                          slack: float = 1e-9) -> CheckReport:
    """One-sided eigenvalue bound: ratio lam d_F^2/pi^2 (neumann_diameter) or
    lam 4 i_F^2/pi^2 (dirichlet_inradius) must be >= 1 up to roundoff slack.

    lam is a certified upper bound of the true eigenvalue and the geometric
    quantity is exact, so the ratio being below 1 would falsify the bound.
    """
    if not (lam > 0.0 and geom > 0.0):
        raise DomainError("lam and the geometric quantity must be positive")
    if kind == "neumann_diameter":
        ratio = lam * geom**2 / np.pi**2
    elif kind == "dirichlet_inradius":
        ratio = lam * 4.0 * geom**2 / np.pi**2
    else:
        raise DomainError(f"unknown bound kind {kind!r}")
    return make_report(
        f"poincare_{kind}", 1, 1.0 - ratio, None, slack, ratio=float(ratio),
        lam=float(lam), geom=float(geom),
    )
