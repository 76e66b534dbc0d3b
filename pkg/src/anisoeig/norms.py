"""Anisotropic norms and their derivative tensors.

A norm F here is an even, positively 1-homogeneous convex gauge on R^n,
described symbolically by a :class:`NormSpec` from a closed family:

* ``euclidean``           F(xi) = |xi|
* ``p_norm``              F(xi) = (sum |xi_i|^p)^(1/p), p > 1
* ``quadratic``           F(xi) = sqrt(xi^T A xi), A symmetric positive definite
* ``regularized``         F(xi) = sqrt(base(xi)^2 + eps |xi|^2)

All derived tensors (the gradient F_xi, the Hessian a = D^2(F^2/2) and the
third-derivative tensor a3 = D^3(F^2/2)) are hand-derived closed forms per
family; nothing is finite-differenced.  Regularization is additive in the
half-square, so nested specs lower to one of three core kinds plus an eps
channel, which is also what the compiled FEM kernel consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, SingularityError

__all__ = [
    "NormSpec",
    "NormTensors",
    "euclidean",
    "p_norm",
    "quadratic",
    "regularize",
    "eval_norm",
    "eval_tensors",
    "is_strongly_convex",
    "min_gauge_ratio",
]

_SYM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Symbolic description of a norm; single source for F and its tensors."""

    family: str
    n: int = 2
    p: float | None = None
    A: np.ndarray | None = None
    base: "NormSpec | None" = None
    eps: float | None = None

    def __post_init__(self):
        if self.family not in ("euclidean", "p_norm", "quadratic", "regularized"):
            raise ConfigurationError(f"unknown norm family {self.family!r}")
        if self.n < 1:
            raise ConfigurationError(f"spatial dimension must be >= 1, got {self.n}")
        if self.family == "p_norm":
            if self.p is None or not self.p > 1.0:
                raise ConfigurationError(
                    f"p_norm requires p > 1 (C^1 smoothness away from 0), got {self.p}"
                )
        if self.family == "quadratic":
            if self.A is None:
                raise ConfigurationError("quadratic norm requires matrix A")
            A = np.asarray(self.A, dtype=float)
            if A.shape != (self.n, self.n):
                raise ConfigurationError(f"A must be {self.n}x{self.n}, got {A.shape}")
            if np.max(np.abs(A - A.T)) > _SYM_TOL * max(1.0, np.max(np.abs(A))):
                raise ConfigurationError("A must be symmetric")
            if np.linalg.eigvalsh(A)[0] <= 0.0:
                raise ConfigurationError("A must be positive definite")
            A = 0.5 * (A + A.T)
            A.flags.writeable = False
            object.__setattr__(self, "A", A)
        if self.family == "regularized":
            if self.base is None:
                raise ConfigurationError("regularized norm requires a base spec")
            if self.base.n != self.n:
                raise ConfigurationError("base spec dimension mismatch")
            if self.eps is None or not self.eps > 0.0:
                raise ConfigurationError(f"regularization eps must be > 0, got {self.eps}")

    def __repr__(self):
        if self.family == "euclidean":
            return f"NormSpec(euclidean, n={self.n})"
        if self.family == "p_norm":
            return f"NormSpec(p_norm, p={self.p}, n={self.n})"
        if self.family == "quadratic":
            return f"NormSpec(quadratic, A={self.A.tolist()})"
        return f"NormSpec(regularized, base={self.base!r}, eps={self.eps})"


@dataclass(frozen=True)
class NormTensors:
    """F and its derivative tensors at one point xi != 0.

    ``value`` is F(xi), ``grad`` is F_xi (0-homogeneous), ``a`` is the
    Hessian of F^2/2 at xi, and ``a3`` its symmetric third derivative
    (present only on request).
    """

    value: float
    grad: np.ndarray
    a: np.ndarray
    a3: np.ndarray | None = None


def euclidean(n: int = 2) -> NormSpec:
    return NormSpec("euclidean", n=n)


def p_norm(p: float, n: int = 2) -> NormSpec:
    return NormSpec("p_norm", n=n, p=float(p))


def quadratic(A) -> NormSpec:
    A = np.asarray(A, dtype=float)
    return NormSpec("quadratic", n=A.shape[0], A=A)


def regularize(spec: NormSpec, eps: float) -> NormSpec:
    """Strongly convex regularization sqrt(F^2 + eps |xi|^2) of ``spec``."""
    if not eps > 0.0:
        raise ConfigurationError(f"regularization eps must be > 0, got {eps}")
    return NormSpec("regularized", n=spec.n, base=spec, eps=float(eps))


# ---------------------------------------------------------------------------
# Lowering: every spec reduces to (kind, p, A, eps) with kind one of
# "euclidean" (pure), "pnorm" (p, eps >= 0), "quadratic" (eps folded into A).
# Regularization stacks additively: sqrt((F^2 + e1|.|^2) + e2|.|^2).
# ---------------------------------------------------------------------------

_KIND_EUCLIDEAN = 0
_KIND_PNORM = 1
_KIND_QUADRATIC = 2


@dataclass(frozen=True)
class _Lowered:
    kind: int
    n: int
    p: float = 0.0
    A: np.ndarray | None = None
    eps: float = 0.0


def _lower(spec: NormSpec, extra_eps: float = 0.0) -> _Lowered:
    if spec.family == "regularized":
        return _lower(spec.base, extra_eps + spec.eps)
    if spec.family == "euclidean" or (spec.family == "p_norm" and spec.p == 2.0):
        if extra_eps == 0.0:
            return _Lowered(_KIND_EUCLIDEAN, spec.n)
        return _Lowered(_KIND_QUADRATIC, spec.n, A=(1.0 + extra_eps) * np.eye(spec.n))
    if spec.family == "quadratic":
        A = spec.A if extra_eps == 0.0 else spec.A + extra_eps * np.eye(spec.n)
        return _Lowered(_KIND_QUADRATIC, spec.n, A=np.asarray(A, dtype=float))
    return _Lowered(_KIND_PNORM, spec.n, p=spec.p, eps=extra_eps)


def _check_dim(spec: NormSpec, xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (spec.n,):
        raise DomainError(f"expected a {spec.n}-vector, got shape {xi.shape}")
    return xi


def eval_norm(spec: NormSpec, xi) -> float:
    """Evaluate F(xi).  Defined for every xi, including the origin."""
    xi = _check_dim(spec, xi)
    low = _lower(spec)
    if low.kind == _KIND_EUCLIDEAN:
        return float(np.linalg.norm(xi))
    if low.kind == _KIND_QUADRATIC:
        return float(np.sqrt(xi @ low.A @ xi))
    fp = float(np.sum(np.abs(xi) ** low.p) ** (1.0 / low.p))
    if low.eps == 0.0:
        return fp
    return float(np.sqrt(fp * fp + low.eps * (xi @ xi)))


def eval_tensors(spec: NormSpec, xi, want_a3: bool = False) -> NormTensors:
    """F, F_xi, a = D^2(F^2/2) and optionally a3 = D^3(F^2/2) at xi != 0."""
    xi = _check_dim(spec, xi)
    if not np.any(xi):
        raise DomainError("tensors undefined at origin")
    low = _lower(spec)
    n = low.n

    if low.kind == _KIND_EUCLIDEAN:
        value = float(np.linalg.norm(xi))
        grad = xi / value
        a = np.eye(n)
        a3 = np.zeros((n, n, n)) if want_a3 else None
        return NormTensors(value, grad, a, a3)

    if low.kind == _KIND_QUADRATIC:
        Axi = low.A @ xi
        value = float(np.sqrt(xi @ Axi))
        grad = Axi / value
        a3 = np.zeros((n, n, n)) if want_a3 else None
        return NormTensors(value, grad, low.A.copy(), a3)

    return _pnorm_tensors(low, xi, want_a3)


def _pnorm_tensors(low: _Lowered, xi: np.ndarray, want_a3: bool) -> NormTensors:
    p, eps, n = low.p, low.eps, low.n
    ax = np.abs(xi)
    sx = np.sign(xi)
    has_zero = bool(np.any(ax == 0.0))
    if has_zero and p < 2.0:
        raise SingularityError(
            f"p_norm Hessian singular at a zero component for p={p} < 2; "
            "wrap the spec in regularize() for robustness"
        )
    if has_zero and want_a3 and p <= 3.0:
        raise SingularityError(
            f"p_norm third derivatives blow up at zero components for p={p} <= 3"
        )

    s = float(np.sum(ax**p))
    fp = s ** (1.0 / p)
    w = ax ** (p - 1.0) * sx
    r = ax ** (p - 2.0)
    fp2mp = fp ** (2.0 - p)  # F_p^(2-p)

    # half-square gradient G = F_p^(2-p) w + eps xi, then F_xi = G / F
    value = fp if eps == 0.0 else float(np.sqrt(fp * fp + eps * (xi @ xi)))
    G = fp2mp * w + eps * xi
    grad = G / value

    a = (p - 1.0) * fp2mp * np.diag(r) + (2.0 - p) * fp ** (2.0 - 2.0 * p) * np.outer(w, w)
    if eps != 0.0:
        a = a + eps * np.eye(n)

    a3 = None
    if want_a3:
        t = ax ** (p - 3.0) * sx
        eye3 = np.zeros((n, n, n))
        idx = np.arange(n)
        eye3[idx, idx, idx] = 1.0
        term1 = (p - 1.0) * (p - 2.0) * fp2mp * (eye3 * t[:, None, None])
        rd = np.diag(r)
        term2 = (p - 1.0) * (2.0 - p) * fp ** (2.0 - 2.0 * p) * (
            rd[:, :, None] * w[None, None, :]
            + rd[:, None, :] * w[None, :, None]
            + rd[None, :, :] * w[:, None, None]
        )
        term3 = (2.0 - p) * (2.0 - 2.0 * p) * fp ** (2.0 - 3.0 * p) * (
            w[:, None, None] * w[None, :, None] * w[None, None, :]
        )
        a3 = term1 + term2 + term3
    return NormTensors(value, grad, a, a3)


def is_strongly_convex(spec: NormSpec) -> bool:
    """True when Hess(F^2) is positive definite away from the origin."""
    low = _lower(spec)
    if low.kind in (_KIND_EUCLIDEAN, _KIND_QUADRATIC):
        return True
    return low.eps > 0.0  # p != 2 p-norms degenerate on coordinate axes


def min_gauge_ratio(spec: NormSpec) -> float:
    """A positive c with F(xi) >= c |xi| for all xi (used for certified gaps)."""
    low = _lower(spec)
    if low.kind == _KIND_EUCLIDEAN:
        return 1.0
    if low.kind == _KIND_QUADRATIC:
        return float(np.sqrt(np.linalg.eigvalsh(low.A)[0]))
    c = 1.0 if low.p <= 2.0 else float(low.n ** (1.0 / low.p - 0.5))
    return float(np.sqrt(c * c + low.eps))


# ---------------------------------------------------------------------------
# Batched evaluation over element gradients, the FEM kernel's inner payload:
# F^2 and G = grad of F^2/2 for an (m, n) array of vectors.  Rows that are
# exactly zero contribute F^2 = 0 and G = 0 (the continuous extension).
# ---------------------------------------------------------------------------


def batch_sq_and_halfgrad(low: _Lowered, g: np.ndarray):
    """Return (F^2(g_i), grad(F^2/2)(g_i)) for each row of g."""
    if low.kind == _KIND_EUCLIDEAN:
        return np.einsum("ij,ij->i", g, g), g.copy()
    if low.kind == _KIND_QUADRATIC:
        G = g @ low.A
        return np.einsum("ij,ij->i", g, G), G
    p, eps = low.p, low.eps
    ag = np.abs(g)
    s = np.sum(ag**p, axis=1)
    nz = s > 0.0
    f2 = np.zeros(len(g))
    G = np.zeros_like(g)
    if np.any(nz):
        sn = s[nz]
        f2[nz] = sn ** (2.0 / p)
        scale = sn ** ((2.0 - p) / p)
        G[nz] = scale[:, None] * (ag[nz] ** (p - 1.0) * np.sign(g[nz]))
    if eps != 0.0:
        f2 = f2 + eps * np.einsum("ij,ij->i", g, g)
        G = G + eps * g
    return f2, G


def batch_value(low: _Lowered, g: np.ndarray) -> np.ndarray:
    """F(g_i) for each row of g."""
    return np.sqrt(batch_sq_and_halfgrad(low, g)[0])


def batch_value_and_fgrad(low: _Lowered, g: np.ndarray):
    """(F(g_i), F_xi(g_i)) for rows g_i != 0."""
    f2, G = batch_sq_and_halfgrad(low, g)
    f = np.sqrt(f2)
    return f, G / f[:, None]


def batch_hessian(low: _Lowered, g: np.ndarray) -> np.ndarray:
    """Hessian of F^2/2 at each row of g (rows must avoid singular points)."""
    m, n = g.shape
    if low.kind == _KIND_EUCLIDEAN:
        return np.broadcast_to(np.eye(n), (m, n, n)).copy()
    if low.kind == _KIND_QUADRATIC:
        return np.broadcast_to(low.A, (m, n, n)).copy()
    p, eps = low.p, low.eps
    ag = np.abs(g)
    s = np.sum(ag**p, axis=1)
    w = ag ** (p - 1.0) * np.sign(g)
    r = ag ** (p - 2.0)
    a = (2.0 - p) * (s ** ((2.0 - 2.0 * p) / p))[:, None, None] * (
        w[:, :, None] * w[:, None, :]
    )
    diag = (p - 1.0) * (s ** ((2.0 - p) / p))[:, None] * r
    idx = np.arange(n)
    a[:, idx, idx] += diag
    if eps != 0.0:
        a[:, idx, idx] += eps
    return a
