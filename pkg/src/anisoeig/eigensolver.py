"""First Dirichlet/Neumann eigenvalue of the anisotropic Laplacian by
Rayleigh-quotient minimization over conforming P1 elements.

Everything rests on one exactness property: piecewise-linear trial
functions have a constant gradient per triangle, so the energy
sum |T| F(grad u|_T)^2 and the P1 mass integrals are computed exactly
(no quadrature).  Constraints (zero trace, zero mean) are imposed
exactly, so every reported quotient is the true Rayleigh quotient of an
admissible continuum function and therefore an upper bound for the first
eigenvalue up to roundoff.  That one-sidedness is what makes the
Poincare-type bound checks rigorous.

The minimizer is projected gradient descent with monotone line search:
exact ratio-of-quadratics steps for euclidean/quadratic gauges, a
Barzilai-Borwein guess safeguarded by Armijo backtracking otherwise.
A Newton method is deliberately avoided: the energy Hessian degenerates
wherever an element gradient vanishes, while the energy gradient only
needs F F_xi, which extends continuously by zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import energy_and_gradient as _kernel_energy_grad
from ._kernels import mass_and_action as _kernel_mass_and_action
from ._kernels import mass_value as _kernel_mass_value
from .domain import ConvexPolygon, TriMesh, prolong, refine_once, triangulate
from .errors import ConfigurationError, NumericalError
from .norms import NormSpec, _KIND_PNORM, _lower, regularize

__all__ = [
    "SolverOptions",
    "EigenProblem",
    "EigenResult",
    "P1Assembly",
    "energy_and_gradient",
    "mass_integrals",
    "solve_first_eigen",
    "refine_and_solve",
]


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 50000
    grad_tol: float = 1e-6
    restarts: int = 2
    seed: int = 0
    eps_schedule: tuple = ()

    def __post_init__(self):
        if not self.grad_tol > 0.0:
            raise ConfigurationError("grad_tol must be > 0")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if list(self.eps_schedule) != sorted(self.eps_schedule, reverse=True):
            raise ConfigurationError("eps_schedule must be decreasing")


@dataclass(frozen=True)
class EigenProblem:
    polygon: ConvexPolygon
    spec: NormSpec
    bc: str
    level: int = 3
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.bc not in ("dirichlet", "neumann"):
            raise ConfigurationError(f"bc must be dirichlet or neumann, got {self.bc!r}")

    def mesh(self) -> TriMesh:
        return triangulate(self.polygon, self.level)


@dataclass
class EigenResult:
    lam: float
    nodal_values: np.ndarray
    energy: float
    mass: float
    mean: float | None
    trace: np.ndarray  # (iterations, 2): quotient, projected-gradient norm
    converged: bool
    zero_grad_area: float
    level: int
    bc: str


class P1Assembly:
    """Precomputed element data: shape-function gradients, areas, load vector."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        tri = np.ascontiguousarray(mesh.triangles, dtype=np.int32)
        p = mesh.nodes[tri]
        e0 = p[:, 2] - p[:, 1]
        e1 = p[:, 0] - p[:, 2]
        e2 = p[:, 1] - p[:, 0]
        areas = 0.5 * (e2[:, 0] * (-e1[:, 1]) - e2[:, 1] * (-e1[:, 0]))
        if np.min(areas) <= 0.0:
            raise ConfigurationError("mesh has a non-positively-oriented triangle")
        grads = np.stack([e0, e1, e2], axis=1)
        grads = np.stack([-grads[:, :, 1], grads[:, :, 0]], axis=2)
        grads /= (2.0 * areas)[:, None, None]
        self.tri = tri
        self.areas = np.ascontiguousarray(areas)
        self.grads = np.ascontiguousarray(grads)
        self.n_nodes = mesh.n_nodes
        # c_i = integral of the i-th hat function; c @ u = integral of u
        self.load = np.bincount(
            tri.ravel(), weights=np.repeat(self.areas / 3.0, 3), minlength=self.n_nodes
        )
        self.domain_area = float(self.areas.sum())

    def energy_grad(self, low, u):
        return _kernel_energy_grad(self.tri, self.grads, self.areas, u, low)

    def mass(self, u) -> float:
        return _kernel_mass_value(self.tri, self.areas, u)

    def mass_action(self, u) -> np.ndarray:
        return _kernel_mass_and_action(self.tri, self.areas, u)[1]

    def mean(self, u) -> float:
        return float(self.load @ u)

    def element_gradients(self, u) -> np.ndarray:
        return np.einsum("tv,tvd->td", u[self.tri], self.grads)


def energy_and_gradient(mesh: TriMesh, spec: NormSpec, nodal):
    """Exact energy and its nodal gradient for P1 values ``nodal``."""
    asm = P1Assembly(mesh)
    nodal = np.ascontiguousarray(nodal, dtype=float)
    energy, grad, _ = asm.energy_grad(_lower(spec), nodal)
    return energy, grad


def mass_integrals(mesh: TriMesh, nodal):
    """Exact (integral of u^2, integral of u) for P1 values ``nodal``."""
    asm = P1Assembly(mesh)
    nodal = np.asarray(nodal, dtype=float)
    return asm.mass(nodal), asm.mean(nodal)


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------


def _impose(asm: P1Assembly, bc: str, bmask, u):
    """Re-impose the affine constraint exactly (in place allowed)."""
    if bc == "dirichlet":
        u[bmask] = 0.0
    else:
        u -= (asm.load @ u) / asm.domain_area  # mass-weighted zero-mean projection
    return u


def _project_tangent(asm: P1Assembly, bc: str, bmask, g):
    if bc == "dirichlet":
        g[bmask] = 0.0
        return g
    c = asm.load
    return g - (c @ g) / (c @ c) * c


def _exact_linesearch_t(a, b, c, d, e):
    """Minimizing t for (a - 2bt + ct^2)/(1 - 2dt + et^2), or None.

    Stationarity is the quadratic (ad - b) + (c - ae) t + (be - cd) t^2 = 0.
    """
    c2, c1, c0 = b * e - c * d, c - a * e, a * d - b
    cands = []
    if abs(c2) > 0.0:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc >= 0.0:
            rt = np.sqrt(disc)
            cands = [(-c1 + rt) / (2.0 * c2), (-c1 - rt) / (2.0 * c2)]
    elif abs(c1) > 0.0:
        cands = [-c0 / c1]
    best_t, best_val = None, a
    for t in cands:
        if not np.isfinite(t) or t <= 0.0:
            continue
        m = 1.0 - 2.0 * d * t + e * t * t
        if m <= 0.0:
            continue
        val = (a - 2.0 * b * t + c * t * t) / m
        if val < best_val:
            best_t, best_val = t, val
    return best_t


def _minimize(asm: P1Assembly, low, bc: str, u0, opts: SolverOptions):
    """Monotone first-order descent on the quotient.

    Directions are conjugate-gradient combinations of projected quotient
    gradients (Polak-Ribiere with automatic reset), so only first
    derivatives of the energy are ever used.  For euclidean/quadratic
    gauges the energy restricted to a line is a quadratic, so the trial
    step minimizes the 1-D ratio of quadratics exactly; every step is
    then Armijo-checked against the quotient, which keeps the iteration
    trace nonincreasing for every gauge.
    """
    bmask = np.zeros(asm.n_nodes, dtype=bool)
    bmask[asm.mesh.boundary_nodes] = True
    quad_energy = low.kind != _KIND_PNORM  # exact line search available

    u = _impose(asm, bc, bmask, np.array(u0, dtype=float))
    m = asm.mass(u)
    if m <= 0.0:
        raise NumericalError("initial iterate has zero mass after projection")
    u /= np.sqrt(m)
    energy, ge, _ = asm.energy_grad(low, u)
    quotient = energy
    trace = []
    step = 1.0 / max(quotient, 1.0)
    g_prev = None
    d = None
    converged = False

    for _ in range(opts.max_iters):
        mu = asm.mass_action(u)
        g = ge - 2.0 * quotient * mu
        g = _project_tangent(asm, bc, bmask, g)
        gn = float(np.linalg.norm(g))
        trace.append((quotient, gn))
        if gn <= opts.grad_tol:
            converged = True
            break

        if d is None or g_prev is None:
            d = -g
        else:
            beta = max(0.0, float(g @ (g - g_prev)) / float(g_prev @ g_prev))
            d = -g + beta * d
            if float(d @ g) > -1e-12 * gn * float(np.linalg.norm(d)):
                d = -g  # restart when conjugacy degrades to non-descent
        g_prev = g
        slope = float(d @ g)  # < 0

        t = step
        if quad_energy:
            ed, _, _ = asm.energy_grad(low, d)
            t_exact = _exact_linesearch_t(
                quotient, -0.5 * float(ge @ d), ed,
                -float(mu @ d), asm.mass(d),
            )
            if t_exact is not None:
                t = t_exact

        def evaluate(tt):
            u_t = _impose(asm, bc, bmask, u + tt * d)
            m_t = asm.mass(u_t)
            if m_t <= 0.0:
                return None
            u_t /= np.sqrt(m_t)
            e_t, ge_t, _ = asm.energy_grad(low, u_t)
            return u_t, e_t, ge_t

        accepted = False
        for _ in range(70):
            cand = evaluate(t)
            if cand is not None and cand[1] <= quotient + 1e-4 * t * slope:
                if not quad_energy:
                    # non-quadratic energy: bracket forward and refine the
                    # step by one parabolic fit before committing
                    t_hi, best_t, best = 2.0 * t, t, cand
                    for _ in range(12):
                        nxt = evaluate(t_hi)
                        if nxt is None or nxt[1] >= best[1]:
                            break
                        best_t, best = t_hi, nxt
                        t_hi *= 2.0
                    ts = np.array([0.0, best_t, 2.0 * best_t])
                    es = np.array([quotient, best[1],
                                   (nxt[1] if nxt is not None else np.inf)])
                    denom = (ts[2] - ts[1]) * es[0] + (ts[0] - ts[2]) * es[1] + (ts[1] - ts[0]) * es[2]
                    if np.isfinite(denom) and denom > 0.0:
                        t_star = 0.5 * (
                            (ts[2] ** 2 - ts[1] ** 2) * es[0]
                            + (ts[0] ** 2 - ts[2] ** 2) * es[1]
                            + (ts[1] ** 2 - ts[0] ** 2) * es[2]
                        ) / denom
                        if np.isfinite(t_star) and 0.0 < t_star:
                            ref = evaluate(t_star)
                            if ref is not None and ref[1] < best[1]:
                                best_t, best = t_star, ref
                    t, cand = best_t, best
                u, quotient, ge = cand
                step = t
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if d is not None and float(d @ g) < 0 and np.any(d != -g):
                d = None  # retry from steepest descent before giving up
                g_prev = None
                continue
            break  # line search exhausted at float precision
    else:
        g = _project_tangent(asm, bc, bmask, ge - 2.0 * quotient * asm.mass_action(u))
        gn = float(np.linalg.norm(g))
        trace.append((quotient, gn))
        converged = gn <= opts.grad_tol

    return u, quotient, np.asarray(trace), converged


def _normalize_sign_and_scale(asm: P1Assembly, bc: str, u: np.ndarray) -> np.ndarray:
    """Neumann: min u = -1 (larger side negative); Dirichlet: max u = 1."""
    if bc == "neumann":
        if u.max() > -u.min():
            u = -u
        return u / (-u.min())
    if abs(u.min()) > abs(u.max()):
        u = -u
    return u / u.max()


def solve_first_eigen(problem: EigenProblem, mesh: TriMesh | None = None,
                      warm_start: np.ndarray | None = None) -> EigenResult:
    """Minimize the Rayleigh quotient; returns the best over seeded restarts.

    With a nonempty eps_schedule the regularized gauges are solved in
    sequence (warm-starting each stage); the returned quotient is always
    re-evaluated with the problem's own gauge, so the upper-bound
    certificate refers to the gauge the caller asked about.
    """
    mesh = mesh if mesh is not None else problem.mesh()
    asm = P1Assembly(mesh)
    opts = problem.options
    bc = problem.bc
    if bc == "dirichlet" and not np.any(mesh.interior_mask()):
        raise ConfigurationError("mesh has no interior nodes for a Dirichlet solve")

    stages = [regularize(problem.spec, e) for e in opts.eps_schedule] or [problem.spec]
    rng = np.random.default_rng(opts.seed)
    if warm_start is not None:
        # a warm start continues an established branch; random restarts are
        # only the cold-start guard against non-first eigenpair stagnation
        starts = [np.array(warm_start, dtype=float)]
    else:
        starts = [rng.standard_normal(asm.n_nodes) for _ in range(opts.restarts)]

    best = None
    for u0 in starts:
        u, q, trace, conv = _minimize(asm, _lower(stages[0]), bc, u0, opts)
        for stage_spec in stages[1:]:
            u, q, t2, conv = _minimize(asm, _lower(stage_spec), bc, u, opts)
            trace = np.concatenate([trace, t2])
        if best is None or q < best[1]:
            best = (u, q, trace, conv)

    u, _, trace, conv = best
    u = _normalize_sign_and_scale(asm, bc, u)
    low = _lower(problem.spec)
    energy, _, zero_area = asm.energy_grad(low, u)
    mass = asm.mass(u)
    return EigenResult(
        lam=energy / mass,
        nodal_values=u,
        energy=energy,
        mass=mass,
        mean=asm.mean(u) if bc == "neumann" else None,
        trace=trace,
        converged=conv,
        zero_grad_area=zero_area,
        level=mesh.refinement_level,
        bc=bc,
    )


def refine_and_solve(problem: EigenProblem, levels) -> list[EigenResult]:
    """One solve per level, warm-started by nodal interpolation.

    Quadrisection nests the P1 spaces and the prolonged iterate is the
    same continuum function, so the quotient sequence is nonincreasing.
    Appends a Richardson extrapolation of the last pair as documentation
    (returned separately by the CLI, never used in bound checks).
    """
    levels = list(levels)
    if levels != sorted(levels) or len(set(levels)) != len(levels):
        raise ConfigurationError("levels must be strictly increasing")
    mesh = triangulate(problem.polygon, levels[0])
    results = []
    warm = None
    for i, lvl in enumerate(levels):
        res = solve_first_eigen(problem, mesh=mesh, warm_start=warm)
        results.append(res)
        if i + 1 < len(levels):
            warm = res.nodal_values
            for _ in range(levels[i + 1] - lvl):
                mesh, mid = refine_once(mesh)
                warm = prolong(warm, mid, mesh.n_nodes)
    return results


def richardson_extrapolate(results) -> float | None:
    """Order-2 extrapolation from the last two refinement levels."""
    if len(results) < 2:
        return None
    l1, l2 = results[-2].lam, results[-1].lam
    return l2 + (l2 - l1) / 3.0
