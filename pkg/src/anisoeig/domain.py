"""Convex polygonal domains: anisotropic diameter, inscribed Wulff radius,
conforming triangulation, and anisotropic mean curvature of smooth curves.

Polygons stand in for smooth weakly convex domains: their flat edges have
zero anisotropic mean curvature (so they are mean-convex for every gauge)
and their geometry is exact, which keeps the one-sided eigenvalue bound
checks free of boundary discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import ConfigurationError, NumericalError
from .dual_geometry import dual_norm
from .norms import NormSpec, eval_norm, eval_tensors, is_strongly_convex

__all__ = [
    "ConvexPolygon",
    "TriMesh",
    "SmoothBoundaryCurve",
    "diameter",
    "inscribed_wulff_radius",
    "triangulate",
    "refine_once",
    "f_mean_curvature",
    "f_mean_convexity_check",
    "random_convex_polygon",
    "regular_polygon",
    "rectangle",
    "dump_mesh",
]

_REL_TOL = 1e-12


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon, vertices counter-clockwise.

    Facets are derived as (outward unit normal n_k, offset b_k) with the
    polygon equal to the intersection of half-spaces <n_k, x> <= b_k.
    """

    vertices: np.ndarray
    normals: np.ndarray = field(init=False)
    offsets: np.ndarray = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ConfigurationError("polygon needs >= 3 two-dimensional vertices")
        scale = float(np.max(np.abs(v - v.mean(axis=0)))) or 1.0
        edges = np.roll(v, -1, axis=0) - v
        if np.min(np.linalg.norm(edges, axis=1)) <= _REL_TOL * scale:
            raise ConfigurationError("duplicate consecutive vertices")
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(
            edges, -1, axis=0
        )[:, 0]
        if np.min(cross) <= _REL_TOL * scale * scale:
            k = int(np.argmin(cross))
            raise ConfigurationError(
                f"vertex sequence not strictly convex counter-clockwise at "
                f"vertices ({k}, {k + 1}, {k + 2}) of {len(v)}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        # outward normal of edge (v_i -> v_{i+1}) for a CCW polygon
        nrm = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        nrm /= np.linalg.norm(nrm, axis=1)[:, None]
        nrm.flags.writeable = False
        object.__setattr__(self, "normals", nrm)
        off = np.einsum("ij,ij->i", nrm, v)
        off.flags.writeable = False
        object.__setattr__(self, "offsets", off)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def area(self) -> float:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def scaled(self, s: float) -> "ConvexPolygon":
        return ConvexPolygon(s * self.vertices)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.normals @ x <= self.offsets + tol))


def rectangle(width: float, height: float, origin=(0.0, 0.0)) -> ConvexPolygon:
    ox, oy = origin
    return ConvexPolygon(
        [[ox, oy], [ox + width, oy], [ox + width, oy + height], [ox, oy + height]]
    )


def regular_polygon(k: int, radius: float = 1.0, center=(0.0, 0.0)) -> ConvexPolygon:
    ang = 2.0 * np.pi * np.arange(k) / k
    return ConvexPolygon(np.asarray(center) + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1))


def random_convex_polygon(rng, n_points: int = 8, radius_range=(0.5, 1.5)) -> ConvexPolygon:
    """Seeded random strictly convex polygon (hull of a star-shaped sample)."""
    rng = np.random.default_rng(rng)
    for _ in range(100):
        ang = np.sort(rng.uniform(0.0, 2.0 * np.pi, n_points))
        rad = rng.uniform(*radius_range, n_points)
        pts = rad[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        hull = _convex_hull(pts)
        if len(hull) >= 3:
            try:
                return ConvexPolygon(hull)
            except ConfigurationError:
                continue
    raise NumericalError("failed to draw a strictly convex polygon")


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, CCW, strictly convex (collinear points dropped)."""
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    scale = float(np.max(np.abs(pts))) or 1.0
    tol = 1e-9 * scale * scale

    def half(seq):
        out = []
        for q in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                if (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) <= tol:
                    out.pop()
                else:
                    break
            out.append(q)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


# ---------------------------------------------------------------------------
# anisotropic diameter and inscribed Wulff radius
# ---------------------------------------------------------------------------


def diameter(poly: ConvexPolygon, spec: NormSpec) -> float:
    """sup of F0(x2 - x1) over the closed polygon: attained at vertex pairs.

    F0 is convex, so on the product of two convex hulls the supremum sits at
    extreme points; plain pair enumeration is exact and V is small.
    """
    v = poly.vertices
    best = 0.0
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            best = max(best, dual_norm(spec, v[j] - v[i]).value)
    return best


def inscribed_wulff_radius(poly: ConvexPolygon, spec: NormSpec):
    """Largest r with some Wulff ball {F0(. - x) <= r} inside the polygon.

    The ball of radius r at x fits in the half-space {<n, y> <= b} iff
    <n, x> + r F(n) <= b, because the support function of the unit Wulff
    ball (the dual unit ball) is the bidual F.  Maximizing r under those
    facet constraints is a linear program in (x, r); the reported duality
    gap of the LP solution is checked to 1e-10.

    Returns (radius, center).  The optimal center may be non-unique for
    degenerate anisotropies; any optimal vertex of the LP is returned.
    """
    n_facets = len(poly.normals)
    fn = np.array([eval_norm(spec, nk) for nk in poly.normals])
    c = np.zeros(3)
    c[2] = -1.0  # maximize r
    A_ub = np.concatenate([poly.normals, fn[:, None]], axis=1)
    res = linprog(c, A_ub=A_ub, b_ub=poly.offsets, bounds=[(None, None)] * 2 + [(0, None)],
                  method="highs")
    if not res.success:
        raise NumericalError(f"inscribed-radius LP failed: {res.message}")
    r = float(res.x[2])
    center = res.x[:2].copy()
    scale = max(1.0, float(np.max(np.abs(poly.offsets))))
    dual_obj = float(res.ineqlin.marginals @ poly.offsets)
    if abs(dual_obj - (-r)) > 1e-10 * scale:
        raise NumericalError(
            f"inscribed-radius LP duality gap {abs(dual_obj + r):.2e} above tolerance"
        )
    return r, center


# ---------------------------------------------------------------------------
# triangulation: centroid fan + uniform quadrisection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriMesh:
    """Conforming P1 triangulation of a convex polygon."""

    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3) int32, positively oriented
    boundary_nodes: np.ndarray  # sorted int32 indices
    refinement_level: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def interior_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return mask


def _boundary_nodes(triangles: np.ndarray, n_nodes: int) -> np.ndarray:
    edges = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    onb = np.zeros(n_nodes, dtype=bool)
    onb[uniq[counts == 1].ravel()] = True
    return np.flatnonzero(onb).astype(np.int32)


def triangulate(poly: ConvexPolygon, levels: int = 0) -> TriMesh:
    """Fan triangulation from the centroid, then `levels` quadrisections."""
    if not 0 <= levels <= 10:
        raise ConfigurationError(f"refinement levels must lie in [0, 10], got {levels}")
    v = poly.vertices
    k = len(v)
    nodes = np.vstack([v, poly.centroid()])
    tris = np.array([[i, (i + 1) % k, k] for i in range(k)], dtype=np.int32)
    mesh = TriMesh(nodes, tris, _boundary_nodes(tris, len(nodes)), 0)
    for _ in range(levels):
        mesh, _ = refine_once(mesh)
    return mesh


def refine_once(mesh: TriMesh):
    """Quadrisect every triangle; returns (fine mesh, edge-midpoint map).

    New nodes get indices after the old ones, so nodal fields prolong by
    copying old values and averaging the two edge endpoints at midpoints.
    """
    nodes = [mesh.nodes]
    n_old = mesh.n_nodes
    mid = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = mid.get(key)
        if idx is None:
            idx = n_old + len(mid)
            mid[key] = idx
            nodes.append(0.5 * (mesh.nodes[key[0]] + mesh.nodes[key[1]])[None, :])
        return idx

    tris = []
    for a, b, c in mesh.triangles:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        tris += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    tris = np.asarray(tris, dtype=np.int32)
    all_nodes = np.concatenate(nodes)
    fine = TriMesh(all_nodes, tris, _boundary_nodes(tris, len(all_nodes)),
                   mesh.refinement_level + 1)
    return fine, mid


def prolong(values: np.ndarray, mid: dict, n_fine: int) -> np.ndarray:
    """Nodal interpolation of a coarse field onto the quadrisected mesh."""
    out = np.empty(n_fine)
    out[: len(values)] = values
    for (a, b), idx in mid.items():
        out[idx] = 0.5 * (values[a] + values[b])
    return out


def dump_mesh(mesh: TriMesh, path) -> None:
    """Plain-text node/triangle table (stable format used by the CLI)."""
    onb = np.zeros(mesh.n_nodes, dtype=int)
    onb[mesh.boundary_nodes] = 1
    with open(path, "w") as fh:
        fh.write(
            f"# mesh level={mesh.refinement_level} nodes={mesh.n_nodes} "
            f"triangles={mesh.n_triangles}\n"
        )
        fh.write("# node index x y boundary\n")
        for i, (x, y) in enumerate(mesh.nodes):
            fh.write(f"node {i} {x:.17g} {y:.17g} {onb[i]}\n")
        fh.write("# triangle index n0 n1 n2\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            fh.write(f"triangle {i} {a} {b} {c}\n")


# ---------------------------------------------------------------------------
# anisotropic curvature of smooth closed curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothBoundaryCurve:
    """Closed counter-clockwise curve sampled with two derivatives.

    Arrays hold the parameter grid s in [0, 2 pi), positions gamma(s) and
    the exact first and second parameter derivatives.
    """

    s: np.ndarray
    position: np.ndarray
    deriv1: np.ndarray
    deriv2: np.ndarray

    def __post_init__(self):
        sp = np.linalg.norm(self.deriv1, axis=1)
        if np.min(sp) <= 0.0:
            raise ConfigurationError("curve parameterization has a stationary point")
        tang = self.deriv1 / sp[:, None]
        dots = np.clip(np.einsum("ij,ij->i", tang, np.roll(tang, -1, axis=0)), -1, 1)
        if np.max(np.arccos(dots)) >= 0.1:
            raise ConfigurationError(
                "curve sampling too coarse: adjacent tangent angles differ by >= 0.1 rad"
            )

    @classmethod
    def from_functions(cls, gamma, dgamma, d2gamma, n_samples: int = 512):
        s = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
        return cls(s, np.array([gamma(t) for t in s]), np.array([dgamma(t) for t in s]),
                   np.array([d2gamma(t) for t in s]))

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0), n_samples: int = 512):
        s = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
        cx, cy = center
        pos = np.stack([cx + a * np.cos(s), cy + b * np.sin(s)], axis=1)
        d1 = np.stack([-a * np.sin(s), b * np.cos(s)], axis=1)
        d2 = np.stack([-a * np.cos(s), -b * np.sin(s)], axis=1)
        return cls(s, pos, d1, d2)

    @classmethod
    def circle(cls, radius: float, center=(0.0, 0.0), n_samples: int = 512):
        return cls.ellipse(radius, radius, center, n_samples)

    def at(self, s: float):
        """Position and derivatives at parameter s by exact-grid lookup or
        4-point Lagrange interpolation between samples."""
        s = float(s) % (2.0 * np.pi)
        j = int(np.argmin(np.abs(self.s - s)))
        if abs(self.s[j] - s) < 1e-13:
            return self.position[j], self.deriv1[j], self.deriv2[j]
        idx = np.searchsorted(self.s, s)
        js = (idx - 2 + np.arange(4)) % len(self.s)
        sj = self.s[js]
        sj = sj + 2.0 * np.pi * (np.arange(4) + (idx - 2) >= len(self.s))
        w = np.array([
            np.prod([(s - sj[k]) / (sj[i] - sj[k]) for k in range(4) if k != i])
            for i in range(4)
        ])
        return tuple(w @ arr[js] for arr in (self.position, self.deriv1, self.deriv2))


def _curvature_data(curve: SmoothBoundaryCurve, idx=None):
    """Outward normal nu, its parameter derivative, and |gamma'| per sample."""
    d1 = curve.deriv1 if idx is None else np.atleast_2d(curve.deriv1[idx])
    d2 = curve.deriv2 if idx is None else np.atleast_2d(curve.deriv2[idx])
    sp = np.linalg.norm(d1, axis=1)
    rot = np.stack([d1[:, 1], -d1[:, 0]], axis=1)  # outward for CCW orientation
    nu = rot / sp[:, None]
    drot = np.stack([d2[:, 1], -d2[:, 0]], axis=1)
    dsp = np.einsum("ij,ij->i", d1, d2) / sp
    dnu = drot / sp[:, None] - rot * (dsp / sp**2)[:, None]
    return nu, dnu, d1, sp


def _hf_from_data(spec: NormSpec, nu, dnu, d1, sp):
    out = np.empty(len(nu))
    for i in range(len(nu)):
        t = eval_tensors(spec, nu[i])
        fxx = (t.a - np.outer(t.grad, t.grad)) / t.value
        out[i] = (fxx @ dnu[i]) @ d1[i] / sp[i] ** 2
    return out


def f_mean_curvature(curve: SmoothBoundaryCurve, spec: NormSpec, s: float) -> float:
    """Anisotropic mean curvature H_F at parameter s (euclidean: classical).

    With coordinate tangent gamma', outward normal nu, and F's spherical
    Hessian F_xixi evaluated at nu:  H_F = <F_xixi(nu) dnu/ds, gamma'> / |gamma'|^2.
    """
    if not is_strongly_convex(spec):
        raise ConfigurationError(
            "anisotropic curvature needs a strongly convex gauge; wrap the "
            "spec in regularize()"
        )
    pos, d1, d2 = curve.at(s)
    sp = np.linalg.norm(d1)
    nu = np.array([d1[1], -d1[0]]) / sp
    dnu = (np.array([d2[1], -d2[0]]) - nu * (d1 @ d2) / sp) / sp
    t = eval_tensors(spec, nu)
    fxx = (t.a - np.outer(t.grad, t.grad)) / t.value
    return float((fxx @ dnu) @ d1 / sp**2)


def f_mean_convexity_check(curve: SmoothBoundaryCurve, spec: NormSpec, threshold: float = -1e-8):
    """Minimum of H_F over the sample grid; (min, s_at_min, passed)."""
    if not is_strongly_convex(spec):
        raise ConfigurationError(
            "anisotropic curvature needs a strongly convex gauge; wrap the "
            "spec in regularize()"
        )
    hf = _hf_from_data(spec, *_curvature_data(curve))
    i = int(np.argmin(hf))
    return float(hf[i]), float(curve.s[i]), bool(hf[i] >= threshold)
