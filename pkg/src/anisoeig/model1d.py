"""One-dimensional comparison profiles for eigenfunction gradients.

The model problem is  v'' - T v' = -lam v  with  v(a) = -1, v'(a) = 0,
where T(t) = -(n-1)/t (radial drift) or T = 0, solved on the monotone
branch [a, b] up to the first stationary point b of v.  The quantities
delta(a) = b - a and m(a) = v(b) feed two facts used by the bound checks:
delta(a) > pi/sqrt(lam) with limit pi/sqrt(lam) as a -> infinity, and
m(a) < 1 with limit 1.

Everything is integrated once at lam = 1 and rescaled: if v1 solves the
unit problem from a1 = a sqrt(lam), then v(t) = v1(t sqrt(lam)) solves the
general one, with v' picking up a factor sqrt(lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, NumericalError

__all__ = [
    "OneDModel",
    "OneDSolution",
    "solve_model",
    "solution_for",
    "delta",
    "match_model",
    "v_prime_of_u",
]

_GRID_SIZE = 4001
_SERIES_STEP = 1e-4


@dataclass(frozen=True)
class OneDModel:
    n: int
    lam: float
    kind: str  # "T_zero" | "T_radial"
    a: float  # >= 0; math.inf means the translation-invariant T_zero limit
    clamped: bool = False  # set by match_model when umax fell below m(0)

    def __post_init__(self):
        if self.kind not in ("T_zero", "T_radial"):
            raise ConfigurationError(f"unknown 1-D model kind {self.kind!r}")
        if self.n < 1:
            raise ConfigurationError("dimension parameter n must be >= 1")
        if not self.lam > 0.0:
            raise ConfigurationError("lam must be > 0")
        if self.kind == "T_radial" and not (self.a >= 0.0 and math.isfinite(self.a)):
            raise ConfigurationError("radial model requires finite a >= 0")
        if math.isinf(self.a) and self.kind != "T_zero":
            raise ConfigurationError("a = infinity is reserved for the T_zero limit")


@dataclass(frozen=True)
class OneDSolution:
    """Sampled monotone branch: v increasing from -1 at a to m = v(b) at b."""

    t_grid: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    b: float
    delta: float
    m: float


def _integrate_unit(n: int, kind: str, a: float):
    """Solve the lam = 1 problem from a in the shifted variable tau = t - a.

    Shifting keeps full precision for arbitrarily large a (the matching scan
    can push a to 1e8 and beyond when an eigenfunction maximum sits close
    to 1).  Returns (dense solution over tau, branch length delta).
    """

    def rhs(tau, y):
        # v'' = T v' - v with T = -(n-1)/(a + tau) or 0
        acc = -y[0] if kind == "T_zero" else -y[0] - (n - 1) / (a + tau) * y[1]
        return (y[1], acc)

    h = _SERIES_STEP
    if kind == "T_zero":
        y0 = (-math.cos(h), math.sin(h))
    elif a == 0.0:
        # series start past the 1/t singularity:
        # v = -1 + t^2/(2n) - t^4/(8n(n+2)) + O(t^6)
        y0 = (
            -1.0 + h * h / (2 * n) - h**4 / (8 * n * (n + 2)),
            h / n - h**3 / (2 * n * (n + 2)),
        )
    else:
        # regular point: Taylor with v''(a) = 1, v'''(a) = T(a)
        T_a = -(n - 1) / a
        y0 = (-1.0 + 0.5 * h * h + T_a * h**3 / 6.0, h + 0.5 * T_a * h * h)

    def stationary(tau, y):
        return y[1]

    stationary.terminal = True
    stationary.direction = -1

    span = 8.0
    while span <= 512.0:
        sol = solve_ivp(rhs, (h, span), y0, method="DOP853", rtol=1e-12,
                        atol=1e-14, dense_output=True, events=stationary)
        if sol.status == -1:
            raise NumericalError(f"1-D model integration failed: {sol.message}")
        if sol.t_events[0].size:
            tb = float(sol.t_events[0][0])
            # sharpen the root of v' on the dense output
            lo = max(h, tb - 1e-3)
            hi = min(sol.t[-1], tb + 1e-3)
            if sol.sol(lo)[1] > 0.0 > sol.sol(hi)[1]:
                tb = brentq(lambda t: sol.sol(t)[1], lo, hi, xtol=1e-13, rtol=8.9e-16)
            return sol, float(tb)
        span *= 2.0
    raise NumericalError(f"no stationary point of v found within {a} + [0, 512]")


def solve_model(model: OneDModel) -> OneDSolution:
    """Integrate the monotone branch and sample it on a clustered grid.

    The grid is cosine-clustered toward both endpoints, where v' vanishes
    like a square root in v; that keeps the monotone-cubic inverse used by
    :func:`v_prime_of_u` accurate near the extrema.
    """
    if math.isinf(model.a):
        raise DomainError("solve_model needs finite a; use delta()/solution_for()")
    sq = math.sqrt(model.lam)
    a1 = model.a * sq
    dense, delta1 = _integrate_unit(model.n, model.kind, a1)

    tau = delta1 * 0.5 * (1.0 - np.cos(np.pi * np.arange(_GRID_SIZE) / (_GRID_SIZE - 1)))
    inner = dense.sol(tau[1:-1])
    v = np.concatenate([[-1.0], inner[0], [float(dense.sol(delta1)[0])]])
    vp = np.concatenate([[0.0], inner[1], [0.0]])
    if np.any(vp[1:-1] <= 0.0) or np.any(np.diff(v) <= 0.0):
        raise NumericalError("sampled branch is not strictly monotone")
    m = float(v[-1])
    if not -1.0 < m < 1.0 + 1e-12:
        raise NumericalError(f"endpoint value m = {m} outside (-1, 1]")
    return OneDSolution(
        t_grid=(a1 + tau) / sq,
        v=v,
        v_prime=sq * vp,
        b=(a1 + delta1) / sq,
        delta=delta1 / sq,
        m=m,
    )


def solution_for(model: OneDModel) -> OneDSolution:
    """Like solve_model, but maps the a = infinity limit to its T_zero
    profile on [0, pi/sqrt(lam)] (the model is translation invariant)."""
    if math.isinf(model.a):
        return solve_model(OneDModel(model.n, model.lam, "T_zero", 0.0))
    return solve_model(model)


def delta(model: OneDModel) -> float:
    """Branch length b(a) - a; exactly pi/sqrt(lam) in the a = infinity limit."""
    if math.isinf(model.a):
        return math.pi / math.sqrt(model.lam)
    return solve_model(model).delta


def _m_unit(n: int, a1: float) -> float:
    dense, delta1 = _integrate_unit(n, "T_radial", a1)
    return float(dense.sol(delta1)[0])


def match_model(n: int, lam: float, umax: float) -> OneDModel:
    """Model whose endpoint value m(a) equals umax (the eigenfunction max).

    umax close to 1 returns the T_zero limit (m = 1 only there); umax below
    m(0) cannot occur for exact eigenfunctions, so the radial a = 0 model is
    returned with ``clamped`` set, signalling discretization error in the
    caller's data.  No monotonicity of m is assumed: a bracketing scan over
    a geometric grid precedes the bisection.
    """
    if not 0.0 < umax <= 1.0:
        raise DomainError(f"umax must lie in (0, 1], got {umax}")
    if umax >= 1.0 - 1e-9:
        return OneDModel(n, lam, "T_zero", math.inf)
    m0 = _m_unit(n, 0.0)
    if umax <= m0:
        return OneDModel(n, lam, "T_radial", 0.0, clamped=umax < m0)

    scanned = [(0.0, m0)]
    a_lo, m_lo = 0.0, m0
    a_hi = None
    step = 0.25
    while step <= 1.1e10:  # m(a) ~ 1 - pi/(2a): covers umax up to the 1e-9 cutoff
        m_here = _m_unit(n, step)
        scanned.append((step, m_here))
        if (m_lo - umax) * (m_here - umax) <= 0.0:
            a_hi = step
            break
        a_lo, m_lo = step, m_here
        step *= 2.0
    if a_hi is None:
        table = ", ".join(f"({a:.3g}, {m:.6f})" for a, m in scanned)
        raise NumericalError(f"failed to bracket m(a) = {umax}; scanned {table}")

    for _ in range(200):
        mid = 0.5 * (a_lo + a_hi)
        m_mid = _m_unit(n, mid)
        if abs(m_mid - umax) <= 1e-9:
            return OneDModel(n, lam, "T_radial", mid / math.sqrt(lam))
        if (m_lo - umax) * (m_mid - umax) <= 0.0:
            a_hi = mid
        else:
            a_lo, m_lo = mid, m_mid
    raise NumericalError(f"bisection on m(a) = {umax} did not reach 1e-9")


def v_prime_of_u(sol: OneDSolution, u) -> np.ndarray | float:
    """v'(v^{-1}(u)) by monotone cubic interpolation of the (v, v') samples.

    Exact at grid points; both endpoints return 0.  Inputs are clamped to
    [v(a), v(b)] at the 1e-12 level and rejected beyond it.
    """
    u_arr = np.asarray(u, dtype=float)
    lo, hi = sol.v[0], sol.v[-1]
    span = hi - lo
    if np.any(u_arr < lo - 1e-12 * span) or np.any(u_arr > hi + 1e-12 * span):
        worst = float(u_arr.min()) if np.any(u_arr < lo) else float(u_arr.max())
        raise DomainError(f"u = {worst} outside the model range [{lo}, {hi}]")
    out = PchipInterpolator(sol.v, sol.v_prime)(np.clip(u_arr, lo, hi))
    out = np.maximum(out, 0.0)
    return float(out) if np.isscalar(u) else out
