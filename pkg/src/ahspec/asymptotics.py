"""Boundary expansions of radial quantities and the Lee eigenfunction.

The expansion checks evaluate iterated Laplacians of ``r`` and ``r^s`` exactly
(jet recursion on the normal-form coefficients ``a = r^2``, ``b``) and certify the
order of the remainder by a log-log fit on ``r`` in ``[1e-4, 1e-2]``.

The Lee eigenfunction solves ``Delta u = (n+1) u`` with ``u = 1/r + O(1)``.  It is
computed in the geodesic variable ``t = -log r`` for ``v = r u = exp(-t) u``::

    v'' + (2 + n q) v' + n (q - 1) v = 0,   q = phi'/phi,

with regularity ``v'(0) + v(0) = 0`` at the center and ``v -> 1`` at infinity.
For weakly Poincare-Einstein metrics ``r u = 1 + k r^2 + O(r^3)`` with
``k = Rhat / (4 n (n-1))`` and ``u^2 - |grad u|^2 -> Rhat / (n (n-1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.integrate import solve_bvp
from scipy.interpolate import CubicSpline

from .errors import AllZeroRemainders, NoConvergence, NotInCatalog, OutOfRange, ViolationFound, WrongVariant
from .geometry import boundary_data, normal_form_of, to_geodesic
from .radialsolve import OrderEstimate, iterated_laplacian_jet, order_fit, power_jet

# 12 log-spaced samples, the two largest excluded from the fits
SAMPLES = np.logspace(-2, -4, 12)
FIT_SKIP = 2


def _require_normal(metric):
    if metric.gauge != "normal":
        raise WrongVariant("expansion checks use the normal-form defining function")


def _lap_jets(metric, r, f_jet, m):
    order = len(f_jet) - 1
    lo = max(order - 2, 0)
    return iterated_laplacian_jet(metric.a_jet(r, lo), metric.b_jet(r, lo), f_jet, m)


def iterated_laplacian_r(metric, l, r_samples):
    """``Delta^l r`` at the samples (exact recursion on the closed-form coefficients)."""
    _require_normal(metric)
    if l < 1:
        raise ValueError("l must be at least 1")
    r = np.atleast_1d(np.asarray(r_samples, dtype=float))
    metric.check_range(r)
    return _lap_jets(metric, r, power_jet(r, 1.0, 2 * l), l)[0]


# remainders below this multiple of the leading term are roundoff, counted as zero
ROUNDOFF = 64 * np.finfo(float).eps


def _fit(r, remainder, lead):
    rem = np.where(np.abs(remainder) <= ROUNDOFF * np.abs(lead), 0.0, np.abs(remainder))
    r, rem = r[FIT_SKIP:], rem[FIT_SKIP:]
    try:
        return order_fit(zip(r, rem))
    except AllZeroRemainders:
        return OrderEstimate(math.inf, math.nan, (float(r.min()), float(r.max())), 0.0, 0, int(r.size))


def check_delta_r_expansion(metric, l, r_samples=SAMPLES):
    """Order of ``Delta^l r - (-(n-1))^l r``."""
    r = np.asarray(r_samples, dtype=float)
    vals = iterated_laplacian_r(metric, l, r)
    lead = (-(metric.n - 1)) ** l * r
    return _fit(r, vals - lead, lead)


def check_grad_delta_r(metric, m, r_samples=SAMPLES):
    """Order of ``|grad Delta^m r|^2 - (n-1)^{2m} r^2`` (``|grad f|^2 = r^2 f_r^2``)."""
    _require_normal(metric)
    r = np.asarray(r_samples, dtype=float)
    metric.check_range(r)
    jet = _lap_jets(metric, r, power_jet(r, 1.0, 2 * m + 1), m)
    grad2 = r**2 * jet[1] ** 2
    lead = (metric.n - 1) ** (2 * m) * r**2
    return _fit(r, grad2 - lead, lead)


def check_rs_expansion(metric, s, m, r_samples=SAMPLES):
    """Orders of the remainders of ``Delta^m r^s`` and ``|grad Delta^m r^s|^2``."""
    _require_normal(metric)
    if s <= 0 or m < 0:
        raise ValueError("need s > 0 and m >= 0")
    r = np.asarray(r_samples, dtype=float)
    metric.check_range(r)
    n = metric.n
    jet = _lap_jets(metric, r, power_jet(r, float(s), 2 * m + 1), m)
    lead = (s * (s - n)) ** m
    first = _fit(r, jet[0] - lead * r**s, lead * r**s)
    grad2 = r**2 * jet[1] ** 2
    lead2 = s**2 * lead**2 * r ** (2 * s)
    second = _fit(r, grad2 - lead2, lead2)
    return first, second


def rs_leading_coefficients(metric, s, m, r=1e-5):
    """Numerical ``Delta^m r^s / r^s`` at small ``r`` next to the predicted ``s^m (s-n)^m``."""
    rr = np.array([r])
    jet = _lap_jets(metric, rr, power_jet(rr, float(s), 2 * m), m)
    return float(jet[0][0] / r**s), (s * (s - metric.n)) ** m


def grad_rs_exactness(metric, s, r_samples=SAMPLES):
    """Max relative deviation of ``|grad r^s|^2`` from ``s^2 r^{2s}`` (exact identity)."""
    _require_normal(metric)
    r = np.asarray(r_samples, dtype=float)
    jet = power_jet(r, float(s), 1)
    grad2 = r**2 * jet[1] ** 2
    return float(np.max(np.abs(grad2 - s**2 * r ** (2 * s)) / (s**2 * r ** (2 * s))))


# ---------------------------------------------------------------------------
# Lee eigenfunction


@dataclass(frozen=True)
class LeeSolution:
    grid: np.ndarray  # geodesic distance t from the center
    u: np.ndarray
    du: np.ndarray  # du/dt
    residual: float
    v: np.ndarray  # r u
    z: np.ndarray  # -exp(2t) dv/dt

    @property
    def r(self):
        return np.exp(-self.grid)

    def log_derivative(self, t):
        """``u'/u = 1 - exp(-2t) z / v`` at geodesic distances ``t`` (spline in ``v, z``)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.grid[0]) or np.any(t > self.grid[-1]):
            raise OutOfRange("t outside the solution grid")
        v = CubicSpline(self.grid, self.v)(t)
        z = CubicSpline(self.grid, self.z)(t)
        return 1.0 - np.exp(-2 * t) * z / v

    def value(self, t):
        """``u(t) = exp(t) v(t)``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.grid[0]) or np.any(t > self.grid[-1]):
            raise OutOfRange("t outside the solution grid")
        return np.exp(t) * CubicSpline(self.grid, self.v)(t)


def lee_solve(metric, T=30.0, nodes=400, tol=1e-10):
    """Lee eigenfunction of a rotationally symmetric metric with a smooth center.

    The unknowns are ``v = r u`` and ``z = -exp(2t) v'``; then
    ``u^2 - |grad u|^2 = z (2 v - exp(-2t) z)`` is evaluated without cancellation
    and the coefficient ``K = (q - 1) exp(2t) = -c'(r) / (r c(r))`` comes from the
    normal form (``r = exp(-t)``).
    """
    geo = to_geodesic(metric)
    if not geo.is_ah:
        raise NotInCatalog("the Lee eigenfunction needs an asymptotically hyperbolic metric")
    n = geo.n
    c = normal_form_of(geo).form.c
    K_expr = sp.simplify(-sp.diff(c.expr, c.var) / (c.var * c.expr))
    K_fun = sp.lambdify(c.var, K_expr, "numpy")
    phi3 = float(geo.warp(np.array([0.0]), 3)[0])

    def K(t):
        return np.asarray(K_fun(np.exp(-t)), dtype=float) * np.ones_like(t)

    def regular_parts(t):
        # (q - 1/t, K - 1/t), finite at the center
        t = np.asarray(t, dtype=float)
        qr = np.empty_like(t)
        kr = np.empty_like(t)
        small = t < 1e-3
        big = ~small
        Kb = K(t[big])
        qr[big] = 1.0 + np.exp(-2 * t[big]) * Kb - 1.0 / t[big]
        kr[big] = Kb - 1.0 / t[big]
        ts = t[small]
        # phi = t + phi3 t^3/6 + ...  =>  q - 1/t = phi3 t/3 + O(t^3)
        qr[small] = phi3 * ts / 3.0
        kr[small] = np.where(ts > 0, np.expm1(2 * ts) / np.where(ts > 0, ts, 1.0), 2.0) \
            + (qr[small] - 1.0) * np.exp(2 * ts)
        return qr, kr

    S = np.array([[0.0, 0.0], [n, -n]])

    def rhs(t, y):
        v, z = y
        qr, kr = regular_parts(t)
        return np.vstack([-np.exp(-2 * t) * z, -n * qr * z + n * kr * v])

    def bc(ya, yb):
        return np.array([ya[0] - ya[1], yb[0] - 1.0])

    t = np.concatenate([np.linspace(0.0, 2.0, nodes // 2, endpoint=False), np.linspace(2.0, T, nodes // 2)])
    guess = np.vstack([np.ones_like(t), np.ones_like(t)])
    sol = solve_bvp(rhs, bc, t, guess, S=S, tol=tol, max_nodes=200000)
    if not sol.success:
        raise NoConvergence(f"Lee eigenfunction collocation failed: {sol.message}")
    grid = sol.x
    v, z = sol.y
    u = np.exp(grid) * v
    du = u - np.exp(-grid) * z
    # residual of Delta u = (n+1) u relative to u, at the mesh midpoints
    mid = 0.5 * (grid[1:] + grid[:-1])
    vm, zm = sol.sol(mid)
    dv, dz = sol.sol.derivative()(mid)
    qr, kr = regular_parts(mid)
    res_v = dv + np.exp(-2 * mid) * zm
    res_z = dz - (-n * (qr + 1 / mid) * zm + n * (kr + 1 / mid) * vm)
    residual = float(max(np.max(np.abs(res_v) / np.abs(vm)), np.max(np.abs(res_z * np.exp(-2 * mid)) / np.abs(vm))))
    if np.any(v <= 0):
        raise NoConvergence("Lee eigenfunction lost positivity")
    return LeeSolution(grid, u, du, residual, v, z)


@dataclass(frozen=True)
class LeeReport:
    min_gap: float
    min_gap_at: float
    boundary_gap: float
    expected_gap: float
    boundary_rel_error: float
    normalization: float
    next_coefficient: float
    expected_coefficient: float
    coefficient_rel_error: float
    second_coefficient: float
    weakly_pe: bool

    def as_dict(self):
        return {k: (v if isinstance(v, bool) else float(v)) for k, v in self.__dict__.items()}


def lee_checks(metric, sol, strict=True):
    """Gradient estimate ``|grad u|^2 < u^2``, its boundary limit and the expansion of ``r u``.

    The boundary limit and the ``r^2`` coefficient are only predicted for weakly
    Poincare-Einstein metrics (``report.weakly_pe``); otherwise ``r u`` has an
    ``r`` term and the gap grows like ``1/r``.

    Raises ``ViolationFound`` (with the offending geodesic distance) when ``strict``
    and the gap ``u^2 - |grad u|^2`` is not positive somewhere.
    """
    nf = normal_form_of(to_geodesic(metric)) if metric.gauge != "normal" else metric
    bd = boundary_data(nf)
    n = nf.n
    v, z = sol.v, sol.z
    gap = z * (2 * v - np.exp(-2 * sol.grid) * z)
    k = int(np.argmin(gap))
    if strict and not gap[k] > 0:
        raise ViolationFound("gradient estimate |grad u|^2 < u^2 fails", float(sol.grid[k]))
    expected_gap = bd.scal_hat / (n * (n - 1))
    # boundary limit: the gap on the outer part of the grid, away from the far boundary condition
    t_far = sol.grid[-1]
    sel = (sol.grid > 0.4 * t_far) & (sol.grid < 0.6 * t_far)
    boundary_gap = float(np.median(gap[sel]))
    # r u = 1 + c1 r^2 + c2 r^3 + ... ; fit on r in [1e-4, 1e-2]
    r = sol.r
    fit = (r > 1e-4) & (r < 1e-2)
    M = np.vstack([r[fit] ** 2, r[fit] ** 3, r[fit] ** 4]).T
    coef, *_ = np.linalg.lstsq(M, v[fit] - 1.0, rcond=None)
    expected_coef = bd.scal_hat / (4 * n * (n - 1))
    norm_sel = sol.grid > 0.45 * t_far
    return LeeReport(
        min_gap=float(gap[k]),
        min_gap_at=float(sol.grid[k]),
        boundary_gap=boundary_gap,
        expected_gap=float(expected_gap),
        boundary_rel_error=abs(boundary_gap - expected_gap) / expected_gap,
        normalization=float(np.max(np.abs(v[norm_sel] - 1.0))),
        next_coefficient=float(coef[0]),
        expected_coefficient=float(expected_coef),
        coefficient_rel_error=abs(coef[0] - expected_coef) / expected_coef,
        second_coefficient=float(coef[1]),
        weakly_pe=abs(float(nf.form.c(np.array([0.0]), 1)[0])) < 1e-12,
    )
