"""First Dirichlet eigenvalues of the p-Laplacian on geodesic balls.

The first eigenfunction on a ball is radial, so ``lambda_{1,p}(B_R)`` is the value
of ``lambda`` for which the regular radial solution first vanishes at ``t = R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import FitFailure
from .geometry import RadialMetric, SpaceForm, to_geodesic
from .radialsolve import EigenResult, shooting_defect

DEFAULT_SCHEDULE = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
# inverse powers of R in the large-radius ansatz lambda_inf + sum c_k R^-k
LIMIT_POWERS = (2, 3, 4)


@dataclass(frozen=True)
class PlapTask:
    metric: RadialMetric
    R: float
    p: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not self.R > 0:
            raise ValueError(f"radius must be positive, got {self.R}")


def plap_ball_eigenvalue(task, tol=1e-10, bracket=None):
    """``lambda_{1,p}`` of the geodesic ball of radius ``task.R`` about the center.

    ``bracket`` may supply ``(lo, hi)`` known to enclose the eigenvalue (for
    instance from neighbouring radii); it is verified before use.
    """
    metric = to_geodesic(task.metric)
    a, b = metric.coeff_functions()
    p, R = task.p, task.R
    calls = [0]

    def g(lam):
        calls[0] += 1
        return shooting_defect(a, b, p, lam, R)

    lo, hi = _bracket(g, bracket)
    lam = brentq(g, lo, hi, xtol=1e-300, rtol=max(tol, 4e-16), maxiter=200)
    defect = abs(g(lam))
    return EigenResult(float(lam), defect / R, calls[0], False,
                       f"bracket=[{lo:.10g}, {hi:.10g}] shooting_calls={calls[0]}")


def _bracket(g, hint=None):
    if hint is not None:
        lo, hi = hint
        if lo > 0 and g(lo) > 0 and g(hi) < 0:
            return lo, hi
    x = 1.0
    if g(x) > 0:
        lo = x
        hi = 2 * x
        while g(hi) > 0:
            lo, hi = hi, 2 * hi
            if hi > 1e300:
                raise FitFailure("no sign change while doubling the upper bracket")
        return lo, hi
    hi = x
    lo = x / 2
    while g(lo) <= 0:
        lo, hi = lo / 2, lo
        if lo < 1e-300:
            raise FitFailure("no sign change while halving the lower bracket")
    return lo, hi


def ball_schedule(metric, p, R_schedule, tol=1e-10):
    """Eigenvalues along an increasing schedule of radii (brackets chained by monotonicity)."""
    out = []
    prev = None
    for R in sorted(R_schedule):
        hint = None
        if prev is not None:
            hint = (prev.value * 0.5, prev.value)
        res = plap_ball_eigenvalue(PlapTask(metric, float(R), p), tol, bracket=hint)
        out.append(res)
        prev = res
    return out


def extrapolate_limit(radii, values, powers=LIMIT_POWERS):
    """Least-squares fit ``values ~ L + sum_k c_k R**-k``; returns ``(L, rel_rms, coeffs)``.

    Short schedules drop the highest powers so that one residual degree of freedom remains.
    """
    R = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if R.size < 3:
        raise FitFailure("need at least 3 radii")
    if np.any(np.diff(R) <= 0):
        raise FitFailure("radii must be increasing")
    cols = [np.ones_like(R)] + [R ** (-k) for k in powers]
    ncols = min(len(cols), R.size - 1)
    M = np.array(cols[:ncols]).T
    coef, *_ = np.linalg.lstsq(M, v, rcond=None)
    L = float(coef[0])
    rel = float(np.sqrt(np.mean((M @ coef - v) ** 2)) / abs(L))
    return L, rel, coef


def plap_limit(metric, p, R_schedule=DEFAULT_SCHEDULE, tol=1e-10, return_values=False):
    """Extrapolated ``lim_{R->inf} lambda_{1,p}(B_R)`` and the relative fit residual."""
    radii = sorted(float(r) for r in R_schedule)
    if len(radii) < 4:
        raise FitFailure("need at least 4 radii")
    results = ball_schedule(metric, p, radii, tol)
    values = [r.value for r in results]
    limit, quality, _ = extrapolate_limit(radii, values)
    if quality > 0.1:
        raise FitFailure(f"extrapolation residual {quality:.3g} exceeds 10%")
    if return_values:
        return limit, quality, radii, values
    return limit, quality


def cheng_upper_bound(min_dr, n, p):
    """``(min |dr|)^p (n/p)^p``, the bottom of the spectrum of ``H^{n+1}(-min|dr|^2)``."""
    if min_dr <= 0:
        raise ValueError("min |dr| must be positive")
    if p <= 1:
        raise ValueError("p must exceed 1")
    return min_dr**p * (n / p) ** p


def scaling_check(kappa, n, p, R, tol=1e-10):
    """Relative gap between ``lambda(B_R, -kappa^2)`` and ``kappa^p lambda(B_{kappa R}, -1)``."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if kappa == 1.0:
        return 0.0
    lhs = plap_ball_eigenvalue(PlapTask(RadialMetric(n, SpaceForm(kappa)), R, p), tol).value
    rhs = kappa**p * plap_ball_eigenvalue(PlapTask(RadialMetric(n, SpaceForm(1.0)), kappa * R, p), tol).value
    return abs(lhs - rhs) / lhs


def rayleigh_minimization_oracle(metric, p, R, nodes=200):
    """Upper bound for ``lambda_{1,p}(B_R)`` minimizing the p-Rayleigh quotient over
    piecewise-linear radial functions vanishing at ``R`` (slow, a few digits)."""
    from scipy.optimize import minimize

    metric = to_geodesic(metric)
    t = np.linspace(0.0, R, nodes + 1)
    mid = 0.5 * (t[1:] + t[:-1])
    h = np.diff(t)
    # two-point Gauss per element for the mass term
    gp = np.array([-1, 1]) / math.sqrt(3)
    tq = (mid[:, None] + 0.5 * h[:, None] * gp[None, :])
    wq = metric.volume_weight(tq) * (0.5 * h[:, None])
    wm = metric.volume_weight(mid) * h
    lam_q = (1 - gp) / 2

    def quotient(u):
        f = np.append(u, 0.0)
        df = np.diff(f) / h
        num = np.sum(wm * np.abs(df) ** p)
        fq = f[:-1, None] * lam_q[None, :] + f[1:, None] * (1 - lam_q[None, :])
        den = np.sum(wq * np.abs(fq) ** p)
        return num / den

    u0 = np.cos(0.5 * math.pi * t[:-1] / R)
    res = minimize(quotient, u0, method="L-BFGS-B", options={"maxiter": 20000, "maxfun": 10**7})
    return float(res.fun)
