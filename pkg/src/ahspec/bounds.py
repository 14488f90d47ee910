"""Lower-bound machinery: Poincare-type inequalities, iterated inequalities and
the submanifold invariant ``beta`` on model submanifolds of hyperbolic space.

Radial test functions live in the geodesic gauge; integrals are over
``[0, inf)`` with weight ``phi(t)^n`` (the sphere area cancels in all quotients
and identities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.optimize import minimize_scalar

from .errors import HypothesisViolation, NotInCatalog
from .geometry import RadialMetric, SpaceForm, hyperbolic_normal_form, to_geodesic
from .radialsolve import iterated_laplacian_jet, jet_mul, polynomial_jet
from .testfamily import CutoffParams, gradient_p_integrals

# composite Gauss-Legendre rule for compactly supported radial integrals
PANELS = 200
PANEL_NODES = 16
MARGIN_TOL = 1e-10


# ---------------------------------------------------------------------------
# w(eps)


def w_curve(b, p, eps):
    """``w(eps) = (b + (1-p) eps^{p/(p-1)}) eps^p``, the lower bound produced by Young's inequality."""
    return (b + (1 - p) * eps ** (p / (p - 1))) * eps**p


def w_max(b, p):
    """Analytic maximizer ``eps_m = (b/p)^{1-1/p}`` and maximum ``(b/p)^p``."""
    if not b > 0 or not p > 1:
        raise ValueError("need b > 0 and p > 1")
    return (b / p) ** (1 - 1 / p), (b / p) ** p


def w_numeric_max(b, p):
    """Numerical maximizer of ``w`` on ``(0, eps_0)`` where ``w(eps_0) = 0`` (bounded Brent)."""
    if not b > 0 or not p > 1:
        raise ValueError("need b > 0 and p > 1")
    eps0 = (b / (p - 1)) ** ((p - 1) / p)
    res = minimize_scalar(lambda e: -w_curve(b, p, e), bounds=(0.0, eps0), method="bounded",
                          options={"xatol": 1e-12 * eps0})
    return float(res.x), float(-res.fun)


# ---------------------------------------------------------------------------
# radial test functions


@lru_cache(maxsize=None)
def _bump_ratio(k):
    """``B^(k) / B`` for ``B = exp(-1/(1-x^2))`` as a polynomial in ``x`` and ``y = 1/(1-x^2)``."""
    x, y = sp.symbols("x y")
    expr = sp.Integer(1)
    for _ in range(k):
        # d/dx acting on B * expr, with dy/dx = 2 x y^2 and B'/B = -2 x y^2
        expr = sp.expand(sp.diff(expr, x) + sp.diff(expr, y) * 2 * x * y**2 - 2 * x * y**2 * expr)
    return sp.lambdify((x, y), expr, "numpy")


@dataclass(frozen=True)
class RadialBump:
    """``f(t) = B((t-c)/w) * (q((t-c)/w)^2 + floor)``: smooth, nonnegative, supported in ``[c-w, c+w]``."""

    center: float
    width: float
    q: tuple = (1.0,)
    floor: float = 0.1

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")

    @property
    def support(self):
        return self.center - self.width, self.center + self.width

    def jet(self, t, order):
        t = np.asarray(t, dtype=float)
        x = (t - self.center) / self.width
        inside = np.abs(x) < 1
        xs = np.where(inside, x, 0.0)
        y = 1.0 / ((1.0 - xs) * (1.0 + xs))
        base = np.where(inside, np.exp(-y), 0.0)
        live = base > 0  # elsewhere the powers of y would overflow against exp(-y) = 0
        ys = np.where(live, y, 1.0)
        bj = np.zeros((order + 1,) + t.shape)
        for k in range(order + 1):
            ratio = _bump_ratio(k)(xs, ys) if k else 1.0
            bj[k] = np.where(live, base * ratio, 0.0)
        q = np.polynomial.Polynomial(self.q)
        poly = q * q + self.floor
        pj = polynomial_jet(poly.coef, x, order)
        out = jet_mul(bj, pj, order)
        return out * (self.width ** -np.arange(order + 1)).reshape((-1,) + (1,) * t.ndim)


@dataclass(frozen=True)
class EvenPolynomial:
    """``f(t) = sum_j a_j t^(2j)``: smooth at the center, not compactly supported."""

    coeffs: tuple

    def jet(self, t, order):
        c = np.zeros(2 * len(self.coeffs) - 1)
        c[::2] = self.coeffs
        return polynomial_jet(c, np.asarray(t, dtype=float), order)


def random_bumps(count, seed, t_range=(0.5, 5.0), degree=2):
    """Seeded random nonnegative bumps with support inside ``t_range``."""
    rng = np.random.default_rng(seed)
    lo, hi = t_range
    out = []
    for _ in range(count):
        w = rng.uniform(0.1, 0.5 * (hi - lo))
        c = rng.uniform(lo + w, hi - w)
        q = tuple(rng.normal(size=degree + 1))
        out.append(RadialBump(float(c), float(w), q, float(rng.uniform(0.01, 1.0))))
    return out


def random_even_polynomials(count, seed, degree=3):
    """Seeded positive even polynomials ``1 + sum a_j t^(2j)`` with ``a_j >= 0``."""
    rng = np.random.default_rng(seed)
    return [EvenPolynomial((1.0,) + tuple(rng.uniform(0.0, 0.5, size=degree) / 4.0 ** np.arange(degree)))
            for _ in range(count)]


def _rule(a, b, panels=PANELS, nodes=PANEL_NODES):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    h = np.diff(edges)
    t = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1)).ravel()
    wt = (0.5 * h[:, None] * w[None, :]).ravel()
    return t, wt


def _radial_setup(metric, f, order, interval=None):
    geo = to_geodesic(metric)
    a, b = interval if interval is not None else f.support
    t, wt = _rule(max(a, 0.0), b)
    jet = f.jet(t, order)
    return geo, t, wt * geo.volume_weight(t), jet


# ---------------------------------------------------------------------------
# Poincare-type inequality


@dataclass(frozen=True)
class Margin:
    lhs: float
    rhs: float

    @property
    def margin(self):
        """Relative margin ``(lhs - rhs)/|rhs|``; negative means a violation (never clipped)."""
        return (self.lhs - self.rhs) / abs(self.rhs)

    @property
    def holds(self):
        return self.margin >= -MARGIN_TOL


def p_quotient(metric, f, p):
    """``int |f'|^p dv / int |f|^p dv`` for a compactly supported radial ``f``."""
    _, t, w, jet = _radial_setup(metric, f, 1)
    return float(np.sum(w * np.abs(jet[1]) ** p) / np.sum(w * np.abs(jet[0]) ** p))


def poincare_check(metric, f, p):
    """Quotient of ``f`` against ``(n/p)^p``; requires ``f >= 0`` and a nonnegative-Yamabe metric."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not metric.yamabe_nonneg:
        raise HypothesisViolation("the Poincare inequality needs a nonnegative Yamabe boundary")
    lo, _ = f.support
    if lo <= 0:
        raise HypothesisViolation("test function must be supported away from the center")
    _, t, _, jet = _radial_setup(metric, f, 0)
    if np.any(jet[0] < 0):
        raise HypothesisViolation("test function changes sign")
    return Margin(p_quotient(metric, f, p), (metric.n / p) ** p)


def near_extremal_ratio(n, p, s_gap=1e-4, eps=1e-150, **cutoff):
    """Quotient of the boundary-concentrated family ``r^s phi`` (``s = n/p - s_gap``) over ``(n/p)^p``.

    The approach to the bound is only logarithmic in ``1/eps``, hence the tiny default.
    """
    params = CutoffParams(n / p - s_gap, eps, 0.0, **cutoff)
    num, den = gradient_p_integrals(hyperbolic_normal_form(n), params, p)
    return num / den / (n / p) ** p


# ---------------------------------------------------------------------------
# iterated inequalities


@dataclass(frozen=True)
class IteratedReport:
    laplacian: Margin  # int |Delta^m f|^p >= C int |f|^p
    gradient: Margin  # int |grad Delta^m f|^p >= (n/p)^p C int |f|^p
    constant: float


def iterated_constant(p, m, b):
    return ((p - 1) * b * b / (p * p)) ** (p * m)


def iterated_inequality_check(metric, f, p, m, b=None):
    """Both iterated inequalities for a compactly supported radial ``f`` (``b = n`` by default)."""
    if not p > 1 or m < 1:
        raise ValueError("need p > 1 and m >= 1")
    geo = to_geodesic(metric)
    b = geo.n if b is None else b
    _, t, w, jet = _radial_setup(geo, f, 2 * m + 1)
    lo = 2 * m - 1
    lap = iterated_laplacian_jet(geo.a_jet(t, lo), geo.b_jet(t, lo), jet, m)
    base = np.sum(w * np.abs(jet[0]) ** p)
    C = iterated_constant(p, m, b)
    first = Margin(float(np.sum(w * np.abs(lap[0]) ** p)), float(C * base))
    second = Margin(float(np.sum(w * np.abs(lap[1]) ** p)), float((geo.n / p) ** p * C * base))
    return IteratedReport(first, second, C)


# ---------------------------------------------------------------------------
# divergence identity


def divergence_identity(metric, f, p, R, sol):
    """``int_{B_R} div(f^p grad log u)`` against the flux ``f(R)^p (log u)'(R) phi(R)^n``.

    ``Delta log u = (n+1) - |grad log u|^2`` for the Lee eigenfunction ``u`` (``sol``).
    Returns ``(volume_integral, flux)``.
    """
    geo = to_geodesic(metric)
    n = geo.n
    t, wt = _rule(0.0, R)
    w = wt * geo.volume_weight(t)
    jet = f.jet(t, 1)
    g = sol.log_derivative(t)
    integrand = p * jet[0] ** (p - 1) * jet[1] * g + jet[0] ** p * ((n + 1) - g * g)
    volume = float(np.sum(w * integrand))
    fR = f.jet(np.array([R]), 0)[0, 0]
    flux = float(fR**p * sol.log_derivative(np.array([R]))[0] * geo.volume_weight(np.array([R]))[0])
    return volume, flux


# ---------------------------------------------------------------------------
# model submanifolds

KINDS = ("totally-geodesic", "equidistant")


@dataclass(frozen=True)
class ModelSubmanifold:
    """Totally geodesic ``H^{k+1}`` through the center, or the equidistant hypersurface
    at distance ``d`` from a totally geodesic hyperplane (``k = n - 1``)."""

    kind: str
    k: int
    ambient: RadialMetric
    d: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise NotInCatalog(f"unknown model submanifold {self.kind!r}")
        n = self.ambient.n
        if not 1 <= self.k <= n - 1:
            raise ValueError(f"need 1 <= k <= n-1, got k={self.k}, n={n}")
        if self.kind == "equidistant":
            if self.k != n - 1:
                raise ValueError("equidistant models are hypersurfaces (k = n - 1)")
            if self.d < 0:
                raise ValueError("distance must be nonnegative")
            form = to_geodesic(self.ambient).form
            if not (isinstance(form, SpaceForm) and form.kappa == 1.0):
                raise NotInCatalog("equidistant models are only catalogued in hyperbolic space")

    @property
    def alpha(self):
        """Norm of the mean curvature vector (trace of the second fundamental form)."""
        return 0.0 if self.kind == "totally-geodesic" else (self.k + 1) * math.tanh(self.d)

    def intrinsic_metric(self):
        if self.kind == "totally-geodesic":
            geo = to_geodesic(self.ambient)
            return RadialMetric(self.k, geo.form, geo.yamabe_nonneg, key=f"{geo.key}|totally-geodesic:k={self.k}")
        kappa = 1.0 / math.cosh(self.d)
        return RadialMetric(self.k, SpaceForm(kappa), True, key=f"hyperbolic:n={self.k}:kappa={kappa!r}")


def _normal_hessian_ratio(geo, sol, t, cos2):
    """``u^{-1} (nabla^2 u - u g)(nu, nu)`` for a unit ``nu`` making angle ``theta`` with ``d/dt``."""
    n = geo.n
    g = sol.log_derivative(t)  # u'/u
    q = geo.warp(t, 1) / geo.warp(t)
    upp = (n + 1) - n * q * g  # u''/u from the eigen-equation
    return upp * cos2 + g * q * (1 - cos2) - 1.0


def submanifold_beta(sub, sol, samples=2000):
    """``beta^Y(u)``: sup over ``Y`` of ``u^{-1}`` times the normal trace of the trace-free Hessian."""
    geo = to_geodesic(sub.ambient)
    t_max = 0.5 * sol.grid[-1]
    if sub.kind == "totally-geodesic":
        # normal directions are tangent to the distance spheres
        t = sol.grid[(sol.grid > 0) & (sol.grid <= t_max)]
        vals = (geo.n - sub.k) * _normal_hessian_ratio(geo, sol, t, 0.0)
        return float(np.max(vals))
    rho, cos2, t = _equidistant_samples(sub.d, t_max, samples)
    return float(np.max(_normal_hessian_ratio(geo, sol, t, cos2)))


def _equidistant_samples(d, t_max, samples):
    # foot point at distance rho from the center on the hyperplane: cosh t = cosh rho cosh d
    rho_max = math.acosh(math.cosh(t_max) / math.cosh(d))
    rho = np.linspace(0.0, rho_max, samples)
    t = np.arccosh(np.cosh(rho) * math.cosh(d))
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(t > 0, np.cosh(rho) * math.sinh(d) / np.sinh(t), 1.0)
    keep = t > 1e-6
    return rho[keep], np.clip(cos[keep], -1, 1) ** 2, t[keep]


def equidistant_beta_fd(sub, sol, rho, h=1e-3):
    """Finite-difference cross-check: second derivative of ``u`` along the normal geodesic.

    The normal geodesic through the foot point at distance ``rho`` satisfies
    ``cosh t(s) = cosh rho cosh s``; ``(u o gamma)''(d) = nabla^2 u(nu, nu)``.
    """
    if sub.kind != "equidistant":
        raise ValueError("finite-difference check is for equidistant models")
    s = sub.d + h * np.arange(-2, 3)
    t = np.arccosh(np.cosh(rho) * np.cosh(s))
    u = sol.value(t)
    d2 = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
    return float(d2 / u[2] - 1.0)


def submanifold_lower_bounds(k, alpha, beta, p, l):
    """``((k-a-b)/p)^p``, ``((k-a-b)/2)^{2l}`` and ``((k-a-b)/2)^2``."""
    gap = k - alpha - beta
    if not gap > 0:
        raise HypothesisViolation(f"need alpha + beta < k, got {alpha} + {beta} >= {k}")
    return (gap / p) ** p, (gap / 2) ** (2 * l), (gap / 2) ** 2
