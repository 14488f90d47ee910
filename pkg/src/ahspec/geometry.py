"""Rotationally symmetric model manifolds and their exact radial data.

Three descriptions are supported:

* ``SpaceForm(kappa)``: constant curvature ``-kappa**2``, warp ``sinh(kappa t)/kappa``
  in the geodesic distance ``t`` (``kappa = 0`` is flat space).
* ``Warped(phi)``: ``dt**2 + phi(t)**2 g_S``, with ``phi(0) = 0`` and ``phi'(0) = 1``.
* ``NormalForm(c)``: ``r**-2 (dr**2 + c(r)**2 g_hat)`` where ``g_hat`` is a round
  metric of radius ``rho0``.  ``r`` is a geodesic defining function.

For a radial function the Laplacian is ``a f'' + b f'``.  In the geodesic gauge
``a = 1`` and ``b = n phi'/phi``; in the normal-form gauge ``a = r**2`` and
``b = (1 - n) r + r**2 (log D)'`` with ``D = (c/c(0))**n``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

from .errors import DegenerateMetric, NotInCatalog, OutOfRange, WrongVariant

T = sp.Symbol("t", positive=True)
R = sp.Symbol("r", positive=True)


def sphere_area(n):
    """Area of the unit round ``S^n``."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


# ---------------------------------------------------------------------------
# profiles: scalar functions with exact derivatives


class Profile:
    """A smooth scalar function of one variable with exact derivatives."""

    def __call__(self, x, k=0):
        raise NotImplementedError

    max_order = 64


class SymbolicProfile(Profile):
    """Profile backed by a sympy expression; derivatives are symbolic."""

    def __init__(self, expr, var):
        self.expr = sp.sympify(expr)
        self.var = var
        self._funcs = {}

    def derivative_expr(self, k):
        return sp.diff(self.expr, self.var, k) if k else self.expr

    def __call__(self, x, k=0):
        fn = self._funcs.get(k)
        if fn is None:
            fn = sp.lambdify(self.var, self.derivative_expr(k), "numpy")
            self._funcs[k] = fn
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).copy()

    def scalar(self, k=0):
        """Plain-float callable for the ``k``-th derivative (fast scalar evaluation)."""
        key = ("scalar", k)
        fn = self._funcs.get(key)
        if fn is None:
            fn = sp.lambdify(self.var, self.derivative_expr(k), "math")
            self._funcs[key] = fn
        return fn

    def __repr__(self):
        return f"SymbolicProfile({self.expr})"


class SplineProfile(Profile):
    """Profile interpolated from samples by a cubic spline.

    Derivatives come from the spline itself, never from differencing samples.
    """

    max_order = 3

    def __init__(self, x, y, bc_type="not-a-knot"):
        self.spline = CubicSpline(np.asarray(x, float), np.asarray(y, float), bc_type=bc_type)

    def __call__(self, x, k=0):
        if k > 3:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self.spline(np.asarray(x, dtype=float), k)


# ---------------------------------------------------------------------------
# metric descriptions


@dataclass(frozen=True)
class SpaceForm:
    kappa: float = 1.0


@dataclass(frozen=True)
class Warped:
    phi: Profile


@dataclass(frozen=True)
class NormalForm:
    c: Profile
    rho0: float = 1.0
    r_max: float = 0.999


@dataclass(frozen=True)
class RadialMetric:
    n: int
    form: object
    yamabe_nonneg: bool = True
    key: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"boundary dimension must be a nonnegative integer, got {self.n}")
        if self.n == 0 and not (isinstance(self.form, SpaceForm) and self.form.kappa == 0):
            raise ValueError("n = 0 is only admitted for the flat interval")
        if isinstance(self.form, SpaceForm) and self.form.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def gauge(self):
        return "normal" if isinstance(self.form, NormalForm) else "geodesic"

    @cached_property
    def warp(self):
        """Warp profile ``phi(t)`` for the geodesic-gauge descriptions."""
        form = self.form
        if isinstance(form, SpaceForm):
            k = form.kappa
            expr = T if k == 0 else sp.sinh(sp.Float(k) * T) / sp.Float(k)
            return SymbolicProfile(expr, T)
        if isinstance(form, Warped):
            return form.phi
        raise WrongVariant("warp is defined only for SpaceForm and Warped metrics")

    @cached_property
    def _b_profile(self):
        # radial first-order coefficient as a profile, symbolic where possible
        n = self.n
        form = self.form
        if isinstance(form, SpaceForm):
            k = form.kappa
            if n == 0:
                return SymbolicProfile(sp.Integer(0), T)
            if k == 0:
                return SymbolicProfile(n / T, T)
            kk = sp.Float(k)
            return SymbolicProfile(n * kk * sp.cosh(kk * T) / sp.sinh(kk * T), T)
        if isinstance(form, Warped) and isinstance(form.phi, SymbolicProfile):
            phi = form.phi.expr.subs(form.phi.var, T)
            return SymbolicProfile(n * sp.diff(phi, T) / phi, T)
        if isinstance(form, NormalForm) and isinstance(form.c, SymbolicProfile):
            c = form.c.expr.subs(form.c.var, R)
            return SymbolicProfile((1 - n) * R + R**2 * n * sp.diff(c, R) / c, R)
        return None

    def b_jet(self, x, order):
        """Values of ``b`` and its first ``order`` derivatives, shape ``(order+1, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        prof = self._b_profile
        if prof is not None:
            return np.array([prof(x, k) for k in range(order + 1)])
        return _spline_b_jet(self, x, order)

    def coeff_functions(self):
        """Scalar callables ``(a, b)`` of the radial Laplacian in this gauge."""
        prof = self._b_profile
        if prof is not None:
            bfn = prof.scalar(0)
            b = lambda x: float(bfn(x))
        else:
            b = lambda x: float(self.b_jet(np.array([x]), 0)[0, 0])
        if self.gauge == "geodesic":
            return (lambda x: 1.0), b
        return (lambda x: x * x), b

    def a_jet(self, x, order):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((order + 1, x.size))
        if self.gauge == "geodesic":
            out[0] = 1.0
        else:
            out[0] = x**2
            if order >= 1:
                out[1] = 2 * x
            if order >= 2:
                out[2] = 2.0
        return out

    def volume_weight(self, x):
        """Radial volume density: ``dv = volume_weight(x) dx`` after integrating angles."""
        x = np.asarray(x, dtype=float)
        if self.gauge == "geodesic":
            return sphere_area(self.n) * self.warp(x) ** self.n
        bd = boundary_data(self)
        D, _ = density(self, x)
        return bd.vol_hat * x ** (-self.n - 1.0) * D

    def check_range(self, x):
        x = np.asarray(x, dtype=float)
        if self.gauge == "normal":
            bad = (x <= 0) | (x >= self.form.r_max)
        else:
            bad = x <= 0
        if np.any(bad) or not np.all(np.isfinite(x)):
            raise OutOfRange(f"radial coordinate outside the valid range for {self.label}")

    @property
    def label(self):
        return self.key or f"{type(self.form).__name__}(n={self.n})"

    @property
    def is_ah(self):
        """True for asymptotically hyperbolic descriptions (curvature -1 at infinity)."""
        form = self.form
        if isinstance(form, SpaceForm):
            return form.kappa == 1.0
        return True


def _spline_b_jet(metric, x, order):
    n = metric.n
    form = metric.form
    if isinstance(form, Warped):
        phi = form.phi
        if order > 2:
            raise ValueError("spline warps provide b derivatives up to order 2")
        f0, f1, f2, f3 = (phi(x, k) for k in range(4))
        q = f1 / f0
        dq = f2 / f0 - q**2
        d2q = f3 / f0 - f2 * f1 / f0**2 - 2 * q * dq
        return n * np.array([q, dq, d2q][: order + 1])
    if isinstance(form, NormalForm):
        if order > 2:
            raise ValueError("spline normal forms provide b derivatives up to order 2")
        c = form.c
        c0, c1, c2, c3 = (c(x, k) for k in range(4))
        q = c1 / c0
        dq = c2 / c0 - q**2
        d2q = c3 / c0 - c2 * c1 / c0**2 - 2 * q * dq
        b = (1 - n) * x + n * x**2 * q
        db = (1 - n) + n * (2 * x * q + x**2 * dq)
        d2b = n * (2 * q + 4 * x * dq + x**2 * d2q)
        return np.array([b, db, d2b][: order + 1])
    raise WrongVariant("no spline data for this metric")


@dataclass(frozen=True)
class BoundaryData:
    vol_hat: float
    mean_curv: float
    scal_hat: float


# ---------------------------------------------------------------------------
# operations


def radial_laplacian_coeffs(metric, x):
    """Coefficients ``(a, b)`` with ``Delta f = a f'' + b f'`` for radial ``f``.

    ``x`` is the geodesic distance for space forms and warped products, and the
    defining function ``r`` for normal forms.
    """
    xa = np.asarray(x, dtype=float)
    metric.check_range(xa)
    _check_nondegenerate(metric, xa)
    a = metric.a_jet(xa.ravel(), 0)[0].reshape(xa.shape)
    b = metric.b_jet(xa.ravel(), 0)[0].reshape(xa.shape)
    if xa.ndim == 0:
        return float(a), float(b)
    return a, b


def _check_nondegenerate(metric, x):
    if metric.gauge == "normal":
        vals = metric.form.c(np.atleast_1d(x))
    elif isinstance(metric.form, Warped):
        vals = metric.warp(np.atleast_1d(x))
    else:
        return
    if np.any(vals <= 0):
        raise DegenerateMetric(f"warp/coefficient not positive on the requested range of {metric.label}")


def density(metric, r):
    """Volume density ``D(r) = (det g_r / det g_0)**(1/2)`` and its log-derivative."""
    if metric.gauge != "normal":
        raise WrongVariant("density is defined for normal-form metrics")
    ra = np.asarray(r, dtype=float)
    metric.check_range(ra)
    c = metric.form.c
    c0 = float(c(np.array([0.0]))[0])
    cr = c(ra)
    if np.any(cr <= 0) or c0 <= 0:
        raise DegenerateMetric("c(r) must stay positive")
    n = metric.n
    D = (cr / c0) ** n
    dlogD = n * c(ra, 1) / cr
    if ra.ndim == 0:
        return float(D), float(dlogD)
    return D, dlogD


def boundary_data(metric):
    """Volume, mean curvature and scalar curvature of the boundary metric ``g_hat``."""
    if metric.gauge != "normal":
        raise WrongVariant("boundary data are defined for normal-form metrics")
    n = metric.n
    form = metric.form
    zero = np.array([0.0])
    c0 = float(form.c(zero)[0])
    c1 = float(form.c(zero, 1)[0])
    radius = c0 * form.rho0
    vol = radius**n * sphere_area(n)
    scal = n * (n - 1) / radius**2
    # D = 1 - H r + O(r^2)
    mean_curv = -n * c1 / c0
    return BoundaryData(vol_hat=vol, mean_curv=mean_curv, scal_hat=scal)


def to_geodesic(metric):
    """Re-express a normal-form metric with a smooth center in the geodesic gauge.

    With ``r = exp(-t)`` the warp is ``phi(t) = exp(t) c(exp(-t))``; a smooth center
    at ``r = 1`` requires ``c(1) = 0`` and ``c'(1) = -1``.
    """
    if metric.gauge == "geodesic":
        return metric
    c = metric.form.c
    one = np.array([1.0])
    if not isinstance(c, SymbolicProfile):
        raise NotInCatalog("only symbolic normal forms can be moved to the geodesic gauge")
    c_one = float(c(one)[0])
    dc_one = float(c(one, 1)[0])
    if abs(c_one) > 1e-12 or abs(dc_one + 1.0) > 1e-12:
        raise NotInCatalog(f"{metric.label} has no smooth interior center")
    expr = c.expr.subs(c.var, sp.exp(-T)) * sp.exp(T) * metric.form.rho0
    phi = SymbolicProfile(sp.simplify(expr.rewrite(sp.exp)), T)
    return RadialMetric(metric.n, Warped(phi), metric.yamabe_nonneg, key=metric.key + "|geodesic")


def normal_form_of(metric):
    """Normal-form description of a geodesic-gauge AH metric, ``c(r) = r phi(-log r)``."""
    if metric.gauge == "normal":
        return metric
    if not metric.is_ah:
        raise DegenerateMetric("normal form requires an asymptotically hyperbolic metric")
    phi = metric.warp
    if not isinstance(phi, SymbolicProfile):
        raise NotInCatalog("only symbolic warps have a closed-form normal form")
    expr = sp.simplify((R * phi.expr.subs(phi.var, -sp.log(R))).rewrite(sp.exp))
    return RadialMetric(metric.n, NormalForm(SymbolicProfile(expr, R)), metric.yamabe_nonneg,
                        key=metric.key + "|normal")


# ---------------------------------------------------------------------------
# catalog


def hyperbolic(n, kappa=1.0):
    return RadialMetric(n, SpaceForm(kappa), True, key=f"hyperbolic:n={n}" + ("" if kappa == 1.0 else f":kappa={kappa}"))


def hyperbolic_normal_form(n, r_max=0.999):
    c = SymbolicProfile((1 - R**2) / 2, R)
    return RadialMetric(n, NormalForm(c, 1.0, r_max), True, key=f"hyperbolic-nf:n={n}")


def perturbed_normal_form(n, a=0.5, r_max=0.999):
    """Hyperbolic normal form times ``(1 + a r)``; ``g_(1) != 0`` when ``a != 0``."""
    c = SymbolicProfile((1 - R**2) / 2 * (1 + sp.Float(a) * R), R)
    return RadialMetric(n, NormalForm(c, 1.0, r_max), True, key=f"nf-perturbed:n={n}:a={a}")


def euclidean(n):
    return RadialMetric(n, SpaceForm(0.0), True, key=f"euclid:n={n}")


def warped_from_samples(n, t, phi, yamabe_nonneg=True):
    return RadialMetric(n, Warped(SplineProfile(t, phi)), yamabe_nonneg, key=f"warped-spline:n={n}")


_BARE_FUNCS = re.compile(r"\b(sinh|cosh|tanh|exp|sin|cos|log)\b(?!\s*\()")


def _parse_expr(text, var, params):
    from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

    text = _BARE_FUNCS.sub(lambda m: f"{m.group(1)}({var.name})", text)
    local = {var.name: var, **{k: sp.Float(v) for k, v in params.items()}}
    try:
        return parse_expr(text, local_dict=local, transformations=standard_transformations + (convert_xor,))
    except Exception as exc:  # sympy raises a zoo of exception types
        raise ValueError(f"cannot parse expression {text!r}: {exc}") from exc


def from_key(key):
    """Build a catalog metric from a registry key such as ``"hyperbolic:n=2"``.

    Recognized kinds: ``hyperbolic``, ``spaceform`` (``kappa``), ``euclid``,
    ``hyperbolic-nf``, ``nf-perturbed`` (``a``), ``warped`` (``phi`` expression in ``t``)
    and ``nf`` (``c`` expression in ``r``).  Extra numeric fields are substituted
    into the expressions.
    """
    kind, *fields = key.split(":")
    opts = {}
    for item in fields:
        if "=" not in item:
            raise ValueError(f"malformed metric field {item!r} in {key!r}")
        k, v = item.split("=", 1)
        opts[k.strip()] = v.strip()
    try:
        n = int(opts.pop("n", 2))
    except ValueError:
        raise ValueError(f"n must be an integer in {key!r}") from None
    yamabe = opts.pop("yamabe", "1") not in ("0", "false", "False")

    def num(name, default):
        return float(opts.pop(name, default))

    if kind == "hyperbolic":
        metric = hyperbolic(n, num("kappa", 1.0))
    elif kind == "spaceform":
        metric = RadialMetric(n, SpaceForm(num("kappa", 1.0)), yamabe)
    elif kind == "euclid":
        metric = euclidean(n)
    elif kind == "hyperbolic-nf":
        metric = hyperbolic_normal_form(n, num("r_max", 0.999))
    elif kind == "nf-perturbed":
        metric = perturbed_normal_form(n, num("a", 0.5), num("r_max", 0.999))
    elif kind == "warped":
        text = opts.pop("phi", None)
        if text is None:
            raise ValueError("warped metrics need a phi=... field")
        params = {k: float(v) for k, v in opts.items()}
        opts.clear()
        metric = RadialMetric(n, Warped(SymbolicProfile(_parse_expr(text, T, params), T)), yamabe)
    elif kind == "nf":
        text = opts.pop("c", None)
        if text is None:
            raise ValueError("nf metrics need a c=... field")
        r_max = float(opts.pop("r_max", 0.999))
        params = {k: float(v) for k, v in opts.items()}
        opts.clear()
        metric = RadialMetric(n, NormalForm(SymbolicProfile(_parse_expr(text, R, params), R), 1.0, r_max), yamabe)
    else:
        raise NotInCatalog(f"unknown metric kind {kind!r}")
    if opts:
        raise ValueError(f"unknown metric fields {sorted(opts)} in {key!r}")
    object.__setattr__(metric, "key", key)
    return metric
