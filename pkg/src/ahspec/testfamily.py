"""The boundary-concentrated test family ``r^s * phi_{eps,delta}`` and its quotients.

``phi`` vanishes for ``r <= eps*delta/(1+delta)``, rises linearly to 1 at ``r = eps``,
stays 1 up to ``eps_r`` and decays to 0 on ``[eps_r, A]`` through a smooth outer
profile.  Quotients are evaluated in normal-form coordinates with
``dv = Vol(g_hat) r^{-n-1} D(r) dr``; the test function is only piecewise smooth,
so integrals are split at the knots and each piece is integrated separately
(jump terms of derivatives at the knots are not part of the piecewise quotient).

The closed-form limits come in two variants.  ``displayed`` keeps the
``2s-n+1`` denominator of the band contribution; ``rederived`` uses ``2s-n+2``,
which is what integrating ``r^{2s+2-n-1}`` over the band gives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import FitFailure, OutOfRange, WrongVariant
from .geometry import boundary_data
from .radialsolve import OrderEstimate, integrate_pieces, iterated_laplacian_jet, jet_mul, order_fit, power_jet

VARIANTS = ("displayed", "rederived")
PROFILES = ("cubic", "quintic")
# the delta -> 0 limit integrates the band down to this fraction of eps
BAND_FLOOR = 1e-10


@dataclass(frozen=True)
class CutoffParams:
    s: float
    eps: float
    delta: float
    eps_r: float = 0.5
    A: float = 0.9
    outer_profile: str = "cubic"

    def __post_init__(self):
        if not 0 < self.eps < self.eps_r < self.A:
            raise ValueError(f"need 0 < eps < eps_r < A, got {self.eps}, {self.eps_r}, {self.A}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative (0 means the delta -> 0 limit)")
        if self.outer_profile not in PROFILES:
            raise ValueError(f"outer_profile must be one of {PROFILES}")

    @property
    def lower(self):
        return self.eps * self.delta / (1 + self.delta)

    @property
    def knots(self):
        return (self.lower, self.eps, self.eps_r, self.A)

    def check_s(self, n):
        if not (n - 1) / 2 < self.s < n / 2:
            raise OutOfRange(f"s={self.s} outside ((n-1)/2, n/2) = ({(n - 1) / 2}, {n / 2})")


def _profile_jet(kind, x, order):
    # decreasing smoothstep on [0, 1]: 1 at 0, 0 at 1
    if kind == "cubic":
        coeffs = [1.0, 0.0, -3.0, 2.0]
    else:
        coeffs = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0]
    p = np.polynomial.Polynomial(coeffs)
    return np.array([p.deriv(k)(x) if k else p(x) for k in range(order + 1)])


def _cutoff_jet(params, r, order):
    """Jet of ``phi`` at a point ``r`` strictly inside one of the pieces."""
    out = np.zeros(order + 1)
    lo, eps, er, A = params.knots
    if r <= lo or r >= A:
        return out
    if r < eps:
        slope = (1 + params.delta) / eps
        out[0] = slope * (r - lo)
        if order >= 1:
            out[1] = slope
        return out
    if r <= er:
        out[0] = 1.0
        return out
    w = A - er
    jet = _profile_jet(params.outer_profile, (r - er) / w, order)
    return jet * w ** -np.arange(order + 1)


def cutoff_eval(params, r):
    """The cutoff ``phi_{eps,delta}`` at ``r >= 0`` (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("r must be nonnegative")
    lo, eps, er, A = params.knots
    slope = (1 + params.delta) / eps
    band = slope * (r_arr - lo)
    w = A - er
    x = np.clip((r_arr - er) / w, 0.0, 1.0)
    outer = _profile_jet(params.outer_profile, x, 0)[0]
    out = np.where(r_arr <= lo, 0.0,
                   np.where(r_arr < eps, band,
                            np.where(r_arr <= er, 1.0, np.where(r_arr < A, outer, 0.0))))
    return float(out) if out.ndim == 0 else out


def family_jet(params, r, order, amplitude=1.0):
    """Jet of ``amplitude * r^s phi`` at ``r`` (piecewise closed form)."""
    rs = power_jet(np.float64(r), params.s, order)
    return amplitude * jet_mul(rs, _cutoff_jet(params, r, order), order)


def _radial_ops(metric, r, f_jet, m):
    order = len(f_jet) - 1
    lo = max(order - 2, 0)
    a = metric.a_jet(np.array([r]), lo)[:, 0]
    b = metric.b_jet(np.array([r]), lo)[:, 0]
    return iterated_laplacian_jet(a, b, f_jet, m)


def _integrate(metric, params, integrand, log_space=False):
    """``Vol(g_hat) * int integrand(r) r^{-n-1} D(r) dr`` over the support, split at the knots.

    With ``log_space`` the integrand returns ``log(integrand)`` (``-inf`` for zero),
    which keeps powers ``r^{ps}`` representable for very small ``eps``.
    """
    n = metric.n
    bd = boundary_data(metric)
    c = metric.form.c
    c0 = float(c(np.array([0.0]))[0])
    cfun = c.scalar(0) if hasattr(c, "scalar") else (lambda x: float(c(np.array([x]))[0]))

    def f(r):
        D = (float(cfun(r)) / c0) ** n
        if log_space:
            lv = integrand(r)
            return math.exp(lv - (n + 1.0) * math.log(r)) * D if lv > -math.inf else 0.0
        val = integrand(r)
        if val == 0.0:
            return 0.0
        # combine the powers in log space: r^{-n-1} alone overflows for tiny r
        return math.copysign(math.exp(math.log(abs(val)) - (n + 1.0) * math.log(r)), val) * D

    lo, eps, er, A = params.knots
    if lo > 0:
        knots = [lo, eps, er, A]
    else:
        knots = [0.0, BAND_FLOOR * eps, eps, er, A]
    val, _ = integrate_pieces(f, knots)
    return bd.vol_hat * val


def _require_normal(metric):
    if metric.gauge != "normal":
        raise WrongVariant("test-family quotients are evaluated on normal-form metrics")


def clamped_integrals(metric, params, l, amplitude=1.0):
    """``(numerator, denominator)`` of the clamped quotient of ``r^s phi``."""
    _require_normal(metric)
    params.check_s(metric.n)
    if int(l) != l or l < 1:
        raise ValueError("l must be a positive integer")
    m, odd = divmod(int(l), 2)

    def num(r):
        jet = family_jet(params, r, 2 * m + odd, amplitude)
        lap = _radial_ops(metric, r, jet, m)
        if odd:
            return r * r * lap[1] ** 2
        return lap[0] ** 2

    def den(r):
        return (amplitude * r**params.s * _cutoff_jet(params, r, 0)[0]) ** 2

    return _integrate(metric, params, num), _integrate(metric, params, den)


def buckling_integrals(metric, params, amplitude=1.0):
    """``(int |Delta f|^2, int |grad f|^2)`` for ``f = r^s phi``."""
    _require_normal(metric)
    params.check_s(metric.n)

    def num(r):
        return _radial_ops(metric, r, family_jet(params, r, 2, amplitude), 1)[0] ** 2

    def den(r):
        return r * r * family_jet(params, r, 1, amplitude)[1] ** 2

    return _integrate(metric, params, num), _integrate(metric, params, den)


def gradient_p_integrals(metric, params, p):
    """``(int |grad f|^p, int f^p)`` for ``f = r^s phi``; near-extremal for ``s -> n/p``."""
    _require_normal(metric)
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not 0 < params.s < metric.n / p:
        raise OutOfRange(f"s={params.s} outside (0, n/p)")

    s = params.s

    def num(r):
        # r f' = r^s (s phi + r phi')
        phi = _cutoff_jet(params, r, 1)
        g = abs(s * phi[0] + r * phi[1])
        return p * (s * math.log(r) + math.log(g)) if g > 0 else -math.inf

    def den(r):
        phi = _cutoff_jet(params, r, 0)[0]
        return p * (s * math.log(r) + math.log(phi)) if phi > 0 else -math.inf

    return _integrate(metric, params, num, True), _integrate(metric, params, den, True)


def rayleigh_clamped_numeric(metric, params, l, amplitude=1.0):
    num, den = clamped_integrals(metric, params, l, amplitude)
    return num / den


def rayleigh_buckling_numeric(metric, params, amplitude=1.0):
    num, den = buckling_integrals(metric, params, amplitude)
    return num / den


# ---------------------------------------------------------------------------
# closed forms (generic arithmetic: works with floats and Fractions)


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")


def clamped_limit_formula(s, n, l, variant="displayed"):
    """Iterated limit (delta, then eps) of the clamped quotient of ``r^s phi``."""
    _check_variant(variant)
    m, odd = divmod(int(l), 2)
    k = 2 * s - n
    if odd:
        return ((k + 2) * s ** (2 * m + 2) * (s - n) ** (2 * m)
                - k * (s + 1) ** (2 * m + 2) * (s + 1 - n) ** (2 * m)) / 2
    K0 = s ** (2 * m) * (s - n) ** (2 * m)
    K1 = (s + 1) ** (2 * m) * (s + 1 - n) ** (2 * m)
    if variant == "displayed":
        return (K0 * (k + 2) - K1 * (k + 2) * k / (k + 1)) / 2
    return (K0 * (k + 2) - K1 * k) / 2


def buckling_limit_formula(s, n, variant="displayed"):
    """Iterated limit of the buckling quotient of ``r^s phi``."""
    _check_variant(variant)
    k = 2 * s - n
    K0 = s**2 * (s - n) ** 2
    K1 = (s + 1) ** 2 * (s + 1 - n) ** 2
    den = s**2 * (k + 2) - k * (s + 1) ** 2
    if variant == "displayed":
        return (k + 2) * (K0 * (k + 1) - k * K1) / ((k + 1) * den)
    return (K0 * (k + 2) - k * K1) / den


def denominator_bracket(s, n):
    """``1/(2s-n+2) - 1/(2s-n)``, the divergent coefficient of ``int (r^s phi)^2`` per unit volume."""
    k = 2 * s - n
    return 1 / (k + 2) - 1 / k


def exact_formula(s, n, problem, variant):
    """Formula evaluated in exact rational arithmetic for rational ``s``."""
    s = Fraction(s)
    if problem == "buckling":
        return buckling_limit_formula(s, n, variant)
    return clamped_limit_formula(s, n, int(problem), variant)


# ---------------------------------------------------------------------------
# epsilon-expansion fits


DEFAULT_EPS_SCHEDULE = tuple(float(x) for x in np.logspace(-2, -6, 12))


def _expansion_fit(eps, values, alpha, extra_powers=2):
    """Least squares ``values ~ C0 + C1 eps^alpha + sum_j C_{j+1} eps^(alpha+j)``."""
    eps = np.asarray(eps, dtype=float)
    cols = [np.ones_like(eps)] + [eps ** (alpha + j) for j in range(extra_powers + 1)]
    M = np.array(cols).T
    # columns differ by orders of magnitude: scale them before solving
    scale = np.max(np.abs(M), axis=0)
    coef, *_ = np.linalg.lstsq(M / scale, np.asarray(values, dtype=float), rcond=None)
    return coef / scale


@dataclass(frozen=True)
class CoefficientEstimate(OrderEstimate):
    """Order fit of the divergent part plus the fitted and predicted coefficients."""
    coefficient: float = math.nan
    expected: float = math.nan

    @property
    def rel_error(self):
        return abs(self.coefficient - self.expected) / abs(self.expected)


def denominator_coefficient_check(metric, s, eps_schedule=DEFAULT_EPS_SCHEDULE, **cutoff):
    """Fit the ``eps^{2s-n}`` coefficient of ``lim_{delta->0} int (r^s phi)^2 dv``."""
    _require_normal(metric)
    eps = np.asarray(eps_schedule, dtype=float)
    if eps.size < 8 or np.any(np.diff(eps) >= 0):
        raise FitFailure("eps_schedule must be strictly decreasing with at least 8 entries")
    n = metric.n
    alpha = 2 * s - n
    den = []
    for e in eps:
        p = CutoffParams(s, float(e), 0.0, **cutoff)
        p.check_s(n)
        den.append(_integrate(metric, p, lambda r, p=p: (r**p.s * _cutoff_jet(p, r, 0)[0]) ** 2))
    coef = _expansion_fit(eps, den, alpha)
    divergent = np.abs(np.asarray(den) - coef[0])
    est = order_fit(zip(eps, divergent))
    expected = boundary_data(metric).vol_hat * denominator_bracket(s, n)
    return CoefficientEstimate(est.slope, est.intercept, est.fit_range, est.residual_rms, est.n_used, est.n_zero,
                               coefficient=float(coef[1]), expected=float(expected))


@dataclass(frozen=True)
class LimitExtraction:
    """Iterated-limit value recovered from eps-expansion fits and the formula variant it matches
    (``"both"`` when the two variants coincide, as for odd ``l``)."""
    value: float
    formulas: dict
    matching: str
    rel_gap: float


def epsilon_limit_quotient(metric, s, problem, eps_schedule=DEFAULT_EPS_SCHEDULE, **cutoff):
    """Ratio of the fitted ``eps^{2s-n}`` coefficients of numerator and denominator.

    This is the ``eps -> 0`` limit of the (delta -> 0) quotient; it is compared with
    both closed-form variants and the closer one is reported.
    """
    _require_normal(metric)
    n = metric.n
    alpha = 2 * s - n
    nums, dens = [], []
    for e in eps_schedule:
        p = CutoffParams(s, float(e), 0.0, **cutoff)
        if problem == "buckling":
            a, b = buckling_integrals(metric, p)
        else:
            a, b = clamped_integrals(metric, p, int(problem))
        nums.append(a)
        dens.append(b)
    cn = _expansion_fit(eps_schedule, nums, alpha)
    cd = _expansion_fit(eps_schedule, dens, alpha)
    value = float(cn[1] / cd[1])
    if problem == "buckling":
        formulas = {v: float(buckling_limit_formula(s, n, v)) for v in VARIANTS}
    else:
        formulas = {v: float(clamped_limit_formula(s, n, int(problem), v)) for v in VARIANTS}
    gaps = {v: abs(value - f) / abs(f) for v, f in formulas.items()}
    matching = min(VARIANTS, key=lambda v: gaps[v])
    if abs(formulas["displayed"] - formulas["rederived"]) <= 1e-12 * abs(formulas["displayed"]):
        matching = "both"
    return LimitExtraction(value, formulas, matching, min(gaps.values()))


def rayleigh_sweep(metric, s_values, eps_values, delta_values, problems, **cutoff):
    """Rows ``(s, eps, delta, l_or_B, numeric_quotient, formula_displayed, formula_rederived)``."""
    rows = []
    n = metric.n
    for s in s_values:
        for eps in eps_values:
            for delta in delta_values:
                p = CutoffParams(float(s), float(eps), float(delta), **cutoff)
                for prob in problems:
                    if prob in ("B", "buckling"):
                        q = rayleigh_buckling_numeric(metric, p)
                        fp, fr = (buckling_limit_formula(s, n, v) for v in VARIANTS)
                        label = "B"
                    else:
                        q = rayleigh_clamped_numeric(metric, p, int(prob))
                        fp, fr = (clamped_limit_formula(s, n, int(prob), v) for v in VARIANTS)
                        label = str(int(prob))
                    rows.append((float(s), float(eps), float(delta), label, float(q), float(fp), float(fr)))
    return rows
