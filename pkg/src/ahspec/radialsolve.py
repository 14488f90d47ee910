"""Numerical kernels shared by the eigenvalue and verification modules.

* ``quad_adaptive``: adaptive Gauss-Kronrod quadrature (QUADPACK) with optional
  algebraic endpoint weights for declared power singularities.
* ``shoot_first_zero``: first zero of the radial p-Laplacian initial value problem.
* ``smallest_generalized_eigen``: smallest eigenpair of a banded pencil by shifted
  inverse iteration, with Cholesky inertia checks keeping the shift below it.
* ``order_fit``: log-log regression certifying ``O(r**k)`` remainders.
* jet helpers: exact derivatives of ``a f'' + b f'`` from derivative arrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.special import comb

from .errors import (
    AllZeroRemainders,
    InsufficientData,
    MaxSubdivisions,
    NoConvergence,
    NonFinite,
    NotPositiveDefinite,
    StiffFailure,
)

ODE_RTOL = 1e-8
ROOT_RTOL = 1e-10
QUAD_TOL = 1e-8
# iterations without halving the residual before declaring the roundoff floor
STALL_ITERATIONS = 4


@dataclass(frozen=True)
class OrderEstimate:
    slope: float
    intercept: float
    fit_range: tuple
    residual_rms: float
    n_used: int = 0
    n_zero: int = 0

    def meets(self, order, slack=0.1):
        return self.slope >= order - slack


@dataclass(frozen=True)
class EigenResult:
    value: float
    residual: float
    mesh_size: int
    extrapolated: bool = False
    diagnostics: str = ""

    def as_dict(self):
        return {
            "value": self.value,
            "residual": self.residual,
            "mesh_size": self.mesh_size,
            "extrapolated": self.extrapolated,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# quadrature


def quad_adaptive(f, interval, tol=QUAD_TOL, *, rel=False, alpha=0.0, beta=0.0, limit=500):
    """Integrate ``f`` over ``interval`` to absolute (or relative) tolerance ``tol``.

    ``alpha``/``beta`` declare integrable power singularities ``(x-a)**alpha`` and
    ``(b-x)**beta``; ``f`` is still the full integrand, the declared factor is
    divided out and handled exactly by an algebraic weight.

    Returns ``(value, err_est)``.
    """
    a, b = map(float, interval)
    if not a < b:
        raise ValueError(f"empty interval ({a}, {b})")
    singular = alpha != 0.0 or beta != 0.0
    # evaluations are kept off the endpoints, far enough that the declared weight
    # neither underflows nor overflows
    gap = 1e-100 * (b - a)
    lo = a + max(gap, 4 * math.ulp(a))
    hi = b - max(gap, 4 * math.ulp(b))

    if singular:
        def g(x):
            x = min(max(x, lo), hi)
            v = f(x) / ((x - a) ** alpha * (b - x) ** beta)
            if not math.isfinite(v):
                raise NonFinite(f"integrand not finite at x={x!r}")
            return v
    else:
        def g(x):
            v = f(x)
            if not math.isfinite(v):
                raise NonFinite(f"integrand not finite at x={x!r}")
            return v

    epsabs, epsrel = (0.0, tol) if rel else (tol, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        if singular:
            out = quad(g, a, b, weight="alg", wvar=(alpha, beta), epsabs=epsabs, epsrel=epsrel,
                       limit=limit, full_output=1)
        else:
            out = quad(g, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    value, err = out[0], out[1]
    bound = tol * abs(value) if rel else tol
    if err > bound and len(out) > 3:
        raise MaxSubdivisions(f"quadrature on [{a}, {b}] stopped at error {err:.3g} > {bound:.3g}: {out[3]}")
    return value, err


def integrate_pieces(f, knots, tol=1e-12, log_ratio=8.0):
    """Relative-accuracy integral of a piecewise-smooth ``f`` split at ``knots``.

    Pieces ``[a, b]`` with ``a > 0`` and ``b/a > log_ratio`` are integrated in
    ``x = log r`` so integrands with power-law blow-up near 0 stay well resolved.
    """
    total = 0.0
    err = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if not b > a:
            continue
        if a > 0 and b / a > log_ratio:
            la, lb = math.log(a), math.log(b)
            # exp(x) carries a relative error of about |x| ulp
            floor = 128 * np.finfo(float).eps * max(abs(la), abs(lb))
            val, e = quad_adaptive(lambda x: f(math.exp(x)) * math.exp(x), (la, lb),
                                   max(tol, floor), rel=True)
        else:
            val, e = quad_adaptive(f, (a, b), tol, rel=True)
        total += val
        err += e
    return total, err


# ---------------------------------------------------------------------------
# jets: arrays whose k-th row holds the k-th derivative


def jet_mul(u, v, order=None):
    """Leibniz product of two jets, truncated to ``order``."""
    if order is None:
        order = min(len(u), len(v)) - 1
    out = []
    for k in range(order + 1):
        acc = 0.0
        for j in range(k + 1):
            acc = acc + comb(k, j, exact=True) * u[j] * v[k - j]
        out.append(acc)
    return np.array(out)


def laplacian_jet(a_jet, b_jet, f_jet):
    """Jet of ``a f'' + b f'`` given jets of ``a``, ``b`` and ``f`` (order drops by 2)."""
    order = len(f_jet) - 3
    if order < 0:
        raise ValueError("need at least second derivatives of f")
    return jet_mul(a_jet, f_jet[2:], order) + jet_mul(b_jet, f_jet[1:], order)


def iterated_laplacian_jet(a_jet, b_jet, f_jet, m):
    out = f_jet
    for _ in range(m):
        out = laplacian_jet(a_jet, b_jet, out)
    return out


def power_jet(x, s, order):
    """Jet of ``x**s``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((order + 1,) + x.shape)
    coef = 1.0
    for k in range(order + 1):
        out[k] = coef * x ** (s - k)
        coef *= s - k
    return out


def polynomial_jet(coeffs, x, order):
    """Jet of a polynomial given by numpy.polynomial coefficients (low to high)."""
    p = np.polynomial.Polynomial(coeffs)
    return np.array([p.deriv(k)(x) if k else p(x) for k in range(order + 1)])


# ---------------------------------------------------------------------------
# shooting


def _start_values(a_coeff, b_coeff, p, lam, t0):
    # near the regular singular point b ~ nu/t:  (t^nu w)' = -lam t^nu / a
    a0 = a_coeff(t0)
    nu = t0 * b_coeff(t0) / a0
    q = p / (p - 1.0)
    w0 = -lam * t0 / (a0 * (nu + 1.0))
    f0 = 1.0 - (lam / (a0 * (nu + 1.0))) ** (1.0 / (p - 1.0)) * t0**q / q
    return f0, w0


def _shoot(a_coeff, b_coeff, p, lam, t_start, max_t, rtol, chunk=4.0):
    """Integrate the radial p-Laplacian ODE; return ``(T, f_end, df_end)``.

    ``T`` is the first zero or ``None``.  The state is renormalized after every
    chunk (the equation is homogeneous of degree ``p-1``).
    """
    pm1 = p - 1.0
    inv = 1.0 / pm1

    def rhs(t, y):
        f, w = y
        df = math.copysign(abs(w) ** inv, w)
        dw = -(b_coeff(t) * w + lam * math.copysign(abs(f) ** pm1, f)) / a_coeff(t)
        return (df, dw)

    def hit(t, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1

    f0, w0 = _start_values(a_coeff, b_coeff, p, lam, t_start)
    y = np.array([f0, w0])
    t = t_start
    while t < max_t:
        t_end = min(t + chunk, max_t)
        sol = solve_ivp(rhs, (t, t_end), y, method="DOP853", rtol=rtol, atol=rtol * 1e-3, events=hit)
        if sol.status == -1:
            raise StiffFailure(f"integration failed at t={sol.t[-1]:.6g}: {sol.message}")
        if sol.t_events[0].size:
            return float(sol.t_events[0][0]), 0.0, None
        y = sol.y[:, -1]
        t = t_end
        scale = max(abs(y[0]), abs(y[1]) ** inv)
        if scale == 0 or not math.isfinite(scale):
            raise StiffFailure("solution collapsed")
        y = np.array([y[0] / scale, y[1] / scale**pm1])
    df = math.copysign(abs(y[1]) ** inv, y[1])
    return None, float(y[0]), float(df)


def shoot_first_zero(a_coeff, b_coeff, p, lam, t_start=1e-6, max_t=50.0, rtol=ODE_RTOL * 1e-3):
    """First zero of the regular radial solution of
    ``a (|f'|^{p-2} f')' + b |f'|^{p-2} f' + lam |f|^{p-2} f = 0``, ``f(0)=1, f'(0)=0``.

    Integrated in ``(f, w = |f'|^{p-2} f')``, started from the series solution at
    ``t_start``.  Returns ``math.inf`` when ``f`` stays positive up to ``max_t``.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    T, _, _ = _shoot(a_coeff, b_coeff, p, lam, t_start, max_t, rtol)
    return math.inf if T is None else T


def shooting_defect(a_coeff, b_coeff, p, lam, R, t_start=1e-6, rtol=1e-11):
    """Signed distance-like defect ``g(lam)``, monotone decreasing and zero at the eigenvalue.

    ``T - R`` when a zero occurs before ``R``; otherwise ``f(R)/|f'(R)|`` (the
    linearized distance to the next zero), which is positive.
    """
    T, f_end, df_end = _shoot(a_coeff, b_coeff, p, lam, t_start, R, rtol)
    if T is not None:
        return T - R
    if df_end == 0.0:
        return math.inf
    return f_end / abs(df_end)


# ---------------------------------------------------------------------------
# banded generalized eigenproblem


def _to_upper_banded(M):
    M = sps.csr_matrix(M)
    coo = M.tocoo()
    u = int(np.max(np.abs(coo.col - coo.row))) if coo.nnz else 0
    n = M.shape[0]
    ab = np.zeros((u + 1, n))
    for k in range(u + 1):
        ab[u - k, k:] = M.diagonal(k)
    return ab, u


def _banded_matvec(ab, u, x):
    n = x.size
    y = ab[u] * x
    for k in range(1, u + 1):
        d = ab[u - k, k:]
        y[:-k] += d * x[k:]
        y[k:] += d * x[:-k]
    return y


def _banded_norm1(ab, u):
    # max absolute column sum of the symmetric matrix stored in upper band form
    s = np.abs(ab[u]).copy()
    for k in range(1, u + 1):
        d = np.abs(ab[u - k, k:])
        s[k:] += d
        s[:-k] += d
    return float(np.max(s))


def _try_cholesky(ab):
    try:
        return sla.cholesky_banded(ab, lower=False, check_finite=False)
    except sla.LinAlgError:
        return None


def smallest_generalized_eigen(A, B, tol=1e-9, max_iter=500):
    """Smallest eigenvalue of the symmetric banded pencil ``A x = lam B x``.

    The shift is kept strictly below the smallest eigenvalue: a shift is accepted
    only when ``A - shift B`` admits a Cholesky factorization, and failed shifts
    become upper bounds.  Convergence is declared when the residual
    ``|Ax - lam Bx| / |Bx|`` of the diagonally rescaled pencil is at most
    ``tol * max(1, |lam|)``, or when the residual has stopped decreasing for a few
    iterations (the roundoff floor of ill-conditioned high-order pencils; flagged
    in the diagnostics together with the normwise backward error).
    """
    A = sps.csr_matrix(A, dtype=float)
    B = sps.csr_matrix(B, dtype=float)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square with equal dimensions")
    dB = B.diagonal()
    if np.any(dB <= 0) or not np.all(np.isfinite(dB)):
        raise NotPositiveDefinite("B has a nonpositive diagonal entry")
    d = 1.0 / np.sqrt(dB)
    Dm = sps.diags(d)
    As = Dm @ A @ Dm
    Bs = Dm @ B @ Dm
    abA, uA = _to_upper_banded(As)
    abB, uB = _to_upper_banded(Bs)
    u = max(uA, uB)
    abA = np.vstack([np.zeros((u - uA, abA.shape[1])), abA])
    abB = np.vstack([np.zeros((u - uB, abB.shape[1])), abB])
    if _try_cholesky(abB) is None:
        raise NotPositiveDefinite("B is not positive definite")
    N = A.shape[0]

    scale = float(np.max(np.abs(abA))) or 1.0
    lo = 0.0
    c_lo = _try_cholesky(abA)
    step = 1e-12 * scale
    while c_lo is None:
        lo -= step
        step *= 10.0
        if step > 1e6 * scale:
            raise NotPositiveDefinite("A is not bounded below relative to B")
        c_lo = _try_cholesky(abA - lo * abB)

    normA = _banded_norm1(abA, u)
    normB = _banded_norm1(abB, u)
    idx = np.arange(N)
    x = 1.0 + 0.25 * np.sin(0.7 * idx + 0.3)
    hi = math.inf
    theta = math.nan
    res = best_res = math.inf
    stalled = 0
    n_chol = 1
    for it in range(1, max_iter + 1):
        y = sla.cho_solve_banded((c_lo, False), _banded_matvec(abB, u, x), check_finite=False)
        By = _banded_matvec(abB, u, y)
        nrm = math.sqrt(float(y @ By))
        x = y / nrm
        Bx = By / nrm
        Ax = _banded_matvec(abA, u, x)
        theta = float(x @ Ax)
        hi = min(hi, theta)
        rnorm = float(np.linalg.norm(Ax - theta * Bx))
        res = rnorm / float(np.linalg.norm(Bx))
        backward = rnorm / ((normA + abs(theta) * normB) * float(np.linalg.norm(x)))
        if res < 0.5 * best_res:
            stalled = 0
        else:
            stalled += 1
        best_res = min(best_res, res)
        floor = stalled >= STALL_ITERATIONS
        if res <= tol * max(1.0, abs(theta)) or floor:
            guard = theta - max(1e-9 * max(1.0, abs(theta)), 10 * res)
            n_chol += 1
            if guard <= lo or _try_cholesky(abA - guard * abB) is not None:
                return EigenResult(theta, res, N, False,
                                   f"iterations={it} cholesky={n_chol} shift={lo:.12g}"
                                   f" backward_error={backward:.2g}" + (" roundoff_floor" if floor else ""))
            # an eigenvalue lies below: restart from a perturbed vector
            hi = guard
            stalled, best_res = 0, math.inf
            x = x + 0.25 * np.cos(1.3 * idx)
        sigma = lo + 0.8 * (hi - lo)
        if sigma > lo:
            n_chol += 1
            c_try = _try_cholesky(abA - sigma * abB)
            if c_try is None:
                hi = sigma
            else:
                lo, c_lo = sigma, c_try
    raise NoConvergence(f"inverse iteration stalled: theta={theta}, residual={res:.3g}")


# ---------------------------------------------------------------------------
# order fits


def order_fit(samples):
    """Least-squares slope of ``log remainder`` against ``log r``.

    Nonpositive remainders are dropped and counted; if every remainder vanished
    ``AllZeroRemainders`` is raised (an exact expansion, slope ``+inf``).
    """
    data = np.asarray(list(samples), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("samples must be (r, remainder) pairs")
    r, rem = data[:, 0], data[:, 1]
    if r.size < 8:
        raise InsufficientData(f"need at least 8 samples, got {r.size}")
    if np.any(np.diff(r) >= 0):
        raise ValueError("r samples must be strictly decreasing")
    keep = rem > 0
    n_zero = int(np.sum(~keep))
    if not np.any(keep):
        raise AllZeroRemainders("all remainders vanish")
    if np.sum(keep) < 8:
        raise InsufficientData(f"only {int(np.sum(keep))} nonzero remainders")
    lx = np.log(r[keep])
    ly = np.log(rem[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return OrderEstimate(float(slope), float(intercept), (float(r[keep].min()), float(r[keep].max())),
                         float(np.sqrt(np.mean(resid**2))), int(np.sum(keep)), n_zero)
