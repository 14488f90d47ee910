import math

import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st

from ahspec.errors import (
    AllZeroRemainders,
    InsufficientData,
    MaxSubdivisions,
    NonFinite,
    NotPositiveDefinite,
)
from ahspec.geometry import euclidean, hyperbolic, hyperbolic_normal_form
from ahspec.plap import PlapTask, plap_ball_eigenvalue
from ahspec.radialsolve import (
    integrate_pieces,
    iterated_laplacian_jet,
    laplacian_jet,
    order_fit,
    power_jet,
    quad_adaptive,
    shoot_first_zero,
    smallest_generalized_eigen,
)


# -- quadrature ---------------------------------------------------------------

def test_quad_sqrt_singularity_with_hint():
    val, err = quad_adaptive(lambda r: r**-0.5, (0.0, 1.0), 1e-10, alpha=-0.5)
    assert val == pytest.approx(2.0, abs=1e-10)
    assert err <= 1e-10


def test_quad_sine():
    val, err = quad_adaptive(math.sin, (0.0, math.pi), 1e-10)
    assert val == pytest.approx(2.0, abs=1e-10)


def test_quad_power_closed_form():
    s, n, eps, er = 0.9, 2, 1e-3, 0.1
    k = 2 * s - n
    val, _ = quad_adaptive(lambda r: r ** (k - 1), (eps, er), 1e-8, rel=True)
    assert val == pytest.approx((er**k - eps**k) / k, rel=1e-8)


def test_quad_nonfinite():
    with pytest.raises(NonFinite):
        quad_adaptive(lambda r: math.nan, (0.0, 1.0), 1e-8)


def test_quad_max_subdivisions():
    with pytest.raises(MaxSubdivisions):
        quad_adaptive(lambda r: math.sin(1.0 / r), (1e-6, 1.0), 1e-14, limit=5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), st.floats(-0.9, 2.0), st.floats(0.1, 3.0))
def test_quad_error_estimate_honest(coeffs, power, b):
    poly = np.polynomial.Polynomial(coeffs)
    # integrand x^power * poly(x) on (0, b)
    anti = sum(c * b ** (power + k + 1) / (power + k + 1) for k, c in enumerate(coeffs))
    val, err = quad_adaptive(lambda x: x**power * poly(x), (0.0, b), 1e-9, alpha=power)
    assert abs(val - anti) <= 3 * err + 1e-12 * max(1.0, abs(anti))


def test_integrate_pieces_across_scales():
    # r^{-1.2} on [1e-6, 1] split at a kink-free knot
    f = lambda r: r ** (-1.2)
    val, _ = integrate_pieces(f, [1e-6, 1e-3, 1.0])
    exact = (1.0 - 1e-6 ** (-0.2)) / (-0.2)
    assert val == pytest.approx(exact, rel=1e-10)


# -- jets -------------------------------------------------------------------

def test_laplacian_jet_of_power():
    # on H^3 in geodesic gauge: Delta t^2 = 2 + 4 t coth t
    t = np.array([0.3, 1.1])
    m = hyperbolic(2)
    a, b = m.a_jet(t, 2), m.b_jet(t, 2)
    f = power_jet(t, 2.0, 4)
    lap = laplacian_jet(a, b, f)
    assert lap[0] == pytest.approx(2 + 4 * t / np.tanh(t), rel=1e-12)
    d = 2 / np.tanh(t) - 2 * t / np.sinh(t) ** 2
    assert lap[1] == pytest.approx(2 * d, rel=1e-12)


def test_iterated_laplacian_jet_flat():
    # Euclidean R^3: Delta^2 t^4 = 120
    t = np.array([0.7])
    m = euclidean(2)
    f = power_jet(t, 4.0, 4)
    out = iterated_laplacian_jet(m.a_jet(t, 2), m.b_jet(t, 2), f, 2)
    assert out[0] == pytest.approx([120.0])


# -- shooting ---------------------------------------------------------------

def _coeffs(m):
    return m.coeff_functions()


def test_shoot_interval_cosine():
    a, b = _coeffs(euclidean(0))
    assert shoot_first_zero(a, b, 2.0, 1.0) == pytest.approx(math.pi / 2, rel=1e-9)


def test_shoot_no_zero_at_threshold():
    a, b = _coeffs(hyperbolic(2))
    assert shoot_first_zero(a, b, 2.0, 1.0, max_t=40.0) == math.inf


def test_shoot_finite_above_threshold():
    a, b = _coeffs(hyperbolic(2))
    T = shoot_first_zero(a, b, 2.0, 2.0)
    # H^3: f = sin(kt)/sinh t with k^2 = lambda - 1
    assert T == pytest.approx(math.pi, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.floats(1.3, 4.0), st.floats(1.05, 1.6))
def test_shoot_sturm_monotone(n, p, factor):
    a, b = _coeffs(hyperbolic(n))
    lam = 1.2 * (n / p) ** p + 0.5
    T1 = shoot_first_zero(a, b, p, lam)
    T2 = shoot_first_zero(a, b, p, lam * factor)
    assert T2 < T1


# -- eigensolver ------------------------------------------------------------

def test_eigen_identity():
    I = sps.identity(20, format="csr")
    assert smallest_generalized_eigen(I, I).value == pytest.approx(1.0)


def test_eigen_dirichlet_stencil():
    N = 2000
    h = math.pi / (N + 1)
    A = sps.diags([-np.ones(N - 1), 2 * np.ones(N), -np.ones(N - 1)], [-1, 0, 1]) / h**2
    B = sps.identity(N)
    assert smallest_generalized_eigen(A, B).value == pytest.approx(1.0, rel=1e-5)


def test_eigen_congruence_invariance():
    rng = np.random.default_rng(3)
    N = 40
    A = sps.diags([-np.ones(N - 1), 2 * np.ones(N), -np.ones(N - 1)], [-1, 0, 1]) * (N + 1) ** 2
    B = sps.diags([np.ones(N - 1) / 6, 4 * np.ones(N) / 6, np.ones(N - 1) / 6], [-1, 0, 1]) / (N + 1)
    D = sps.diags(rng.uniform(0.1, 10.0, N))
    v1 = smallest_generalized_eigen(A, B).value
    v2 = smallest_generalized_eigen(D @ A @ D, D @ B @ D).value
    assert v2 == pytest.approx(v1, rel=1e-10)


def test_eigen_rejects_indefinite_mass():
    A = sps.identity(3)
    B = sps.diags([1.0, -1.0, 1.0])
    with pytest.raises(NotPositiveDefinite):
        smallest_generalized_eigen(A, B)


def test_shooting_vs_p1_fem():
    # p = 2 radial Dirichlet form on H^3 ball of radius 4, linear elements, 4000 nodes
    m = hyperbolic(2)
    R, N = 4.0, 4000
    t = np.linspace(0, R, N + 1)
    h = t[1] - t[0]
    gx, gw = np.polynomial.legendre.leggauss(3)
    rows, cols, av, bv = [], [], [], []
    for e in range(N):
        tq = t[e] + 0.5 * h * (gx + 1)
        w = gw * 0.5 * h * np.sinh(tq) ** 2
        phi = np.array([(t[e + 1] - tq) / h, (tq - t[e]) / h])
        dphi = np.array([-1.0, 1.0])[:, None] / h * np.ones_like(tq)
        for i in range(2):
            for j in range(2):
                rows.append(e + i)
                cols.append(e + j)
                av.append(np.sum(w * dphi[i] * dphi[j]))
                bv.append(np.sum(w * phi[i] * phi[j]))
    A = sps.csr_matrix((av, (rows, cols)), shape=(N + 1, N + 1))[:N, :N]
    B = sps.csr_matrix((bv, (rows, cols)), shape=(N + 1, N + 1))[:N, :N]
    fem = smallest_generalized_eigen(A, B).value
    shoot = plap_ball_eigenvalue(PlapTask(m, R, 2.0)).value
    assert fem == pytest.approx(shoot, rel=1e-5)


# -- order fits -------------------------------------------------------------

R_SAMPLES = np.logspace(-2, -4, 12)


def test_order_fit_cubic():
    est = order_fit(zip(R_SAMPLES, R_SAMPLES**3))
    assert est.slope == pytest.approx(3.0, abs=0.01)
    assert est.meets(3)


def test_order_fit_dominant_term():
    est = order_fit(zip(R_SAMPLES, 5 * R_SAMPLES**2 + R_SAMPLES**4))
    assert est.slope == pytest.approx(2.0, abs=0.02)


def test_order_fit_laplacian_of_r():
    # Delta r + (n-1) r on the hyperbolic normal form equals -2 n r^3 / (1 - r^2)
    m = hyperbolic_normal_form(2)
    a, b = m.coeff_functions()
    rem = [abs(b(r) + (2 - 1) * r) for r in R_SAMPLES]
    assert order_fit(zip(R_SAMPLES, rem)).slope == pytest.approx(3.0, abs=0.1)


def test_order_fit_errors():
    with pytest.raises(InsufficientData):
        order_fit([(1.0, 1.0)] * 3)
    with pytest.raises(AllZeroRemainders):
        order_fit(zip(R_SAMPLES, np.zeros(12)))
    with pytest.raises(ValueError):
        order_fit(zip(R_SAMPLES[::-1], R_SAMPLES))
