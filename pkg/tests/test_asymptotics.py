import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ahspec.asymptotics import (
    check_delta_r_expansion,
    check_grad_delta_r,
    check_rs_expansion,
    grad_rs_exactness,
    iterated_laplacian_r,
    lee_checks,
    lee_solve,
    rs_leading_coefficients,
)
from ahspec.errors import NotInCatalog, OutOfRange, WrongVariant
from ahspec.geometry import from_key, hyperbolic, hyperbolic_normal_form, perturbed_normal_form

GENERIC = perturbed_normal_form(3, 0.5)
# weakly Poincare-Einstein (c = (1 - r^2)/2 + O(r^4)) with a smooth center, not hyperbolic
WPE = from_key("warped:n=3:phi=sinh(t)+0.5*sinh(t)^3/cosh(t)^6")


# -- iterated Laplacian of r ------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 5])
def test_delta_r_hyperbolic_closed_form(n):
    r = np.logspace(-3, -0.2, 9)
    got = iterated_laplacian_r(hyperbolic_normal_form(n), 1, r)
    np.testing.assert_allclose(got, -(n - 1) * r - 2 * n * r**3 / (1 - r**2), rtol=1e-13)


def test_delta_r_n2_example():
    r = np.array([0.1, 0.5])
    np.testing.assert_allclose(iterated_laplacian_r(hyperbolic_normal_form(2), 1, r),
                               -r - 4 * r**3 / (1 - r**2), rtol=1e-14)


@pytest.mark.parametrize("l", [1, 2, 3])
@pytest.mark.parametrize("n", [2, 4])
def test_delta_r_leading_coefficient(n, l):
    r = 1e-6
    val = iterated_laplacian_r(hyperbolic_normal_form(n), l, [r])[0]
    assert val / r == pytest.approx((-(n - 1)) ** l, rel=1e-8)


def test_delta_r_out_of_range():
    with pytest.raises(OutOfRange):
        iterated_laplacian_r(hyperbolic_normal_form(2), 1, [0.0, 0.1])
    with pytest.raises(OutOfRange):
        iterated_laplacian_r(hyperbolic_normal_form(2), 1, [0.9995])


def test_expansions_need_normal_form():
    with pytest.raises(WrongVariant):
        iterated_laplacian_r(hyperbolic(2), 1, [0.1])


@pytest.mark.parametrize("l", [1, 2, 3])
def test_delta_r_order_hyperbolic(l):
    est = check_delta_r_expansion(hyperbolic_normal_form(3), l)
    assert est.slope == pytest.approx(3.0, abs=0.1)
    assert est.n_used == 10


@pytest.mark.parametrize("l", [1, 2, 3])
def test_delta_r_order_generic(l):
    est = check_delta_r_expansion(GENERIC, l)
    assert est.slope == pytest.approx(2.0, abs=0.1)


# -- gradient of iterated Laplacian ------------------------------------------

@pytest.mark.parametrize("metric", [hyperbolic_normal_form(2), GENERIC])
def test_grad_delta_r_m0_exact(metric):
    assert check_grad_delta_r(metric, 0).slope == math.inf


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("metric", [hyperbolic_normal_form(2), hyperbolic_normal_form(4), GENERIC])
def test_grad_delta_r_order(metric, m):
    assert check_grad_delta_r(metric, m).meets(3.0)


# -- powers r^s ---------------------------------------------------------------

@pytest.mark.parametrize("s", [0.6, 0.9, 1.2])
@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("metric", [hyperbolic_normal_form(3), GENERIC])
def test_rs_orders(metric, s, m):
    first, second = check_rs_expansion(metric, s, m)
    assert first.meets(s + 1)
    assert second.meets(2 * s + 1)


def test_rs_m0_exact():
    first, second = check_rs_expansion(GENERIC, 0.9, 0)
    assert first.slope == math.inf and second.slope == math.inf


@given(st.floats(0.05, 3.0))
@settings(max_examples=30, deadline=None)
def test_grad_rs_identity(s):
    assert grad_rs_exactness(GENERIC, s) < 1e-12


def test_rs_leading_hyperbolic_n2():
    got, expected = rs_leading_coefficients(hyperbolic_normal_form(2), 0.9, 1)
    assert expected == pytest.approx(-0.99)
    assert got == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("metric", [hyperbolic_normal_form(3), GENERIC])
def test_rs_leading_m2_s12_n3(metric):
    got, expected = rs_leading_coefficients(metric, 1.2, 2)
    assert expected == pytest.approx(4.6656)
    tol = 1e-8 if metric is not GENERIC else 1e-4  # O(r) correction when g_(1) != 0
    assert got == pytest.approx(expected, rel=tol)


def test_rs_rejects_bad_input():
    with pytest.raises(ValueError):
        check_rs_expansion(GENERIC, 0.0, 1)
    with pytest.raises(ValueError):
        check_rs_expansion(GENERIC, 0.5, -1)


# -- Lee eigenfunction ----------------------------------------------------------

@pytest.fixture(scope="module")
def lee_h2():
    m = hyperbolic(2)
    return m, lee_solve(m)


def test_lee_matches_cosh(lee_h2):
    _, sol = lee_h2
    # normalization r u -> 1 with r = exp(-t) gives u = 2 cosh t
    np.testing.assert_allclose(sol.u / 2, np.cosh(sol.grid), rtol=1e-8)
    np.testing.assert_allclose(sol.du / 2, np.sinh(sol.grid), rtol=1e-8, atol=1e-8)
    assert sol.residual <= 1e-8
    assert np.all(sol.u > 0)


def test_lee_normalization_and_monotone(lee_h2):
    _, sol = lee_h2
    far = sol.grid > 12
    np.testing.assert_allclose(sol.r[far] * sol.u[far], 1.0, atol=1e-8)
    assert np.all(np.diff(sol.u) > 0)


def test_lee_checks_hyperbolic(lee_h2):
    m, sol = lee_h2
    rep = lee_checks(m, sol)
    assert rep.weakly_pe
    # u^2 - |grad u|^2 = 4 (cosh^2 - sinh^2) everywhere
    assert rep.min_gap == pytest.approx(4.0, rel=1e-9)
    assert rep.expected_gap == pytest.approx(4.0)
    assert rep.boundary_rel_error < 1e-8
    assert rep.expected_coefficient == pytest.approx(1.0)
    assert rep.coefficient_rel_error < 1e-6


@pytest.mark.parametrize("key", ["hyperbolic:n=3", "hyperbolic-nf:n=4"])
def test_lee_other_dimensions(key):
    m = from_key(key)
    sol = lee_solve(m)
    np.testing.assert_allclose(sol.u / 2, np.cosh(sol.grid), rtol=1e-8)
    assert lee_checks(m, sol).boundary_rel_error < 1e-8


def test_lee_weakly_pe_nonhyperbolic():
    sol = lee_solve(WPE)
    rep = lee_checks(WPE, sol)
    assert rep.weakly_pe
    assert rep.min_gap > 0
    assert rep.boundary_rel_error < 0.01
    assert rep.coefficient_rel_error < 0.01
    assert not np.allclose(sol.u / 2, np.cosh(sol.grid), rtol=1e-3)


def test_lee_non_wpe_gap_unbounded():
    m = from_key("warped:n=3:phi=sinh(t)*(1+0.5*tanh(t/2)^2)")
    rep = lee_checks(m, lee_solve(m))
    assert not rep.weakly_pe
    assert rep.min_gap > 0
    assert rep.boundary_gap > 1e3


def test_lee_needs_center():
    with pytest.raises(NotInCatalog):
        lee_solve(GENERIC)
