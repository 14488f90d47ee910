import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from ahspec.errors import DegenerateMetric, NotInCatalog, OutOfRange, WrongVariant
from ahspec.geometry import (
    NormalForm,
    RadialMetric,
    SpaceForm,
    SymbolicProfile,
    Warped,
    boundary_data,
    density,
    euclidean,
    from_key,
    hyperbolic,
    hyperbolic_normal_form,
    normal_form_of,
    perturbed_normal_form,
    radial_laplacian_coeffs,
    sphere_area,
    to_geodesic,
    warped_from_samples,
    T,
)
from ahspec.plap import PlapTask, plap_ball_eigenvalue


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sphere_area(n):
    expected = {1: 2 * math.pi, 2: 4 * math.pi, 3: 2 * math.pi**2, 4: 8 * math.pi**2 / 3}[n]
    assert sphere_area(n) == pytest.approx(expected)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hyperbolic_coeffs(n):
    a, b = radial_laplacian_coeffs(hyperbolic(n), 1.0)
    assert (a, b) == pytest.approx((1.0, n / math.tanh(1.0)))


def test_euclidean_coeffs():
    assert radial_laplacian_coeffs(euclidean(2), 2.0) == pytest.approx((1.0, 1.0))


@pytest.mark.parametrize("r", [0.05, 0.3, 0.7, 0.95])
def test_normal_form_coeffs(r):
    a, b = radial_laplacian_coeffs(hyperbolic_normal_form(2), r)
    assert a == pytest.approx(r * r)
    assert b == pytest.approx(-r - 4 * r**3 / (1 - r**2), rel=1e-12)


def test_normal_form_leading_term():
    m = hyperbolic_normal_form(3)
    for r in (1e-3, 1e-5):
        _, b = radial_laplacian_coeffs(m, r)
        assert b / r == pytest.approx(-(3 - 1), rel=1e-5)


def test_density_examples():
    m3 = hyperbolic_normal_form(3)
    D, _ = density(m3, 0.1)
    assert D == pytest.approx((1 - 0.01) ** 3)
    r = np.array([0.2, 0.5])
    _, dl = density(hyperbolic_normal_form(2), r)
    assert dl == pytest.approx(-4 * r / (1 - r**2))
    assert density(m3, 1e-9)[0] == pytest.approx(1.0)


@pytest.mark.parametrize("metric", [hyperbolic_normal_form(2), perturbed_normal_form(3, 0.5)])
def test_density_integrates_log_derivative(metric):
    r = 0.6
    integral, _ = quad(lambda x: density(metric, x)[1], 1e-12, r, epsabs=1e-13)
    assert density(metric, r)[0] == pytest.approx(math.exp(integral), rel=1e-10)


def test_boundary_data_hyperbolic():
    bd = boundary_data(hyperbolic_normal_form(2))
    assert bd.vol_hat == pytest.approx(math.pi)
    assert bd.scal_hat == pytest.approx(8.0)
    assert bd.mean_curv == 0.0


def test_boundary_data_perturbed_mean_curvature():
    # c = (1 - r^2)(1 + a r)/2  =>  D = 1 + n a r + ...; H = -n c'(0)/c(0) = -n a
    bd = boundary_data(perturbed_normal_form(3, 0.5))
    assert bd.mean_curv == pytest.approx(-1.5)


def test_boundary_data_requires_normal_form():
    with pytest.raises(WrongVariant):
        boundary_data(hyperbolic(2))


def test_out_of_range():
    with pytest.raises(OutOfRange):
        radial_laplacian_coeffs(hyperbolic_normal_form(2), 0.9995)
    with pytest.raises(OutOfRange):
        radial_laplacian_coeffs(hyperbolic(2), -1.0)


def test_degenerate_warp():
    m = RadialMetric(2, Warped(SymbolicProfile(T - T**2, T)))
    with pytest.raises(DegenerateMetric):
        radial_laplacian_coeffs(m, 1.5)


@settings(max_examples=20)
@given(st.floats(0.2, 3.0), st.integers(1, 4))
def test_spaceform_equals_warped(kappa, n):
    sf = RadialMetric(n, SpaceForm(kappa))
    wp = RadialMetric(n, Warped(SymbolicProfile(_sinh_over(kappa), T)))
    t = np.random.default_rng(0).uniform(0.05, 5.0, 100)
    for x in t:
        assert radial_laplacian_coeffs(sf, x) == pytest.approx(radial_laplacian_coeffs(wp, x), rel=1e-12)


def _sinh_over(kappa):
    import sympy as sp

    k = sp.Float(kappa)
    return sp.sinh(k * T) / k


@pytest.mark.parametrize("R", [1.0, 3.0, 5.0])
def test_gauges_give_same_eigenvalue(R):
    a = plap_ball_eigenvalue(PlapTask(hyperbolic(2), R, 2.0)).value
    b = plap_ball_eigenvalue(PlapTask(hyperbolic_normal_form(2), R, 2.0)).value
    assert a == pytest.approx(b, rel=1e-9)


def test_gauge_round_trip():
    nf = normal_form_of(hyperbolic(2))
    r = np.array([0.1, 0.4])
    assert nf.form.c(r) == pytest.approx((1 - r**2) / 2)
    geo = to_geodesic(hyperbolic_normal_form(2))
    t = np.array([0.5, 2.0])
    assert geo.warp(t) == pytest.approx(np.sinh(t))


def test_no_smooth_center():
    with pytest.raises(NotInCatalog):
        to_geodesic(perturbed_normal_form(2, 0.5))


def test_spline_warp_matches_symbolic():
    t = np.linspace(0.0, 6.0, 4001)
    m = warped_from_samples(2, t, np.sinh(t))
    x = np.array([0.7, 2.0, 4.0])
    jet = m.b_jet(x, 1)
    assert jet[0] == pytest.approx(2 / np.tanh(x), rel=1e-7)
    assert jet[1] == pytest.approx(-2 / np.sinh(x) ** 2, rel=1e-4)


@pytest.mark.parametrize("key,kind", [
    ("hyperbolic:n=2", SpaceForm),
    ("spaceform:n=3:kappa=2", SpaceForm),
    ("euclid:n=1", SpaceForm),
    ("hyperbolic-nf:n=2", NormalForm),
    ("nf-perturbed:n=2:a=0.25", NormalForm),
    ("warped:n=2:phi=sinh+eps*t^3:eps=0.01", Warped),
    ("nf:n=2:c=(1-r^2)/2", NormalForm),
])
def test_registry_keys(key, kind):
    m = from_key(key)
    assert isinstance(m.form, kind)
    assert m.key == key


def test_registry_warped_expression():
    m = from_key("warped:n=2:phi=sinh+eps*t^3:eps=0.01")
    assert m.warp(np.array([1.0]))[0] == pytest.approx(math.sinh(1.0) + 0.01)


@pytest.mark.parametrize("key", ["bogus:n=2", "hyperbolic:n=2:zeta=1", "hyperbolic:n=x", "warped:n=2", "hyperbolic:n"])
def test_registry_rejects(key):
    with pytest.raises((ValueError, NotInCatalog)):
        from_key(key)


def test_n_zero_only_for_interval():
    with pytest.raises(ValueError):
        hyperbolic(0)
    assert euclidean(0).n == 0
