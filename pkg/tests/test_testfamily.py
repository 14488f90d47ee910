import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from ahspec.errors import FitFailure, OutOfRange, WrongVariant
from ahspec.geometry import hyperbolic, hyperbolic_normal_form, perturbed_normal_form
from ahspec.testfamily import (
    VARIANTS,
    CutoffParams,
    buckling_integrals,
    buckling_limit_formula,
    clamped_integrals,
    clamped_limit_formula,
    cutoff_eval,
    denominator_bracket,
    denominator_coefficient_check,
    epsilon_limit_quotient,
    exact_formula,
    rayleigh_buckling_numeric,
    rayleigh_clamped_numeric,
    rayleigh_sweep,
)

H2 = hyperbolic_normal_form(2)


# -- cutoff -----------------------------------------------------------------

def test_cutoff_branches():
    p = CutoffParams(0.9, 0.1, 1.0)
    assert cutoff_eval(p, p.lower) == 0.0
    assert cutoff_eval(p, 0.1) == 1.0
    assert cutoff_eval(p, 0.075) == pytest.approx(0.5)
    assert cutoff_eval(p, 0.0) == 0.0
    assert cutoff_eval(p, 0.3) == 1.0
    assert cutoff_eval(p, p.A) == 0.0
    assert cutoff_eval(p, 0.95) == 0.0


@pytest.mark.parametrize("profile", ["cubic", "quintic"])
def test_cutoff_continuous_at_knots(profile):
    p = CutoffParams(0.9, 1e-2, 1e-3, outer_profile=profile)
    for k in p.knots:
        left = cutoff_eval(p, np.nextafter(k, 0))
        right = cutoff_eval(p, np.nextafter(k, 1))
        assert left == pytest.approx(right, abs=1e-12)


def test_cutoff_monotone_outer():
    p = CutoffParams(0.9, 1e-2, 1e-3)
    r = np.linspace(p.eps_r, p.A, 200)
    assert np.all(np.diff(cutoff_eval(p, r)) <= 0)


def test_cutoff_params_validation():
    with pytest.raises(ValueError):
        CutoffParams(0.9, 0.6, 1e-3)
    with pytest.raises(ValueError):
        CutoffParams(0.9, 1e-2, -1.0)
    with pytest.raises(ValueError):
        CutoffParams(0.9, 1e-2, 1e-3, outer_profile="gaussian")
    with pytest.raises(OutOfRange):
        rayleigh_clamped_numeric(H2, CutoffParams(1.2, 1e-2, 1e-3), 2)


def test_requires_normal_form():
    with pytest.raises(WrongVariant):
        rayleigh_clamped_numeric(hyperbolic(2), CutoffParams(0.9, 1e-2, 1e-3), 1)


# -- quotients --------------------------------------------------------------

def _fd_quotient_l1(p, points=200001):
    """Independent oracle: grid samples of r^s phi, centred differences, Simpson in log r."""
    total_num = total_den = 0.0
    pieces = [(p.lower, p.eps), (p.eps, p.eps_r), (p.eps_r, p.A)]
    for a, b in pieces:
        x = np.linspace(math.log(a), math.log(b), points)
        r = np.exp(x)
        # interior nudges keep samples on a single branch
        rr = np.clip(r, a * (1 + 1e-13), b * (1 - 1e-13))
        f = rr**p.s * cutoff_eval(p, rr)
        dfdx = np.gradient(f, x, edge_order=2)
        w = math.pi * r ** (-3.0) * (1 - r**2) ** 2 * r
        # |grad f|^2 = r^2 f_r^2 = (df/dx)^2
        total_num += simpson(dfdx**2 * w, x=x)
        total_den += simpson(f**2 * w, x=x)
    return total_num / total_den


def test_l1_quotient_vs_grid_oracle():
    p = CutoffParams(0.9, 1e-2, 1e-3)
    assert rayleigh_clamped_numeric(H2, p, 1) == pytest.approx(_fd_quotient_l1(p), rel=1e-6)


def test_delta_convergence():
    vals = [rayleigh_clamped_numeric(H2, CutoffParams(0.9, 1e-2, d), 2) for d in (1e-2, 1e-3, 1e-4)]
    assert abs(vals[2] - vals[1]) / vals[2] < 0.01
    assert abs(vals[1] - vals[0]) / vals[1] < 0.01
    limit = rayleigh_clamped_numeric(H2, CutoffParams(0.9, 1e-2, 0.0), 2)
    assert limit == pytest.approx(vals[2], rel=1e-3)


@pytest.mark.parametrize("l", [1, 2, 3])
def test_quotients_above_sharp_constant(l):
    p = CutoffParams(0.95, 1e-3, 1e-4)
    assert rayleigh_clamped_numeric(H2, p, l) > 1.0


def test_buckling_above_sharp_constant():
    assert rayleigh_buckling_numeric(H2, CutoffParams(0.95, 1e-3, 1e-4)) > 1.0


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_quotient_homogeneous(c):
    p = CutoffParams(0.9, 1e-2, 1e-3)
    ref = rayleigh_clamped_numeric(H2, p, 2)
    assert rayleigh_clamped_numeric(H2, p, 2, amplitude=c) == pytest.approx(ref, rel=1e-12)
    refb = rayleigh_buckling_numeric(H2, p)
    assert rayleigh_buckling_numeric(H2, p, amplitude=c) == pytest.approx(refb, rel=1e-12)


def test_buckling_denominator_is_l1_numerator():
    p = CutoffParams(0.9, 1e-2, 1e-3)
    assert buckling_integrals(H2, p)[1] == pytest.approx(clamped_integrals(H2, p, 1)[0], rel=1e-10)
    assert buckling_integrals(H2, p)[0] == pytest.approx(clamped_integrals(H2, p, 2)[0], rel=1e-10)


# -- closed forms -----------------------------------------------------------

@pytest.mark.parametrize("l", [2, 3])
@pytest.mark.parametrize("variant", VARIANTS)
def test_clamped_formula_limit(l, variant):
    assert clamped_limit_formula(1 - 1e-8, 2, l, variant) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("variant", VARIANTS)
def test_buckling_formula_limit(n, variant):
    assert buckling_limit_formula(n / 2 - 1e-8, n, variant) == pytest.approx(n * n / 4, abs=1e-6)


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_formula_limit_general_n(l):
    for n in (2, 3, 5):
        assert clamped_limit_formula(n / 2 - 1e-9, n, l, "rederived") == pytest.approx((n / 2) ** (2 * l), rel=1e-6)


def test_exact_rationals_at_four_fifths():
    assert exact_formula(Fraction(4, 5), 2, 2, "displayed") == Fraction(504, 625)
    assert exact_formula(Fraction(4, 5), 2, 2, "rederived") == Fraction(477, 625)
    assert exact_formula(Fraction(4, 5), 2, "buckling", "displayed") == Fraction(504, 725)
    assert exact_formula(Fraction(4, 5), 2, "buckling", "rederived") == Fraction(477, 725)


def test_odd_variants_coincide():
    for s in (0.6, 0.8, 0.95):
        assert clamped_limit_formula(s, 2, 3, "displayed") == clamped_limit_formula(s, 2, 3, "rederived")


@pytest.mark.parametrize("k", range(6, 11))
def test_variants_agree_near_endpoint(k):
    s = 1 - 10.0**-k
    a = clamped_limit_formula(s, 2, 2, "displayed")
    b = clamped_limit_formula(s, 2, 2, "rederived")
    assert abs(a - b) <= 10.0 ** (2 - k)


def test_unknown_variant():
    with pytest.raises(ValueError):
        clamped_limit_formula(0.9, 2, 2, "other")


def test_denominator_bracket_exact():
    s = Fraction(99, 100)
    assert denominator_bracket(s, 2) == Fraction(1, 1) / Fraction(198, 100) + 50


# -- epsilon expansions -----------------------------------------------------

@pytest.mark.parametrize("s", [0.8, 0.9, 0.95])
def test_denominator_coefficient(s):
    est = denominator_coefficient_check(H2, s)
    assert est.coefficient == pytest.approx(math.pi * (1 / (2 * s) - 1 / (2 * s - 2)), rel=0.02)
    assert est.rel_error < 1e-6
    assert est.slope == pytest.approx(2 * s - 2, abs=0.02)


def test_denominator_coefficient_perturbed_metric():
    m = perturbed_normal_form(2, 0.5)
    est = denominator_coefficient_check(m, 0.9)
    assert est.rel_error < 0.02


def test_denominator_schedule_validation():
    with pytest.raises(FitFailure):
        denominator_coefficient_check(H2, 0.9, eps_schedule=[1e-2, 1e-3])


@pytest.mark.parametrize("problem,expected", [(2, "rederived"), ("buckling", "rederived"), (3, "both"), (1, "both")])
def test_epsilon_limit_selects_variant(problem, expected):
    ext = epsilon_limit_quotient(H2, 0.8, problem)
    assert ext.matching == expected
    assert ext.rel_gap < 1e-6


def test_epsilon_limit_profile_insensitive():
    a = epsilon_limit_quotient(H2, 0.8, 2).value
    b = epsilon_limit_quotient(H2, 0.8, 2, outer_profile="quintic").value
    assert a == pytest.approx(b, rel=1e-6)


def test_sweep_rows():
    rows = rayleigh_sweep(H2, [0.9], [1e-2], [1e-3], [2, "B"])
    assert [r[3] for r in rows] == ["2", "B"]
    assert all(len(r) == 7 for r in rows)
