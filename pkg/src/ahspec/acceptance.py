"""The acceptance suite: eleven named checks with machine-readable pass/fail.

Every criterion returns ``Check`` rows (deterministic values only) plus a
summary; wall-clock times are kept out of the rows so that two runs render
identical CSV bytes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import asymptotics, bounds, testfamily
from .errors import AhspecError
from .geometry import hyperbolic, hyperbolic_normal_form, perturbed_normal_form
from .plap import DEFAULT_SCHEDULE, ball_schedule, plap_limit, scaling_check
from .polyharm import polyharm_limit

SEED = 20240601
CRITERIA = tuple(range(1, 12))
TIME_LIMITS = {1: 10, 2: 60, 3: 180, 4: 120, 5: 120, 6: 60, 7: 60, 8: 30, 9: 120, 10: 120, 11: 600}
TITLES = {
    1: "p-Laplacian limit, hyperbolic n=2, p=2",
    2: "p-Laplacian limits (3/p)^p, hyperbolic n=3",
    3: "clamped limits (n/2)^(2l), hyperbolic n=2",
    4: "buckling limits n^2/4, hyperbolic n=2,3",
    5: "test-family formulas and finite-eps quotient",
    6: "denominator eps^(2s-n) coefficient",
    7: "boundary expansion orders",
    8: "Lee eigenfunction",
    9: "Poincare-type inequalities",
    10: "totally geodesic submanifold sharpness",
    11: "determinism of the acceptance CSV",
}


@dataclass
class Check:
    criterion: int
    name: str
    value: object
    target: object
    tolerance: object
    passed: bool

    def as_row(self):
        return {"criterion": self.criterion, "check": self.name, "value": _fmt(self.value),
                "target": _fmt(self.target), "tolerance": _fmt(self.tolerance),
                "passed": "pass" if self.passed else "FAIL"}


@dataclass
class CriterionResult:
    number: int
    checks: list = field(default_factory=list)
    elapsed: float = 0.0
    error: str = ""
    series: dict = field(default_factory=dict)  # plot data

    @property
    def title(self):
        return TITLES[self.number]

    @property
    def within_time(self):
        return self.elapsed < TIME_LIMITS[self.number]

    @property
    def passed(self):
        return not self.error and bool(self.checks) and all(c.passed for c in self.checks) and self.within_time

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        failed = [c.name for c in self.checks if not c.passed]
        extra = f"; error: {self.error}" if self.error else ""
        if failed:
            extra += "; failed: " + ", ".join(failed[:4]) + (" ..." if len(failed) > 4 else "")
        if not self.within_time:
            extra += f"; over time limit {TIME_LIMITS[self.number]} s"
        return (f"criterion {self.number:2d} [{status}] {self.title} "
                f"({sum(c.passed for c in self.checks)}/{len(self.checks)} checks, {self.elapsed:.1f} s){extra}")


def _fmt(x):
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def _rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# criteria


def criterion_1(res):
    limit, quality, radii, values = plap_limit(hyperbolic(2), 2.0, DEFAULT_SCHEDULE, return_values=True)
    res.checks.append(Check(1, "plap_limit H2 p=2", limit, 1.0, 0.01, _rel(limit, 1.0) <= 0.01))
    for R, v in zip(radii, values):
        res.checks.append(Check(1, f"lambda(B_{R:g}) > 1", v, ">1", 0, v > 1.0))
    res.series["plap H2 p=2"] = (radii, values, 1.0)


def criterion_2(res):
    metric = hyperbolic(3)
    for p in (1.5, 2.0, 3.0, 4.0):
        limit, _, radii, values = plap_limit(metric, p, DEFAULT_SCHEDULE, return_values=True)
        target = (3 / p) ** p
        res.checks.append(Check(2, f"plap_limit H3 p={p:g}", limit, target, 0.01, _rel(limit, target) <= 0.01))
        res.series[f"plap H3 p={p:g}"] = (radii, values, target)
    for p in (1.5, 2.0, 3.0, 4.0):
        gap = scaling_check(2.0, 3, p, 2.0)
        res.checks.append(Check(2, f"scaling kappa=2 p={p:g}", gap, 0.0, 1e-6, gap <= 1e-6))


def _dirichlet_values(metric, radii):
    return [r.value for r in ball_schedule(metric, 2.0, radii)]


def criterion_3(res):
    metric = hyperbolic(2)
    radii = sorted(DEFAULT_SCHEDULE)
    lam = _dirichlet_values(metric, radii)
    for l in (1, 2, 3):
        # every task runs the nested-mesh check; a violation raises MeshTooCoarse
        limit, _, _, values = polyharm_limit(metric, l, radii, return_values=True)
        res.checks.append(Check(3, f"mesh doubling monotone l={l}", "ok", "ok", 0, True))
        tol = 0.02 if l <= 2 else 0.05
        res.checks.append(Check(3, f"polyharm_limit H2 l={l}", limit, 1.0, tol, _rel(limit, 1.0) <= tol))
        for R, g, lm in zip(radii, values, lam):
            ok = g >= lm**l * (1 - 1e-9)
            res.checks.append(Check(3, f"Gamma^{l}(B_{R:g}) >= lambda1^{l}", g, lm**l, 1e-9, ok))
        res.series[f"clamped H2 l={l}"] = (radii, values, 1.0)


def criterion_4(res):
    radii = sorted(DEFAULT_SCHEDULE)
    for n in (2, 3):
        metric = hyperbolic(n)
        limit, _, _, values = polyharm_limit(metric, "buckling", radii, return_values=True)
        target = n * n / 4
        res.checks.append(Check(4, f"buckling limit H{n}", limit, target, 0.02, _rel(limit, target) <= 0.02))
        for R, L, lm in zip(radii, values, _dirichlet_values(metric, radii)):
            res.checks.append(Check(4, f"Lambda(B_{R:g}) >= lambda1 H{n}", L, lm, 1e-9, L >= lm * (1 - 1e-9)))
        res.series[f"buckling H{n}"] = (radii, values, target)


def criterion_5(res):
    n = 2
    for k in range(4, 9):
        s = Fraction(n, 2) - Fraction(1, 10**k)
        tol = 10 * 10.0**-k
        for problem, target in (("2", Fraction(1)), ("3", Fraction(1)), ("buckling", Fraction(n * n, 4))):
            for variant in testfamily.VARIANTS:
                val = testfamily.exact_formula(s, n, problem if problem == "buckling" else int(problem), variant)
                err = float(abs(val - target))
                res.checks.append(Check(5, f"formula {problem} {variant} s=1-1e-{k}", float(val), float(target),
                                        tol, err <= tol))
    metric = hyperbolic_normal_form(n)
    params = testfamily.CutoffParams(0.99, 1e-3, 1e-4)
    for problem in ("2", "3", "buckling"):
        # the eps -> 0 extrapolation identifies the variant the quadrature converges to
        ext = testfamily.epsilon_limit_quotient(metric, 0.99, problem)
        variant = "rederived" if ext.matching == "both" else ext.matching
        target = ext.formulas[variant]
        res.checks.append(Check(5, f"eps->0 extrapolated quotient {problem} s=0.99 (matches {ext.matching})",
                                ext.value, target, 0.05, ext.rel_gap <= 0.05))
        if problem == "buckling":
            q = testfamily.rayleigh_buckling_numeric(metric, params)
        else:
            q = testfamily.rayleigh_clamped_numeric(metric, params, int(problem))
        res.checks.append(Check(5, f"numeric {problem} s=0.99 eps=1e-3 delta=1e-4 vs {variant}", q, target, 0.05,
                                _rel(q, target) <= 0.05))
    # the limit must not depend on how the cutoff decays in the outer region
    ext = testfamily.epsilon_limit_quotient(metric, 0.99, "2", outer_profile="quintic")
    target = ext.formulas["rederived"]
    res.checks.append(Check(5, "eps->0 extrapolated quotient 2 s=0.99 quintic outer profile", ext.value, target,
                            0.05, _rel(ext.value, target) <= 0.05))


def criterion_6(res):
    metric = hyperbolic_normal_form(2)
    for s in (0.8, 0.9, 0.95):
        est = testfamily.denominator_coefficient_check(metric, s)
        res.checks.append(Check(6, f"eps^(2s-n) coefficient s={s:g}", est.coefficient, est.expected, 0.02,
                                est.rel_error <= 0.02))
        res.checks.append(Check(6, f"divergence order s={s:g}", est.slope, 2 * s - 2, 0.1,
                                abs(est.slope - (2 * s - 2)) <= 0.1))


def criterion_7(res):
    metrics = {"hyperbolic-nf:n=3": hyperbolic_normal_form(3), "nf-perturbed:n=3:a=0.5": perturbed_normal_form(3, 0.5)}
    for key, metric in metrics.items():
        for l in (1, 2, 3):
            est = asymptotics.check_delta_r_expansion(metric, l)
            res.checks.append(Check(7, f"Delta^{l} r order {key}", est.slope, 2, 0.1, est.meets(2)))
        for m in (0, 1, 2, 3):
            est = asymptotics.check_grad_delta_r(metric, m)
            res.checks.append(Check(7, f"|grad Delta^{m} r|^2 order {key}", est.slope, 3, 0.1, est.meets(3)))
        for s in (0.6, 0.9, 1.2):
            for m in (0, 1, 2, 3):
                first, second = asymptotics.check_rs_expansion(metric, s, m)
                res.checks.append(Check(7, f"Delta^{m} r^{s:g} order {key}", first.slope, s + 1, 0.1,
                                        first.meets(s + 1)))
                res.checks.append(Check(7, f"|grad Delta^{m} r^{s:g}|^2 order {key}", second.slope, 2 * s + 1, 0.1,
                                        second.meets(2 * s + 1)))
            err = asymptotics.grad_rs_exactness(metric, s)
            res.checks.append(Check(7, f"|grad r^{s:g}|^2 exact {key}", err, 0.0, 1e-12, err <= 1e-12))


def criterion_8(res):
    for n in (2, 3):
        metric = hyperbolic(n)
        sol = asymptotics.lee_solve(metric)
        rep = asymptotics.lee_checks(metric, sol, strict=False)
        cosh_err = float(np.max(np.abs(sol.u / (2 * np.cosh(sol.grid)) - 1)))
        res.checks.append(Check(8, f"u = 2 cosh t H{n}", cosh_err, 0.0, 1e-8, cosh_err <= 1e-8))
        res.checks.append(Check(8, f"eigen-residual H{n}", sol.residual, 0.0, 1e-8, sol.residual <= 1e-8))
        res.checks.append(Check(8, f"r u -> 1 H{n}", rep.normalization, 0.0, 1e-8, rep.normalization <= 1e-8))
        res.checks.append(Check(8, f"min(u^2-|grad u|^2) > 0 H{n}", rep.min_gap, ">0", 0, rep.min_gap > 0))
        res.checks.append(Check(8, f"boundary gap Rhat/(n(n-1)) H{n}", rep.boundary_gap, rep.expected_gap, 0.01,
                                rep.boundary_rel_error <= 0.01))
        res.checks.append(Check(8, f"r^2 coefficient of r u H{n}", rep.next_coefficient, rep.expected_coefficient,
                                0.01, rep.coefficient_rel_error <= 0.01))
        res.series[f"Lee r*u H{n}"] = (sol.grid.tolist(), (sol.r * sol.u).tolist(), 1.0)


def criterion_9(res):
    bumps = bounds.random_bumps(200, SEED)
    for n in (2, 3):
        metric = hyperbolic(n)
        for p in (1.5, 2.0, 3.0):
            margins = [bounds.poincare_check(metric, f, p).margin for f in bumps]
            worst = min(margins)
            res.checks.append(Check(9, f"Poincare 200 bumps H{n} p={p:g} (min margin)", worst, 0.0, 1e-10,
                                    worst >= -1e-10))
            ratio = bounds.near_extremal_ratio(n, p)
            res.checks.append(Check(9, f"near-extremal family n={n} p={p:g}", ratio, 1.0, 0.03,
                                    1 - 1e-10 <= ratio <= 1.03))
            eps_m, _ = bounds.w_max(n, p)
            eps_num, _ = bounds.w_numeric_max(n, p)
            res.checks.append(Check(9, f"w argmax b={n} p={p:g}", eps_num, eps_m, 1e-6, abs(eps_num - eps_m) <= 1e-6))
    metric = hyperbolic(2)
    for p in (2.0, 3.0):
        for m in (1, 2):
            reps = [bounds.iterated_inequality_check(metric, f, p, m) for f in bumps[:50]]
            w1 = min(r.laplacian.margin for r in reps)
            w2 = min(r.gradient.margin for r in reps)
            res.checks.append(Check(9, f"Lin1 p={p:g} m={m} (min margin)", w1, 0.0, 1e-10, w1 >= -1e-10))
            res.checks.append(Check(9, f"Lin2 p={p:g} m={m} (min margin)", w2, 0.0, 1e-10, w2 >= -1e-10))


def criterion_10(res):
    ambient = hyperbolic(3)
    sol = asymptotics.lee_solve(ambient)
    for k in (1, 2):
        sub = bounds.ModelSubmanifold("totally-geodesic", k, ambient)
        beta = bounds.submanifold_beta(sub, sol)
        res.checks.append(Check(10, f"beta totally geodesic k={k}", beta, 0.0, 1e-9, abs(beta) <= 1e-9))
        intrinsic = sub.intrinsic_metric()
        for p in (2.0, 3.0):
            target = bounds.submanifold_lower_bounds(k, sub.alpha, beta, p, 2)[0]
            lim, _ = plap_limit(intrinsic, p)
            res.checks.append(Check(10, f"plap k={k} p={p:g}", lim, target, 0.02, _rel(lim, target) <= 0.02))
        _, clamped_target, buckling_target = bounds.submanifold_lower_bounds(k, sub.alpha, beta, 2, 2)
        lim, _ = polyharm_limit(intrinsic, 2)
        res.checks.append(Check(10, f"clamped l=2 k={k}", lim, clamped_target, 0.02,
                                _rel(lim, clamped_target) <= 0.02))
        lim, _ = polyharm_limit(intrinsic, "buckling")
        res.checks.append(Check(10, f"buckling k={k}", lim, buckling_target, 0.02,
                                _rel(lim, buckling_target) <= 0.02))


RUNNERS = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
           6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def run_criterion(number):
    res = CriterionResult(number)
    start = time.perf_counter()
    try:
        RUNNERS[number](res)
    except AhspecError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    res.elapsed = time.perf_counter() - start
    return res


def rows_of(results):
    return [c.as_row() for r in results for c in r.checks]


def run_suite(selected=CRITERIA, render=None, progress=None):
    """Run the selected criteria in order.

    Criterion 11 re-runs the other selected criteria and compares the CSV bytes
    produced by ``render(rows)`` for both runs.
    """
    selected = sorted(set(selected))
    results = []
    for k in selected:
        if k == 11:
            continue
        results.append(run_criterion(k))
        if progress:
            progress(results[-1])
    if 11 in selected:
        res = CriterionResult(11)
        start = time.perf_counter()
        first = render(rows_of(results))
        again = [run_criterion(k) for k in selected if k != 11]
        second = render(rows_of(again))
        res.series["rerun seconds"] = time.perf_counter() - start
        # the time limit applies to one pass of the suite, not to the rerun
        res.elapsed = sum(r.elapsed for r in results)
        res.checks.append(Check(11, "identical CSV bytes on rerun", len(first), len(second), 0, first == second))
        results.append(res)
        if progress:
            progress(res)
    return results
