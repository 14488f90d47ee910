"""Command-line front end: ``ahspec <task> [flags]``.

Every task writes ``results.csv`` (schema-versioned, deterministic column order
and formatting), ``results.json`` (rows plus solver diagnostics, cache flags and
timings) and, with ``--plots``, self-contained SVG figures.  Exit status is 0
when every contract assertion passed, 1 on a failed assertion or a numerical
error, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance, asymptotics, bounds, testfamily
from .errors import AhspecError, ConfigError, CorruptCache
from .geometry import SpaceForm, from_key
from .plap import DEFAULT_SCHEDULE, PlapTask, extrapolate_limit, plap_ball_eigenvalue, plap_limit
from .plotting import write_svg
from .polyharm import ClampedTask, buckling_eigenvalue, clamped_eigenvalue, polyharm_limit
from .radialsolve import EigenResult

log = logging.getLogger("ahspec")

SCHEMA = "# ahspec-schema v1"
COLUMNS = ("kind", "metric", "params", "quantity", "value", "reference", "tolerance", "passed")
TASKS = ("plap", "clamped", "buckling", "rayleigh-sweep", "expansions", "lee", "poincare", "submanifold",
         "acceptance")
POINCARE_BUMPS = 200

# key -> (parser, default); lists are comma separated
_FLOATS = "floats"
_INTS = "ints"
KEYS = {
    "task": ("str", None),
    "metric": ("str", None),
    "p": (_FLOATS, None),
    "l": ("strs", None),
    "R": (_FLOATS, None),
    "s": (_FLOATS, None),
    "eps": (_FLOATS, None),
    "delta": (_FLOATS, None),
    "tol": ("float", 1e-10),
    "mesh": ("int", None),
    "out": ("str", "ahspec-out"),
    "seed": ("int", acceptance.SEED),
    "plots": ("bool", False),
    "no-cache": ("bool", False),
    "k": (_INTS, None),
    "kind": ("str", "totally-geodesic"),
    "d": ("float", 0.0),
    "criteria": (_INTS, None),
}

DEFAULTS = {
    "plap": {"metric": "hyperbolic:n=2", "p": [2.0], "R": list(DEFAULT_SCHEDULE)},
    "clamped": {"metric": "hyperbolic:n=2", "l": ["1", "2"], "R": list(DEFAULT_SCHEDULE)},
    "buckling": {"metric": "hyperbolic:n=2", "R": list(DEFAULT_SCHEDULE)},
    "rayleigh-sweep": {"metric": "hyperbolic-nf:n=2", "s": [0.99], "eps": [1e-3], "delta": [1e-4],
                       "l": ["2", "3", "B"]},
    "expansions": {"metric": "hyperbolic-nf:n=3", "l": ["1", "2", "3"], "s": [0.6, 0.9, 1.2]},
    "lee": {"metric": "hyperbolic:n=3"},
    "poincare": {"metric": "hyperbolic:n=2", "p": [1.5, 2.0, 3.0]},
    "submanifold": {"metric": "hyperbolic:n=3", "p": [2.0], "l": ["2"], "k": [1, 2]},
    "acceptance": {"criteria": list(acceptance.CRITERIA)},
}


# ---------------------------------------------------------------------------
# configuration


def _convert(key, kind, text):
    text = text.strip()
    try:
        if kind == "str":
            return text
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        items = [t.strip() for t in text.split(",") if t.strip()]
        if kind == _FLOATS:
            return [float(t) for t in items]
        if kind == _INTS:
            return [int(t) for t in items]
        return items
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for key {key!r}") from None


def read_config_file(path):
    """Strict ``key = value`` file (``#`` comments); unknown keys are errors."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out = {}
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = _convert(key, KEYS[key][0], value)
    return out


@dataclass
class RunConfig:
    task: str
    metric: str = ""
    p: list = field(default_factory=list)
    l: list = field(default_factory=list)
    R: list = field(default_factory=list)
    s: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    tol: float = 1e-10
    mesh: int | None = None
    out: str = "ahspec-out"
    seed: int = acceptance.SEED
    plots: bool = False
    no_cache: bool = False
    k: list = field(default_factory=list)
    kind: str = "totally-geodesic"
    d: float = 0.0
    criteria: list = field(default_factory=list)

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r} (key 'task')")
        for key in ("p", "l", "R", "s", "eps", "delta", "k", "criteria"):
            if key in DEFAULTS[self.task] and not getattr(self, key):
                raise ConfigError(f"grid {key!r} must be non-empty")
        if not self.tol > 0:
            raise ConfigError("tolerance 'tol' must be positive")
        if any(not p > 1 for p in self.p):
            raise ConfigError("every 'p' must exceed 1")
        if any(not R > 0 for R in self.R):
            raise ConfigError("every radius 'R' must be positive")
        if any(not e > 0 for e in self.eps) or any(d < 0 for d in self.delta):
            raise ConfigError("'eps' must be positive and 'delta' nonnegative")
        if self.mesh is not None and self.mesh < 64:
            raise ConfigError("'mesh' must be at least 64 elements")
        if any(c not in acceptance.CRITERIA for c in self.criteria):
            raise ConfigError(f"'criteria' must lie in 1..{max(acceptance.CRITERIA)}")
        if self.task in ("clamped", "expansions", "submanifold"):
            for v in self.l:
                if not v.isdigit():
                    raise ConfigError(f"invalid value {v!r} for key 'l'")
        if self.task == "rayleigh-sweep":
            for v in self.l:
                if not (v.isdigit() and int(v) >= 1) and v not in ("B", "buckling"):
                    raise ConfigError(f"invalid value {v!r} for key 'l' (integer >= 1 or B)")
        if self.task != "acceptance":
            try:
                from_key(self.metric)
            except (ValueError, AhspecError) as exc:
                raise ConfigError(f"invalid metric key {self.metric!r} (key 'metric'): {exc}") from None
        return self

    def as_dict(self):
        return {k: getattr(self, k.replace("-", "_")) for k in KEYS}


def build_parser():
    parser = argparse.ArgumentParser(prog="ahspec", allow_abbrev=False,
                                     description="First eigenvalues and sharp bounds on model AH manifolds.")
    parser.add_argument("--version", action="version", version=f"ahspec {__version__}")
    parser.add_argument("--config", dest="config_top", help="config file naming the task (key 'task')")
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="key = value file (strict); command-line flags override it")
    for key, (kind, _) in KEYS.items():
        if key == "task":
            continue
        flag = f"--{key}"
        if kind == "bool":
            common.add_argument(flag, dest=key.replace("-", "_"), action="store_const", const="true", default=None)
        else:
            common.add_argument(flag, dest=key.replace("-", "_"), default=None, metavar=key.upper())
    sub = parser.add_subparsers(dest="task")
    for task in TASKS:
        sub.add_parser(task, parents=[common], allow_abbrev=False)
    return parser


def parse_config(argv):
    """argv -> validated RunConfig; raises ConfigError (argparse problems exit with status 2)."""
    args = build_parser().parse_args(argv)
    path = getattr(args, "config", None) or args.config_top
    values = read_config_file(path) if path else {}
    if args.task is None:
        if "task" not in values:
            raise ConfigError("no task given (subcommand or key 'task')")
        args.task = values["task"]
    elif values.get("task", args.task) != args.task:
        raise ConfigError(f"key 'task' = {values['task']!r} conflicts with subcommand {args.task!r}")
    for key, (kind, _) in KEYS.items():
        raw = getattr(args, key.replace("-", "_"), None)
        if key != "task" and raw is not None:
            values[key] = _convert(key, kind, raw)
    if args.task not in TASKS:
        raise ConfigError(f"unknown task {args.task!r} (key 'task')")
    merged = {k: d for k, (_, d) in KEYS.items() if d is not None}
    merged.update(DEFAULTS[args.task])
    merged.update(values)
    merged["task"] = args.task
    return RunConfig(**{k.replace("-", "_"): v for k, v in merged.items()}).validate()


# ---------------------------------------------------------------------------
# cache


def cache_dir():
    return Path(os.environ.get("AHSPEC_CACHE_DIR") or Path.home() / ".cache" / "ahspec")


def fingerprint(metric_key, kind, params, tol):
    blob = json.dumps({"metric": metric_key, "kind": kind, "params": params, "tol": tol,
                       "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def cache_load(fp):
    path = cache_dir() / f"{fp}.json"
    if not path.exists():
        return None
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("fingerprint") != fp:
            raise CorruptCache("fingerprint mismatch")
        return EigenResult(**data["result"])
    except (ValueError, KeyError, TypeError, CorruptCache) as exc:
        log.warning("corrupt cache entry %s (%s); recomputing", path.name, exc)
        return None


def cache_store(fp, result):
    d = cache_dir()
    d.mkdir(parents=True, exist_ok=True)
    tmp = d / f"{fp}.tmp{os.getpid()}"
    tmp.write_text(json.dumps({"fingerprint": fp, "result": result.as_dict()}), encoding="utf-8")
    os.replace(tmp, d / f"{fp}.json")


class Runner:
    """Collects rows; eigenvalue tasks go through the cache."""

    def __init__(self, config):
        self.config = config
        self.rows = []
        self.series = {}

    def cached(self, kind, params, compute):
        fp = fingerprint(self.config.metric, kind, params, self.config.tol)
        if not self.config.no_cache:
            hit = cache_load(fp)
            if hit is not None:
                return hit, True
        result = compute()
        if not self.config.no_cache:
            cache_store(fp, result)
        return result, False

    def add(self, quantity, value, params="", reference=None, tolerance=None, passed=None, **extra):
        row = {"kind": self.config.task, "metric": self.config.metric, "params": params, "quantity": quantity,
               "value": value, "reference": reference, "tolerance": tolerance, "passed": passed}
        row.update(extra)
        self.rows.append(row)
        return row

    @property
    def passed(self):
        return all(r["passed"] is not False for r in self.rows)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "pass" if x else "FAIL"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def render_csv(rows):
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue().encode("utf-8")


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    return x


# ---------------------------------------------------------------------------
# tasks


def _space_form_reference(metric, power_of_n_over_p):
    """Sharp constant valid on every ball of a space form, else None."""
    if isinstance(metric.form, SpaceForm):
        return power_of_n_over_p(metric.form.kappa)
    return None


def _limit_rows(run, label, radii, values, reference, params):
    kind = "3-term" if len(radii) >= 4 else "2-term (short schedule)"
    if len(radii) < 3:
        return
    limit, quality, _ = extrapolate_limit(radii, values)
    rel = abs(limit - reference) / abs(reference) if reference else None
    # informational: how close a given schedule gets is the acceptance suite's claim, not an invariant
    run.add(f"{label} limit R->inf", limit, params, reference, None, None,
            fit_quality=quality, fit=kind, rel_error=rel)
    run.series[f"{label} {params}"] = (radii, values, reference)


def _eigen_rows(run, label, params, results, reference):
    radii = [R for R, _, _ in results]
    values = [r.value for _, r, _ in results]
    for i, (R, res, hit) in enumerate(results):
        ok = None
        if reference is not None:
            ok = res.value >= reference * (1 - 1e-9)
        if i and ok is not None:
            # domain monotonicity
            ok = ok and res.value <= values[i - 1] * (1 + 1e-9)
        run.add(f"{label}(B_R)", res.value, f"{params};R={R:g}", reference, None, ok, cached=hit,
                residual=res.residual, mesh_size=res.mesh_size, diagnostics=res.diagnostics)
    _limit_rows(run, label, radii, values, reference, params)


def task_plap(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    for p in cfg.p:
        ref = _space_form_reference(metric, lambda k: (k * metric.n / p) ** p)
        results = []
        for R in sorted(cfg.R):
            res, hit = run.cached("plap", {"p": p, "R": R},
                                  lambda: plap_ball_eigenvalue(PlapTask(metric, R, p), cfg.tol))
            results.append((R, res, hit))
        _eigen_rows(run, "lambda_1p", f"p={p:g}", results, ref)


def task_clamped(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    for l in (int(v) for v in cfg.l):
        ref = _space_form_reference(metric, lambda k: (k * metric.n / 2) ** (2 * l))
        results = []
        for R in sorted(cfg.R):
            res, hit = run.cached("clamped", {"l": l, "R": R, "mesh": cfg.mesh},
                                  lambda: clamped_eigenvalue(ClampedTask(metric, R, l, cfg.mesh), cfg.tol))
            results.append((R, res, hit))
        _eigen_rows(run, "Gamma", f"l={l}", results, ref)


def task_buckling(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    ref = _space_form_reference(metric, lambda k: (k * metric.n / 2) ** 2)
    results = []
    for R in sorted(cfg.R):
        res, hit = run.cached("buckling", {"R": R, "mesh": cfg.mesh},
                              lambda: buckling_eigenvalue(metric, R, cfg.mesh, cfg.tol))
        results.append((R, res, hit))
    _eigen_rows(run, "Lambda", "buckling", results, ref)


def task_rayleigh_sweep(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    n = metric.n
    hyperbolic_like = cfg.metric.startswith("hyperbolic-nf")
    problems = ["B" if v in ("B", "buckling") else int(v) for v in cfg.l]
    for s, eps, delta, label, q, fp, fr in testfamily.rayleigh_sweep(metric, cfg.s, cfg.eps, cfg.delta, problems):
        sharp = (n / 2) ** 2 if label == "B" else (n / 2) ** (2 * int(label))
        ok = q >= sharp * (1 - 1e-9) if hyperbolic_like else None
        run.add(f"quotient {label}", q, f"s={s:g};eps={eps:g};delta={delta:g}", sharp, None, ok,
                formula_displayed=fp, formula_rederived=fr)


def task_expansions(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    for l in (int(v) for v in cfg.l):
        if l >= 1:
            est = asymptotics.check_delta_r_expansion(metric, l)
            run.add(f"order Delta^{l} r", est.slope, f"l={l}", 2.0, 0.1, est.meets(2), fit_range=est.fit_range)
        est = asymptotics.check_grad_delta_r(metric, l)
        run.add(f"order |grad Delta^{l} r|^2", est.slope, f"m={l}", 3.0, 0.1, est.meets(3), fit_range=est.fit_range)
        for s in cfg.s:
            first, second = asymptotics.check_rs_expansion(metric, s, l)
            run.add(f"order Delta^{l} r^s", first.slope, f"m={l};s={s:g}", s + 1, 0.1, first.meets(s + 1))
            run.add(f"order |grad Delta^{l} r^s|^2", second.slope, f"m={l};s={s:g}", 2 * s + 1, 0.1,
                    second.meets(2 * s + 1))
    for s in cfg.s:
        err = asymptotics.grad_rs_exactness(metric, s)
        run.add("|grad r^s|^2 exactness", err, f"s={s:g}", 0.0, 1e-12, err <= 1e-12)


def task_lee(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    sol = asymptotics.lee_solve(metric, tol=max(cfg.tol, 1e-12))
    rep = asymptotics.lee_checks(metric, sol, strict=False)
    run.add("eigen-residual", sol.residual, "", 0.0, 1e-8, sol.residual <= 1e-8)
    run.add("min(u^2-|grad u|^2)", rep.min_gap, f"t={rep.min_gap_at:g}", 0.0, None, rep.min_gap > 0)
    wpe = rep.weakly_pe
    # the boundary predictions assume a vanishing first-order term of the compactified metric;
    # otherwise r*u - 1 = O(r) and the gradient gap grows like 1/r
    run.add("r*u -> 1", rep.normalization, f"weakly_pe={str(wpe).lower()}", 0.0, 1e-8,
            rep.normalization <= 1e-8 if wpe else None)
    run.add("boundary gap", rep.boundary_gap, f"weakly_pe={str(wpe).lower()}", rep.expected_gap, 0.01,
            rep.boundary_rel_error <= 0.01 if wpe else None)
    run.add("r^2 coefficient of r*u", rep.next_coefficient, f"weakly_pe={str(wpe).lower()}",
            rep.expected_coefficient, 0.01, rep.coefficient_rel_error <= 0.01 if wpe else None)
    if isinstance(metric.form, SpaceForm) and metric.form.kappa == 1.0:
        err = float(np.max(np.abs(sol.u / (2 * np.cosh(sol.grid)) - 1)))
        run.add("u / (2 cosh t) - 1", err, "", 0.0, 1e-8, err <= 1e-8)
    stride = max(1, sol.grid.size // 200)
    run.series["u^2 - |grad u|^2"] = (
        sol.grid[::stride], (sol.u**2 - sol.du**2)[::stride], rep.expected_gap)


def task_poincare(run):
    cfg = run.config
    metric = from_key(cfg.metric)
    n = metric.n
    bumps = bounds.random_bumps(POINCARE_BUMPS, cfg.seed)
    for p in cfg.p:
        margins = [bounds.poincare_check(metric, f, p).margin for f in bumps]
        run.add("min relative margin", min(margins), f"p={p:g};bumps={len(bumps)};seed={cfg.seed}", 0.0,
                1e-10, min(margins) >= -1e-10, median_margin=float(np.median(margins)))
        ratio = bounds.near_extremal_ratio(n, p)
        run.add("near-extremal quotient/(n/p)^p", ratio, f"p={p:g}", 1.0, 0.03, 1 - 1e-10 <= ratio <= 1.03)
        eps_m, _ = bounds.w_max(n, p)
        eps_num, _ = bounds.w_numeric_max(n, p)
        run.add("w argmax", eps_num, f"p={p:g}", eps_m, 1e-6, abs(eps_num - eps_m) <= 1e-6)


def task_submanifold(run):
    cfg = run.config
    ambient = from_key(cfg.metric)
    sol = asymptotics.lee_solve(ambient)
    for k in cfg.k:
        try:
            sub = bounds.ModelSubmanifold(cfg.kind, k, ambient, cfg.d)
        except ValueError as exc:
            raise ConfigError(f"invalid submanifold (keys 'kind', 'k', 'd'): {exc}") from None
        beta = bounds.submanifold_beta(sub, sol)
        tag = f"kind={cfg.kind};k={k};d={cfg.d:g}"
        run.add("beta(u)", beta, tag, 0.0, 1e-9, abs(beta) <= 1e-9, alpha=sub.alpha)
        intrinsic = sub.intrinsic_metric()
        sharp = cfg.kind == "totally-geodesic"
        for p in cfg.p:
            for l in (int(v) for v in cfg.l):
                plap_b, clamped_b, buckling_b = bounds.submanifold_lower_bounds(k, sub.alpha, max(beta, 0.0), p, l)
                for label, bound, compute in (
                        ("plap", plap_b, lambda: _lim(intrinsic, "plap", p)),
                        ("clamped", clamped_b, lambda: _lim(intrinsic, l)),
                        ("buckling", buckling_b, lambda: _lim(intrinsic, "buckling"))):
                    lim = compute()
                    rel = abs(lim - bound) / bound
                    ok = rel <= 0.02 if sharp else lim >= bound * (1 - 1e-9)
                    run.add(f"intrinsic {label} limit", lim, f"{tag};p={p:g};l={l}", bound,
                            0.02 if sharp else None, ok)


def _lim(metric, problem, p=None):
    if problem == "plap":
        return plap_limit(metric, p)[0]
    return polyharm_limit(metric, problem)[0]


def task_acceptance(run):
    cfg = run.config
    results = acceptance.run_suite(cfg.criteria, render=_acceptance_csv,
                                   progress=lambda r: print(r.line(), flush=True))
    run.acceptance = results
    for res in results:
        for c in res.checks:
            run.rows.append({"kind": "acceptance", "metric": "", "params": f"criterion={c.criterion}",
                             "quantity": c.name, "value": c.value, "reference": c.target,
                             "tolerance": c.tolerance, "passed": c.passed})
        if res.error or not res.within_time:
            run.rows.append({"kind": "acceptance", "metric": "", "params": f"criterion={res.number}",
                             "quantity": "completed within time limit", "value": res.error or "over time",
                             "reference": "", "tolerance": "", "passed": False})
        for label, data in res.series.items():
            if isinstance(data, tuple):
                run.series[f"{res.number}: {label}"] = data


def _acceptance_csv(rows):
    return render_csv([{"kind": "acceptance", "metric": "", "params": f"criterion={r['criterion']}",
                        "quantity": r["check"], "value": r["value"], "reference": r["target"],
                        "tolerance": r["tolerance"], "passed": r["passed"] == "pass"} for r in rows])


HANDLERS = {"plap": task_plap, "clamped": task_clamped, "buckling": task_buckling,
            "rayleigh-sweep": task_rayleigh_sweep, "expansions": task_expansions, "lee": task_lee,
            "poincare": task_poincare, "submanifold": task_submanifold, "acceptance": task_acceptance}


# ---------------------------------------------------------------------------
# output


def _write_plots(run, out):
    paths = []
    if run.config.task == "acceptance":
        groups = {}
        for label, data in run.series.items():
            groups.setdefault(label.split(":", 1)[0], {})[label] = data
        for number, series in sorted(groups.items(), key=lambda kv: int(kv[0])):
            xlabel = "t" if number == "8" else "R"
            paths.append(write_svg(out / f"criterion_{number}.svg", series, xlabel=xlabel,
                                   title=acceptance.TITLES[int(number)]))
    elif run.series:
        xlabel = "t" if run.config.task == "lee" else "R"
        paths.append(write_svg(out / f"{run.config.task}.svg", run.series, xlabel=xlabel, title=run.config.metric))
    return [p.name for p in paths]


def run(config):
    """Execute a validated RunConfig; returns the exit status."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = Runner(config)
    error = None
    start = time.perf_counter()
    try:
        HANDLERS[config.task](runner)
    except ConfigError:
        raise
    except AhspecError as exc:
        error = f"{type(exc).__name__}: {exc}"
        print(f"ahspec {config.task}: task failed after {len(runner.rows)} rows: {error}", file=sys.stderr)
    elapsed = time.perf_counter() - start
    (out / "results.csv").write_bytes(render_csv(runner.rows))
    plots = _write_plots(runner, out) if config.plots else []
    passed = error is None and runner.passed
    doc = {"schema": SCHEMA[2:], "version": __version__, "task": config.task, "config": config.as_dict(),
           "passed": passed, "error": error, "elapsed_seconds": elapsed, "plots": plots, "rows": runner.rows}
    if config.task == "acceptance":
        doc["criteria"] = [{"criterion": r.number, "title": r.title, "passed": r.passed, "error": r.error,
                            "elapsed_seconds": r.elapsed, "time_limit_seconds": acceptance.TIME_LIMITS[r.number],
                            "summary": r.line()} for r in runner.acceptance]
    (out / "results.json").write_text(json.dumps(_json_safe(doc), indent=2), encoding="utf-8")
    if config.task != "acceptance":
        failed = sum(r["passed"] is False for r in runner.rows)
        print(f"ahspec {config.task}: {len(runner.rows)} rows, {failed} failed -> {out / 'results.csv'}")
    return 0 if passed else 1


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
        return run(config)
    except ConfigError as exc:
        print(f"ahspec: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
