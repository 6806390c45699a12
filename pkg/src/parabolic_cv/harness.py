"""Error-versus-cost experiments, exponent sweeps and strong-error studies.

Each outer replication ``m`` at budget point ``i`` uses the seed key
``(seed, "outer", i, m)``, so points and replications can be computed in any
order or in parallel with identical results.
"""

import enum
import functools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng as rngmod
from .budget import RatePair, eps_exponents, log_theoretical_error, optimize_standard, plan_from_exponents
from .errors import ConfigError, NoPathwiseOracleError, NoReferenceError
from .estimators import (
    EstimatorConfig,
    Level,
    cv_estimate,
    cv_estimate_opt_lambda,
    first_component,
    mlmc_estimate,
    standard_mc,
)
from .gaussians import FineGaussians, condition_on_increments_and_areas, sample_fine
from .models import ClosedForm, PdeReference, get_model
from .oracles import feynman_kac_solve, igbm_exact_terminal
from .schemes import (
    PRIMARY_COST,
    SECONDARY_COST,
    SECONDARY_DIFFUSION_COST,
    Primary,
    Secondary,
    run_primary,
    run_secondary,
)


class EstimatorKind(enum.Enum):
    STANDARD = "standard"
    CV = "cv"
    CV_OPT_LAMBDA = "cv-opt-lambda"
    MLMC = "mlmc"


def default_budget_grid(primary=Primary.EULER, points=12):
    """Log-budgets from 6.5 to 14 (13.9 for SRA1, whose steps cost two drift calls)."""
    hi = 14.0 if Primary(primary) is Primary.EULER else 13.9
    return tuple(np.linspace(6.5, hi, points))


@dataclass(frozen=True)
class ExperimentSpec:
    model: str = "sinh"
    estimator: EstimatorKind = EstimatorKind.CV
    rates: RatePair = RatePair()
    exponent_override: Optional[tuple] = None
    budget_grid: tuple = field(default_factory=default_budget_grid)
    outer_reps: int = 1000
    seed: int = 0
    model_params: dict = field(default_factory=dict)
    primary: Primary = Primary.EULER
    secondary: Secondary = Secondary.PARABOLA_RK
    step_prefactor: float = 1.0
    charge_diffusion_calls: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "estimator", EstimatorKind(self.estimator))
        object.__setattr__(self, "primary", Primary(self.primary))
        object.__setattr__(self, "secondary", Secondary(self.secondary))
        grid = tuple(float(v) for v in self.budget_grid)
        if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("budget grid must be strictly increasing with at least two points")
        object.__setattr__(self, "budget_grid", grid)
        if self.outer_reps < 2:
            raise ConfigError("outer_reps must be at least 2")
        if self.exponent_override is not None:
            x, y = map(float, self.exponent_override)
            if not 0 < x <= y < 1:
                raise ConfigError(f"exponents must satisfy 0 < x <= y < 1, got ({x}, {y})")
            object.__setattr__(self, "exponent_override", (x, y))

    def to_dict(self):
        d = asdict(self)
        d["estimator"] = self.estimator.value
        d["primary"] = self.primary.value
        d["secondary"] = self.secondary.value
        d["rates"] = asdict(self.rates)
        d["budget_grid"] = list(self.budget_grid)
        return d


@dataclass
class ErrorCurve:
    """Points ``(cost, error)`` and the least-squares slope of their logs."""

    points: list
    slope: float
    slope_stderr: float
    intercept: float
    label: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def costs(self):
        return np.array([p[0] for p in self.points])

    @property
    def errors(self):
        return np.array([p[1] for p in self.points])


def fit_loglog(xs, ys):
    """Slope, jackknife standard error and intercept of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    n = lx.size
    if n < 3:
        return float(slope), float("nan"), float(intercept)
    loo = np.array([np.polyfit(np.delete(lx, i), np.delete(ly, i), 1)[0] for i in range(n)])
    stderr = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(slope), float(stderr), float(intercept)


def _curve(xs, ys, label, metadata):
    slope, stderr, intercept = fit_loglog(xs, ys)
    return ErrorCurve([(float(a), float(b)) for a, b in zip(xs, ys)], slope, stderr, intercept, label, metadata)


def _model(spec_model, params):
    return get_model(spec_model, **params)


@functools.lru_cache(maxsize=16)
def _pde_reference(name, params_items):
    model = get_model(name, **dict(params_items))
    res = feynman_kac_solve(model.reference.spec, model.x0)
    return res.value, res.metadata()


def reference_value(model):
    """Reference ``E X_1`` and a metadata dict describing where it came from."""
    ref = model.reference
    if isinstance(ref, ClosedForm):
        return float(ref.value), {"kind": "closed-form", "value": float(ref.value)}
    if isinstance(ref, PdeReference):
        value, meta = _pde_reference(model.name, tuple(sorted(model.params.items())))
        return value, {"kind": "pde", **meta}
    raise NoReferenceError(f"model {model.name!r} has no reference value")


def _exponents(spec):
    if spec.exponent_override is not None:
        return spec.exponent_override
    spec.rates.check_admissible()
    return spec.rates.cv_exponents


def build_plan(spec, log_cost):
    """Plan realising budget ``exp(log_cost)`` for the estimator of ``spec``."""
    C = math.exp(log_cost)
    p_calls = PRIMARY_COST[spec.primary]
    if spec.estimator is EstimatorKind.STANDARD:
        return optimize_standard(C, spec.rates.alpha, calls_per_step=p_calls, step_prefactor=spec.step_prefactor)
    s_calls = SECONDARY_COST[spec.secondary]
    if spec.charge_diffusion_calls:
        s_calls += SECONDARY_DIFFUSION_COST[spec.secondary]
    x, y = _exponents(spec)
    return plan_from_exponents(C, x, y, p_calls, s_calls, spec.step_prefactor)


def run_estimator(spec, model, plan, seed):
    kind = spec.estimator
    if kind is EstimatorKind.STANDARD:
        return standard_mc(model.problem, first_component, plan.h_fine, max(plan.M_fine, 2), seed, spec.primary)
    config = EstimatorConfig(model.problem, plan, first_component, spec.primary, spec.secondary)
    if kind is EstimatorKind.CV:
        return cv_estimate(config, seed)
    if kind is EstimatorKind.CV_OPT_LAMBDA:
        return cv_estimate_opt_lambda(config, seed)
    levels = [Level(plan.h_fine, plan.M_fine, spec.primary), Level(plan.h, plan.M, spec.secondary)]
    return mlmc_estimate(model.problem, first_component, levels, seed, spec.primary, spec.secondary)


def _point_reps(spec, model, plan, point, reps):
    out = []
    for m in reps:
        est = run_estimator(spec, model, plan, rngmod.child(spec.seed, "outer", point, m))
        out.append((est.value, est.cost(spec.charge_diffusion_calls), est.lam))
    return out


def _run_point(spec, model, plan, point):
    reps = range(spec.outer_reps)
    if spec.n_jobs == 1:
        return _point_reps(spec, model, plan, point, reps)
    from joblib import Parallel, delayed

    chunks = np.array_split(np.arange(spec.outer_reps), max(1, 4 * abs(spec.n_jobs)))
    parts = Parallel(n_jobs=spec.n_jobs)(
        delayed(_point_reps)(spec, model, plan, point, [int(m) for m in c]) for c in chunks if c.size
    )
    return [r for part in parts for r in part]


def exponent_label(x, y):
    fx, fy = Fraction(x).limit_denominator(100), Fraction(y).limit_denominator(100)
    return f"x{fx.numerator}-{fx.denominator}_y{fy.numerator}-{fy.denominator}"


def run_error_curve(spec, reference=None):
    """Empirical quadratic error ``mean((I_m - I_ref)^2)`` over the budget grid."""
    model = _model(spec.model, spec.model_params)
    if reference is None:
        ref, ref_meta = reference_value(model)
    else:
        ref, ref_meta = float(reference), {"kind": "given", "value": float(reference)}
    costs, errs, points_meta = [], [], []
    for i, lc in enumerate(spec.budget_grid):
        plan = build_plan(spec, lc)
        results = _run_point(spec, model, plan, i)
        values = np.array([r[0] for r in results])
        measured = float(np.mean([r[1] for r in results]))
        ratio = measured / math.exp(lc)
        if not 0.5 <= ratio <= 2.0:
            warnings.warn(f"measured cost is {ratio:.2f} x the target at log C = {lc:.2f}", RuntimeWarning)
        err = float(np.mean((values - ref) ** 2))
        costs.append(measured)
        errs.append(err)
        points_meta.append({
            "log_cost_target": lc,
            "measured_cost": measured,
            "cost_ratio": ratio,
            "emp_err": err,
            "mean_estimate": float(values.mean()),
            "mean_lambda": float(np.mean([r[2] for r in results])),
            "plan": plan.as_dict(),
        })
    inversions = [i for i in range(2, len(errs)) if errs[i] >= errs[i - 1]]
    if len(inversions) > 1:
        warnings.warn(f"error is not decreasing at grid points {inversions}", RuntimeWarning)
    if spec.estimator is EstimatorKind.STANDARD:
        label = "standard"
    else:
        label = exponent_label(*_exponents(spec))
    meta = {
        "spec": spec.to_dict(),
        "model_params": model.params,
        "reference": ref_meta,
        "points": points_meta,
        "error_inversions": inversions,
    }
    curve = _curve(costs, errs, label, meta)
    meta["slope"] = curve.slope
    meta["slope_stderr"] = curve.slope_stderr
    return curve


def run_exponent_sweep(spec, configs):
    """One error curve per ``(x, y)`` configuration, sharing outer seeds."""
    curves = []
    for x, y in configs:
        if not 0 < x <= y < 1:
            raise ConfigError(f"invalid configuration ({x}, {y})")
        s = ExperimentSpec(**{**_spec_fields(spec), "exponent_override": (x, y)})
        curves.append(run_error_curve(s))
    return curves


def _spec_fields(spec):
    return {f: getattr(spec, f) for f in spec.__dataclass_fields__}


def steepest(curves):
    """Index of the curve with the most negative slope."""
    return int(np.argmin([c.slope for c in curves]))


def _strong_pairs(model, scheme, n_fine, n_coarse, fine):
    """Scheme terminal values at step ``1/n_coarse`` and the exact terminals."""
    q = n_fine // n_coarse
    coeffs = condition_on_increments_and_areas(fine, q)
    if isinstance(scheme, Primary):
        res = run_primary(scheme, model.problem, 1.0 / n_coarse, FineGaussians(g=coeffs.gs, f=coeffs.gsp))
    else:
        res = run_secondary(scheme, model.problem, 1.0 / n_coarse, coeffs)
    return res.terminal[..., 0]


def _exact_terminal(model, fine):
    n = fine.n_fine
    w = np.cumsum(np.sqrt(1.0 / n) * fine.g, axis=-1)
    if model.name == "sinh":
        return model.exact_terminal(w[..., -1])
    if model.name == "igbm":
        p = model.params
        path = np.concatenate([np.zeros(w.shape[:-1] + (1,)), w], axis=-1)
        return igbm_exact_terminal(p["x0"], p["a"], p["b"], p["sigma"], path)
    raise NoPathwiseOracleError(f"model {model.name!r} has no pathwise exact solution")


def _scheme_kind(scheme):
    for enum_cls in (Primary, Secondary):
        try:
            return enum_cls(scheme)
        except ValueError:
            pass
    raise ConfigError(f"unknown scheme {scheme!r}")


def run_strong_error(model, scheme, h_grid, reps, seed=0, fine_log2=14, block=64):
    """Root-mean-square pathwise error ``E(h)`` against the exact solution.

    All steps are driven by one fine Gaussian family with areas at step
    ``2^-fine_log2``; coarse increments and areas are obtained from it
    exactly, and the exact solution is evaluated on the same fine path.
    """
    if isinstance(model, str):
        model = get_model(model)
    kind = _scheme_kind(scheme)
    if model.exact_terminal is None:
        raise NoPathwiseOracleError(f"model {model.name!r} has no pathwise exact solution")
    n_fine = 2**fine_log2
    ns = []
    for h in h_grid:
        n = int(round(1.0 / h))
        if abs(n * h - 1.0) > 1e-9 or n_fine % n:
            raise ConfigError(f"step {h} does not divide the oracle grid 2^-{fine_log2}")
        ns.append(n)
    sq = {n: [] for n in ns}
    for b, start in enumerate(range(0, reps, block)):
        size = min(block, reps - start)
        fine = sample_fine(rngmod.stream(seed, "strong", b), n_fine, True, size=size)
        exact = _exact_terminal(model, fine)
        for n in ns:
            sq[n].append((_strong_pairs(model, kind, n_fine, n, fine) - exact) ** 2)
    errs = [math.sqrt(float(np.mean(np.concatenate(sq[n])))) for n in ns]
    hs = [1.0 / n for n in ns]
    meta = {"model": model.name, "model_params": model.params, "scheme": kind.value, "reps": reps,
            "seed": seed, "oracle_step": 1.0 / n_fine}
    curve = _curve(hs, errs, f"strong_{model.name}_{kind.value}", meta)
    meta["slope"] = curve.slope
    meta["log_eps"] = curve.intercept
    return curve


def run_igbm_regime_study(eps, logc_grid, rates=None, empirical_grid=(), outer_reps=100, seed=0,
                          model_params=None):
    """Closed-form exponents and rates ``-log E / log C`` for the IGBM setting.

    Empirical rates are only computed for the budgets in ``empirical_grid``,
    with plans built from the ε-aware exponents.
    """
    rates = rates or RatePair(alpha=1.0, beta=0.5, gamma=1.0, epsilon=eps)
    if rates.epsilon != eps:
        rates = RatePair(rates.alpha, rates.beta, rates.gamma, eps)
    rows = []
    for lc in logc_grid:
        x, y, small = eps_exponents(lc, rates)
        y_used = min(max(y, x), 1.0)
        theo = -float(log_theoretical_error(x, y_used, lc, rates)) / lc
        rows.append({"log_cost": float(lc), "x": x, "y": y, "small_budget": small,
                     "theoretical_rate": theo, "empirical_rate": float("nan")})
    if empirical_grid:
        model = get_model("igbm", **(model_params or {}))
        ref, _ = reference_value(model)
        for j, lc in enumerate(empirical_grid):
            x, y, _ = eps_exponents(lc, rates)
            plan = plan_from_exponents(math.exp(lc), x, min(max(y, x), 1.0))
            spec = ExperimentSpec(model="igbm", estimator="cv", rates=rates, budget_grid=(lc, lc + 1),
                                  outer_reps=outer_reps, seed=seed, model_params=model_params or {},
                                  secondary=Secondary.PARABOLA_EXACT_IGBM)
            values = np.array([r[0] for r in _run_point(spec, model, plan, j)])
            err = float(np.mean((values - ref) ** 2))
            rows.append({"log_cost": float(lc), "x": x, "y": y, "small_budget": x <= 0,
                         "theoretical_rate": float("nan"), "empirical_rate": -math.log(err) / lc})
    return rows


# output files

FORMATS = ("txt2col", "csv", "json")


def short_name(curve):
    """Legacy numeric file stem such as ``1737`` for ``x = 1/7, y = 3/7``."""
    lab = curve.label
    if not lab.startswith("x"):
        return lab
    xs, ys = lab[1:].split("_y")
    xn, xd = xs.split("-")
    yn, yd = ys.split("-")
    return f"{xn}{xd}{yn}{yd}"


def _json_default(o):
    if isinstance(o, enum.Enum):
        return o.value
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def write_metadata(path, meta):
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def write_table(path, columns, rows, fmt="txt2col"):
    """Write rows of numbers; ``txt2col`` is whitespace separated without a header."""
    path = Path(path)
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}")
    if fmt == "json":
        path.write_text(json.dumps([dict(zip(columns, r)) for r in rows], indent=2, default=_json_default) + "\n")
    elif fmt == "csv":
        lines = [",".join(columns)] + [",".join(repr(float(v)) for v in r) for r in rows]
        path.write_text("\n".join(lines) + "\n")
    else:
        path.write_text("".join(" ".join(repr(float(v)) for v in r) + "\n" for r in rows))
    return path


SUFFIX = {"txt2col": ".txt", "csv": ".csv", "json": ".json"}


def write_curve(curve, out_dir, fmt="txt2col", short_names=False, prefix="curve_"):
    """Write ``(cost, error)`` data and a ``.meta.json`` sidecar; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = short_name(curve) if short_names else prefix + curve.label
    data = write_table(out_dir / (stem + SUFFIX[fmt]), ("cost", "error"), curve.points, fmt)
    meta = dict(curve.metadata, slope=curve.slope, slope_stderr=curve.slope_stderr,
                intercept=curve.intercept, label=curve.label, data_file=data.name)
    side = write_metadata(out_dir / (stem + ".meta.json"), meta)
    return data, side
