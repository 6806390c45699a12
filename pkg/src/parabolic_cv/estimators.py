"""Standard, control-variate and multilevel Monte Carlo estimators.

Random streams
    Replications are processed in blocks of :data:`BLOCK` paths.  Block ``b``
    of the cheap sum draws from ``stream(seed, "cheap", b)``, block ``b`` of
    the coupled sum of level ``l`` from ``stream(seed, "coupled", l, b)`` and
    block ``b`` of standard MC from ``stream(seed, "standard", b)``.  The
    control-variate estimator uses coupled level 0, which makes it coincide
    with the two-level multilevel estimator.

Means and variances are taken over the full concatenated sample with numpy's
pairwise summation, so results depend only on the seed and the plan.
"""

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rng as rngmod
from .budget import BudgetPlan
from .errors import (
    ConfigError,
    LevelRatioError,
    MissingAreasError,
    NonFiniteStateError,
    ZeroVarianceError,
)
from .gaussians import (
    FineGaussians,
    condition_on_increments,
    condition_on_increments_and_areas,
    parabola_unconditioned,
    sample_coupled_block,
    sample_fine,
)
from .schemes import Primary, Secondary, run_primary, run_secondary

BLOCK = 2048


class Conditioning(enum.Enum):
    INCREMENTS = "increments"
    INCREMENTS_AND_AREAS = "increments-and-areas"


def first_component(x):
    return x[..., 0]


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything a control-variate run needs apart from the seed.

    ``conditioning`` defaults to areas conditioning for SRA1 (whose fine
    family carries areas) and increments conditioning for Euler.
    """

    problem: object
    plan: BudgetPlan
    qoi: Callable = first_component
    primary: Primary = Primary.EULER
    secondary: Secondary = Secondary.PARABOLA_RK
    conditioning: Optional[Conditioning] = None

    def __post_init__(self):
        object.__setattr__(self, "primary", Primary(self.primary))
        object.__setattr__(self, "secondary", Secondary(self.secondary))
        if self.conditioning is None:
            auto = Conditioning.INCREMENTS_AND_AREAS if self.primary is Primary.SRA1 else Conditioning.INCREMENTS
            object.__setattr__(self, "conditioning", auto)
        else:
            object.__setattr__(self, "conditioning", Conditioning(self.conditioning))
        p = self.plan
        if p.N_fine != p.q * p.N:
            raise ConfigError("plan must satisfy N' = q N")

    @property
    def with_areas(self):
        return self.primary is Primary.SRA1 or self.conditioning is Conditioning.INCREMENTS_AND_AREAS


@dataclass(frozen=True)
class Estimate:
    value: float
    cv_mean_term: float
    diff_term: float
    sample_var_cheap: float
    sample_var_diff: float
    total_drift_calls: int
    total_diffusion_calls: int = 0
    lam: float = 1.0
    n_cheap: int = 0
    n_coupled: int = 0
    extra: dict = field(default_factory=dict)
    mean_variance: Optional[float] = None

    @property
    def stderr(self):
        if self.mean_variance is not None:
            return float(np.sqrt(self.mean_variance))
        v = 0.0
        if self.n_cheap:
            v += self.sample_var_cheap / self.n_cheap
        if self.n_coupled:
            v += self.sample_var_diff / self.n_coupled
        return float(np.sqrt(v))

    def cost(self, charge_diffusion=False):
        return self.total_drift_calls + (self.total_diffusion_calls if charge_diffusion else 0)


def _blocks(n):
    for b, start in enumerate(range(0, n, BLOCK)):
        yield b, min(BLOCK, n - start)


def _guard(fn, key, *args):
    try:
        return fn(*args)
    except NonFiniteStateError as exc:
        raise NonFiniteStateError("scheme produced a non-finite state", key=key) from exc


def _var(v):
    return float(np.var(v, ddof=1)) if v.size > 1 else 0.0


def _qoi(qoi, terminal):
    out = np.asarray(qoi(terminal), dtype=float)
    if out.shape != terminal.shape[:-1]:
        raise ConfigError(f"QoI must map (n, d) states to (n,), got shape {out.shape}")
    return out


def standard_mc(problem, qoi, h_fine, M_fine, seed, primary=Primary.EULER):
    """Plain average of ``F(X_1^{h'})`` over ``M_fine`` independent paths."""
    primary = Primary(primary)
    n_fine = int(round(1.0 / h_fine))
    if M_fine < 2:
        raise ConfigError("standard MC needs M' >= 2")
    values, drift, diff = [], 0, 0
    for b, n in _blocks(M_fine):
        key = rngmod.child(seed, "standard", b)
        fine = sample_fine(rngmod.stream(key), n_fine, primary is Primary.SRA1, size=n)
        res = _guard(run_primary, key, primary, problem, 1.0 / n_fine, fine)
        values.append(_qoi(qoi, res.terminal))
        drift += res.drift_calls * n
        diff += res.diffusion_calls * n
    v = np.concatenate(values)
    mean = float(np.mean(v))
    return Estimate(
        value=mean, cv_mean_term=mean, diff_term=0.0, sample_var_cheap=_var(v), sample_var_diff=0.0,
        total_drift_calls=drift, total_diffusion_calls=diff, n_cheap=M_fine,
    )


def _cheap_values(problem, qoi, secondary, n_coarse, M, seed):
    values, drift, diff = [], 0, 0
    h = 1.0 / n_coarse
    for b, n in _blocks(M):
        key = rngmod.child(seed, "cheap", b)
        coeffs = parabola_unconditioned(rngmod.stream(key), n_coarse, size=n)
        res = _guard(run_secondary, key, secondary, problem, h, coeffs)
        values.append(_qoi(qoi, res.terminal))
        drift += res.drift_calls * n
        diff += res.diffusion_calls * n
    return np.concatenate(values), drift, diff


def _coupled_values(problem, qoi, fine_kind, coarse_kind, n_fine, q, M, seed, level, with_areas, areas_mode):
    """Pairs ``(F(fine), F(coarse))`` for one level.

    ``fine_kind`` is a primary scheme for level 0 and a secondary scheme
    driven by unconditioned coefficients on higher levels.
    """
    fine_vals, coarse_vals, drift, diff = [], [], 0, 0
    h_fine, h = 1.0 / n_fine, q / n_fine
    for b, n in _blocks(M):
        key = rngmod.child(seed, "coupled", level, b)
        rs = rngmod.stream(key)
        if level == 0:
            if with_areas:
                fine = sample_fine(rs, n_fine, True, size=n)
                coeffs = (condition_on_increments_and_areas(fine, q) if areas_mode
                          else condition_on_increments(fine, q, rs))
            else:
                fine, coeffs = sample_coupled_block(rs, n, n_fine, q, False)
            rf = _guard(run_primary, key, fine_kind, problem, h_fine, fine)
        else:
            fc = parabola_unconditioned(rs, n_fine, size=n)
            fine = FineGaussians(g=fc.gs, f=fc.gsp)
            coeffs = condition_on_increments_and_areas(fine, q)
            rf = _guard(run_secondary, key, fine_kind, problem, h_fine, fc)
        rc = _guard(run_secondary, key, coarse_kind, problem, h, coeffs)
        fine_vals.append(_qoi(qoi, rf.terminal))
        coarse_vals.append(_qoi(qoi, rc.terminal))
        drift += (rf.drift_calls + rc.drift_calls) * n
        diff += (rf.diffusion_calls + rc.diffusion_calls) * n
    return np.concatenate(fine_vals), np.concatenate(coarse_vals), drift, diff


def _cv_samples(config, seed):
    p = config.plan
    if p.M < 2 or p.M_fine < 2:
        raise ConfigError("control variate needs M >= 2 and M' >= 2")
    cheap, d1, s1 = _cheap_values(config.problem, config.qoi, config.secondary, p.N, p.M, seed)
    fv, cv, d2, s2 = _coupled_values(
        config.problem, config.qoi, config.primary, config.secondary, p.N_fine, p.q, p.M_fine, seed, 0,
        config.with_areas, config.conditioning is Conditioning.INCREMENTS_AND_AREAS,
    )
    return cheap, fv, cv, d1 + d2, s1 + s2


def _combine(cheap, fv, cv, lam, drift, diff):
    d = fv - lam * cv
    m_cheap = float(np.mean(cheap))
    m_diff = float(np.mean(d))
    return Estimate(
        value=lam * m_cheap + m_diff, cv_mean_term=m_cheap, diff_term=m_diff,
        sample_var_cheap=_var(cheap), sample_var_diff=_var(d),
        total_drift_calls=drift, total_diffusion_calls=diff, lam=lam,
        n_cheap=cheap.size, n_coupled=d.size,
    )


def cv_estimate(config, seed):
    """Control-variate estimate: cheap coarse mean plus coupled fine-coarse correction."""
    cheap, fv, cv, drift, diff = _cv_samples(config, seed)
    return _combine(cheap, fv, cv, 1.0, drift, diff)


def optimal_lambda(fv, cv):
    var = _var(cv)
    if not var > 0:
        raise ZeroVarianceError("coarse values of the coupled pairs have zero sample variance")
    cov = float(np.sum((fv - fv.mean()) * (cv - cv.mean())) / (fv.size - 1))
    return cov / var


def cv_estimate_opt_lambda(config, seed):
    """Control variate with the regression coefficient estimated from the coupled pairs."""
    if config.plan.M_fine < 3:
        raise ConfigError("optimal lambda needs M' >= 3")
    cheap, fv, cv, drift, diff = _cv_samples(config, seed)
    return _combine(cheap, fv, cv, optimal_lambda(fv, cv), drift, diff)


@dataclass(frozen=True)
class Level:
    h: float
    M: int
    scheme: Optional[object] = None


def _as_levels(levels, primary, secondary):
    out = []
    for i, lv in enumerate(levels):
        lv = lv if isinstance(lv, Level) else Level(*lv)
        kind = lv.scheme
        if kind is None:
            kind = primary if i == 0 else secondary
        kind = Primary(kind) if i == 0 else Secondary(kind)
        out.append(Level(float(lv.h), int(lv.M), kind))
    if len(out) < 2:
        raise ConfigError("multilevel estimator needs at least two levels")
    ns = []
    for lv in out:
        n = int(round(1.0 / lv.h))
        if abs(n * lv.h - 1.0) > 1e-9:
            raise LevelRatioError(f"step {lv.h} is not 1/N")
        if lv.M < 2:
            raise ConfigError("each level needs M >= 2")
        ns.append(n)
    for a, b in zip(ns, ns[1:]):
        if not (b < a and a % b == 0):
            raise LevelRatioError(f"steps must increase by integer factors, got N={a} then N={b}")
    return out, ns


def mlmc_estimate(problem, qoi, levels, seed, primary=Primary.EULER, secondary=Secondary.PARABOLA_RK,
                  conditioning=None):
    """Multilevel estimator over levels ``(h_l, M_l)`` ordered from fine to coarse.

    The top level is a plain average of the coarsest scheme with free
    parabola coefficients.  Level ``l < L`` averages ``F(X^{h_l}) - F(X^{h_{l+1}})``
    with the coarser side conditioned on the Gaussians of level ``l``; above the
    first level those Gaussians are parabola coefficients, which carry areas.
    """
    lv, ns = _as_levels(levels, primary, secondary)
    first = lv[0].scheme
    if conditioning is None:
        conditioning = Conditioning.INCREMENTS_AND_AREAS if first is Primary.SRA1 else Conditioning.INCREMENTS
    conditioning = Conditioning(conditioning)
    areas_mode = conditioning is Conditioning.INCREMENTS_AND_AREAS
    with_areas = first is Primary.SRA1 or areas_mode

    top = lv[-1]
    cheap, drift, diff = _cheap_values(problem, qoi, top.scheme, ns[-1], top.M, seed)
    value = float(np.mean(cheap))
    corrections, variances = [], []
    for i in range(len(lv) - 1):
        q = ns[i] // ns[i + 1]
        fv, cv, d, s = _coupled_values(problem, qoi, lv[i].scheme, lv[i + 1].scheme, ns[i], q, lv[i].M,
                                       seed, i, with_areas, areas_mode)
        dv = fv - cv
        corrections.append(float(np.mean(dv)))
        variances.append(_var(dv))
        drift += d
        diff += s
    # for two levels this is the same floating-point sum as cv_estimate
    total = value
    for c in corrections:
        total = total + c
    return Estimate(
        value=total, cv_mean_term=value, diff_term=float(sum(corrections)),
        sample_var_cheap=_var(cheap), sample_var_diff=variances[0],
        total_drift_calls=drift, total_diffusion_calls=diff,
        n_cheap=top.M, n_coupled=lv[0].M,
        mean_variance=_var(cheap) / top.M + sum(v / l.M for v, l in zip(variances, lv)),
        extra={"level_means": corrections, "level_variances": variances, "level_sizes": [l.M for l in lv]},
    )
