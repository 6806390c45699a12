"""Budget-optimal parameters for the standard and control-variate estimators.

Exponents follow the convention ``h = C^-x``, ``h' = C^-y``, ``M ~ C^(1-x)``,
``M' ~ C^(1-y)`` where ``C`` is the budget in drift evaluations.  All
multiplicative prefactors default to one.
"""

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AdmissibilityError, ConfigError, InvalidEpsError, InvalidRatesError


@dataclass(frozen=True)
class RatePair:
    """Convergence orders: weak ``alpha`` and strong ``beta`` of the fine
    scheme, strong ``gamma`` and strong-error constant ``epsilon`` of the
    coarse one."""

    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 1.0
    epsilon: float = 1.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) <= 0:
            raise InvalidRatesError(f"orders must be positive, got {self}")
        if not 0 < self.epsilon <= 1:
            raise InvalidEpsError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    def check_admissible(self):
        bound = self.gamma / (2 * self.gamma + 1)
        if self.alpha <= bound or self.beta <= bound:
            raise AdmissibilityError(
                f"need alpha, beta > gamma/(2 gamma + 1) = {bound:.4f}, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def denominator(self):
        return 4 * self.alpha * self.gamma + 2 * self.alpha + 1

    @property
    def cv_exponents(self):
        d = self.denominator
        return 1.0 / d, (2 * self.gamma + 1) / d

    @property
    def cv_error_exponent(self):
        return (4 * self.alpha * self.gamma + 2 * self.alpha) / self.denominator

    @property
    def standard_error_exponent(self):
        return 2 * self.alpha / (2 * self.alpha + 1)


@dataclass(frozen=True)
class StandardPlan:
    cost_target: float
    h_fine: float
    M_fine: int
    N_fine: int
    calls_per_step: int

    @property
    def realized_cost(self):
        return self.M_fine * self.N_fine * self.calls_per_step

    def as_dict(self):
        return asdict(self) | {"realized_cost": self.realized_cost}


@dataclass(frozen=True)
class BudgetPlan:
    """Integer realisation of a control-variate budget split.

    ``primary_calls`` and ``secondary_calls`` are the charged costs per fine
    and coarse step; the cost of a plan counts the cheap coarse runs, the
    coupled fine runs and the coupled coarse runs.
    """

    cost_target: float
    h: float
    h_fine: float
    M: int
    M_fine: int
    q: int
    N: int
    N_fine: int
    x: float = float("nan")
    y: float = float("nan")
    primary_calls: float = 1.0
    secondary_calls: float = 1.0

    def __post_init__(self):
        if self.N < 1 or self.q < 1 or self.M < 1 or self.M_fine < 1:
            raise ConfigError(f"invalid plan {self}")
        if self.N_fine != self.q * self.N:
            raise ConfigError("N_fine must equal q * N")

    @classmethod
    def from_counts(cls, N, q, M, M_fine, primary_calls=1.0, secondary_calls=1.0, cost_target=None, x=float("nan"), y=float("nan")):
        plan = cls(
            cost_target=0.0, h=1.0 / N, h_fine=1.0 / (q * N), M=int(M), M_fine=int(M_fine),
            q=int(q), N=int(N), N_fine=int(q * N), x=x, y=y,
            primary_calls=primary_calls, secondary_calls=secondary_calls,
        )
        target = plan.realized_cost if cost_target is None else float(cost_target)
        return cls(**(asdict(plan) | {"cost_target": target}))

    @property
    def realized_cost(self):
        return (
            self.M * self.N * self.secondary_calls
            + self.M_fine * (self.N_fine * self.primary_calls + self.N * self.secondary_calls)
        )

    def as_dict(self):
        return asdict(self) | {"realized_cost": self.realized_cost}


def _check_cost(C):
    if not C > 1:
        raise ConfigError(f"budget must exceed 1, got {C}")


def _count(value, name):
    n = int(round(value))
    if n < 1:
        warnings.warn(f"{name} rounds to {n}; clamped to 1", RuntimeWarning, stacklevel=3)
        n = 1
    return n


def optimize_standard(C, alpha, calls_per_step=1, step_prefactor=1.0):
    """Standard MC: ``h' ~ C^(-1/(2 alpha + 1))`` and the rest of the budget on samples."""
    _check_cost(C)
    if alpha <= 0:
        raise InvalidRatesError(f"alpha must be positive, got {alpha}")
    n_fine = max(1, int(round(step_prefactor * C ** (1.0 / (2 * alpha + 1)))))
    m_fine = _count(C / (n_fine * calls_per_step), "M'")
    return StandardPlan(float(C), 1.0 / n_fine, m_fine, n_fine, calls_per_step)


def plan_from_exponents(C, x, y, primary_calls=1.0, secondary_calls=1.0, step_prefactor=1.0, min_samples=2):
    """Round ``(x, y)`` to an integer plan whose cost is close to ``C``.

    ``N = round(c C^x)``, ``q = round(C^(y-x))`` and ``N' = q N``; sample
    sizes keep the ideal ratio ``M / M' = C^(y-x)`` and are scaled so that
    the plan spends the whole budget.
    """
    _check_cost(C)
    if not 0 <= x <= y <= 1:
        raise ConfigError(f"need 0 <= x <= y <= 1, got x={x}, y={y}")
    n = max(1, int(round(step_prefactor * C**x)))
    q = max(1, int(round(C ** (y - x))))
    n_fine = q * n
    m_ideal, mf_ideal = C ** (1 - x), C ** (1 - y)
    per_unit = m_ideal * n * secondary_calls + mf_ideal * (n_fine * primary_calls + n * secondary_calls)
    s = C / per_unit
    m = max(min_samples, int(round(s * m_ideal)))
    m_fine = max(min_samples, int(round(s * mf_ideal)))
    return BudgetPlan(
        cost_target=float(C), h=1.0 / n, h_fine=1.0 / n_fine, M=m, M_fine=m_fine,
        q=q, N=n, N_fine=n_fine, x=float(x), y=float(y),
        primary_calls=primary_calls, secondary_calls=secondary_calls,
    )


def optimize_cv(C, rates, primary_calls=1.0, secondary_calls=1.0, step_prefactor=1.0):
    """Asymptotically optimal control-variate plan for budget ``C``."""
    rates.check_admissible()
    x, y = rates.cv_exponents
    return plan_from_exponents(C, x, y, primary_calls, secondary_calls, step_prefactor)


def eps_exponents(log_cost, rates):
    """Closed-form minimiser of :func:`theoretical_error` for ``beta = 1/2``.

    Returns ``(x, y, small_budget)``.  When the closed-form ``x`` is not
    positive the budget is too small for a useful coarse grid and the
    small-budget branch ``h = 1`` is returned instead.
    """
    if rates.beta != 0.5:
        raise ConfigError("closed form needs beta = 1/2; use grid_minimize otherwise")
    a, g, L = rates.alpha, rates.gamma, float(log_cost)
    le = math.log(rates.epsilon)
    d = rates.denominator
    x = (1 + ((2 * a + 1) * math.log(2 * g) + math.log(2 * a) + 4 * a * le) / L) / d
    y = (1 + 2 * g + (2 * g * math.log(4 * g * a) + math.log(2 * a) - 2 * le) / L) / d
    if x > 0:
        return x, y, False
    y = (1.0 - 2.0 * le / L) / (2 * a + 1)
    return 0.0, min(y, 1.0), True


def optimize_cv_eps(C, rates, primary_calls=1.0, secondary_calls=1.0, step_prefactor=1.0):
    """ε-aware exponents and the plan built from them: ``(x, y, plan)``."""
    _check_cost(C)
    rates.check_admissible()
    x, y, _ = eps_exponents(math.log(C), rates)
    plan = plan_from_exponents(C, x, min(max(y, x), 1.0), primary_calls, secondary_calls, step_prefactor)
    return x, y, plan


def log_theoretical_error(x, y, log_cost, rates):
    """Natural log of :func:`theoretical_error`, safe for very large budgets."""
    L = float(log_cost)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    le2 = 2.0 * math.log(rates.epsilon)
    terms = np.stack(np.broadcast_arrays(
        -2 * rates.alpha * y * L,
        (x - 1) * L,
        (y - 1) * L + le2 - 2 * rates.gamma * x * L,
        (y - 1) * L - 2 * rates.beta * y * L,
    ))
    return np.logaddexp.reduce(terms, axis=0)


def theoretical_error(x, y, C, rates):
    """``C^(-2 alpha y) + C^(x-1) + C^(y-1) (eps^2 C^(-2 gamma x) + C^(-2 beta y))``."""
    return np.exp(log_theoretical_error(x, y, math.log(C), rates))


def grid_minimize(log_cost, rates, step=1e-3):
    """Minimise the theoretical error over ``0 <= x <= y <= 1`` on a square grid."""
    grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    e = log_theoretical_error(xx, yy, log_cost, rates)
    e[xx > yy] = np.inf
    i, j = np.unravel_index(np.argmin(e), e.shape)
    return float(grid[i]), float(grid[j])
