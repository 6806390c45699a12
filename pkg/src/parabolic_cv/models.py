"""Benchmark SDEs with their exact solutions or reference values."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .schemes import IgbmParams, SdeProblem


@dataclass(frozen=True)
class PdeSpec:
    """Backward Kolmogorov problem ``u_t + a(x) u_x + 0.5 s(x)^2 u_xx = 0``, ``u(x, 1) = phi(x)``."""

    drift_coeff: Callable
    diff_coeff: Callable
    terminal: Callable
    domain: tuple
    nx: int = 8192
    nt: int = 1024

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ConfigError(f"empty domain {self.domain}")
        if self.nx < 16 or self.nt < 16:
            raise ConfigError("nx and nt must be at least 16")


@dataclass(frozen=True)
class ClosedForm:
    value: float


@dataclass(frozen=True)
class PdeReference:
    spec: PdeSpec


@dataclass(frozen=True)
class BenchmarkModel:
    """An SDE plus what is known about ``E X_1``.

    ``exact_terminal`` maps path data to the exact ``X_1``; its arguments
    depend on the model (``W_1`` for sinh, ``(W_1, integral)`` for IGBM).
    """

    name: str
    problem: SdeProblem
    reference: Optional[object] = None
    exact_terminal: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    @property
    def x0(self):
        return float(self.problem.initial[0])


def sinh_model(x0=1.0):
    """``dX = X/2 dt + sqrt(1 + X^2) dW``, solved by ``sinh(asinh(x0) + W_t)``."""
    x0 = float(x0)
    if not np.isfinite(x0):
        raise ConfigError("x0 must be finite")
    c = np.sqrt(1.0 + x0 * x0)
    problem = SdeProblem(
        drift=lambda x: 0.5 * x,
        diffusion=lambda x: np.sqrt(1.0 + x * x),
        initial=[x0],
        diffusion_grad=lambda x: x,
        stratonovich_drift=np.zeros_like,
    )
    return BenchmarkModel(
        name="sinh",
        problem=problem,
        reference=ClosedForm(x0 * np.exp(0.5)),
        exact_terminal=lambda w: x0 * np.cosh(w) + c * np.sinh(w),
        params={"x0": x0},
    )


def _pde_domain(x0):
    return (x0 - 8.0, x0 + 8.0)


def mean_revert_model(x0=1.0):
    """``dX = -X dt + sqrt(1 + X^2) dW``; reference from the backward PDE."""
    x0 = float(x0)
    if not np.isfinite(x0):
        raise ConfigError("x0 must be finite")
    problem = SdeProblem(
        drift=lambda x: -x,
        diffusion=lambda x: np.sqrt(1.0 + x * x),
        initial=[x0],
        diffusion_grad=lambda x: x,
        stratonovich_drift=lambda x: -1.5 * x,
    )
    spec = PdeSpec(
        drift_coeff=lambda x: -x,
        diff_coeff=lambda x: np.sqrt(1.0 + x * x),
        terminal=lambda x: x,
        domain=_pde_domain(x0),
    )
    return BenchmarkModel("meanrev", problem, reference=PdeReference(spec), params={"x0": x0})


def _double_well_drift(x):
    return -x * (x + 1.0) * (x - 2.0)


def double_well_model(x0=1.0, sigma=1.0):
    """``dX = -U'(X) dt + sigma dW`` with ``U'(x) = x (x + 1) (x - 2)``."""
    x0, sigma = float(x0), float(sigma)
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    problem = SdeProblem(
        drift=_double_well_drift,
        diffusion=lambda x: np.full_like(x, sigma),
        initial=[x0],
        diffusion_grad=np.zeros_like,
        additive=True,
    )
    spec = PdeSpec(
        drift_coeff=_double_well_drift,
        diff_coeff=lambda x: np.full_like(x, sigma),
        terminal=lambda x: x,
        domain=_pde_domain(x0),
    )
    return BenchmarkModel(
        "doublewell", problem, reference=PdeReference(spec), params={"x0": x0, "sigma": sigma}
    )


def igbm_mean(x0, a, b):
    return np.exp(-a) * x0 + b * (1.0 - np.exp(-a))


def igbm_model(x0=1.0, a=1.0, b=1.0, sigma=1.0):
    """Inhomogeneous GBM ``dX = a (b - X) dt + sigma X dW``.

    ``exact_terminal(w1, integral)`` takes ``W_1`` and
    ``int_0^1 exp(a~ u - sigma W_u) du``.
    """
    x0, a, b, sigma = float(x0), float(a), float(b), float(sigma)
    if not a > 0:
        raise ConfigError("a must be positive")
    if sigma < 0:
        raise ConfigError("sigma must be non-negative")
    params = IgbmParams(a, b, sigma)
    at = params.a_tilde
    problem = SdeProblem(
        drift=lambda x: a * (b - x),
        diffusion=lambda x: sigma * x,
        initial=[x0],
        diffusion_grad=lambda x: sigma * sigma * x,
        stratonovich_drift=lambda x: a * b - at * x,
        igbm=params,
    )

    def exact(w1, integral):
        return np.exp(-at + sigma * w1) * (x0 + a * b * integral)

    return BenchmarkModel(
        "igbm",
        problem,
        reference=ClosedForm(igbm_mean(x0, a, b)),
        exact_terminal=exact,
        params={"x0": x0, "a": a, "b": b, "sigma": sigma},
    )


MODELS = {
    "sinh": sinh_model,
    "meanrev": mean_revert_model,
    "doublewell": double_well_model,
    "igbm": igbm_model,
}


def get_model(name, **params):
    try:
        factory = MODELS[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for model {name!r}: {exc}") from None
