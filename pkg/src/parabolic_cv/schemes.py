"""Time discretisations of ``dX = b(X) dt + sigma(X) dW`` on ``[0, 1]``.

The driving Brownian motion is scalar; ``drift`` and ``diffusion`` map a
state of shape ``(..., dim)`` to an array of the same shape.  All schemes are
vectorised over leading batch dimensions of their Gaussian inputs, so one call
advances a whole block of independent replications.

Fine (primary) schemes consume a :class:`~parabolic_cv.gaussians.FineGaussians`
family; coarse (secondary) schemes consume
:class:`~parabolic_cv.gaussians.ParabolaCoeffs`.

Call counts in :class:`SchemeResult` are per path: one vectorised invocation
of ``drift`` evaluates the drift once for every path in the batch.
"""

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    MissingAreasError,
    NonFiniteStateError,
    NotAdditiveError,
)

SQRT3 = np.sqrt(3.0)
SQRT12 = np.sqrt(12.0)

# 3-point Gauss-Legendre rule on [0, 1]
_GL_NODES = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
_GL_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


class IgbmParams(NamedTuple):
    """Parameters of ``dX = a (b - X) dt + sigma X dW``."""

    a: float
    b: float
    sigma: float

    @property
    def a_tilde(self):
        return self.a + 0.5 * self.sigma**2


@dataclass(frozen=True)
class SdeProblem:
    """An SDE with its coefficient callbacks.

    ``diffusion_grad`` is ``(sigma . grad) sigma`` (Milstein correction and
    Ito-to-Stratonovich conversion).  ``stratonovich_drift`` is
    ``b - 0.5 * (sigma . grad) sigma``; when absent it is derived from
    ``diffusion_grad``, or equals ``drift`` for additive noise.
    """

    drift: Callable
    diffusion: Callable
    initial: np.ndarray
    diffusion_grad: Optional[Callable] = None
    stratonovich_drift: Optional[Callable] = None
    additive: bool = False
    igbm: Optional[IgbmParams] = None

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.initial, dtype=float))
        if x0.ndim != 1:
            raise ConfigError("initial state must be a vector")
        object.__setattr__(self, "initial", x0)

    @property
    def dim(self):
        return self.initial.shape[0]

    def ode_drift(self):
        """Drift of the Stratonovich form, used by the parabola-driven ODE."""
        if self.stratonovich_drift is not None:
            return self.stratonovich_drift
        if self.additive:
            return self.drift
        if self.diffusion_grad is not None:
            b, grad = self.drift, self.diffusion_grad
            return lambda x: b(x) - 0.5 * grad(x)
        raise ConfigError(
            "parabola scheme needs stratonovich_drift or diffusion_grad for multiplicative noise"
        )

    def start(self, batch_shape):
        return np.broadcast_to(self.initial, tuple(batch_shape) + (self.dim,)).copy()


@dataclass(frozen=True)
class SchemeResult:
    terminal: np.ndarray
    drift_calls: int
    diffusion_calls: int


class Primary(enum.Enum):
    EULER = "euler"
    SRA1 = "sra1"


class Secondary(enum.Enum):
    PARABOLA_RK = "parabola-rk"
    PARABOLA_EXACT_IGBM = "parabola-igbm"
    MILSTEIN = "milstein"


def _check_step(h, n):
    if abs(h * n - 1.0) > 1e-9:
        raise ConfigError(f"step {h} is not 1/{n}")


def _finite(x):
    if not np.isfinite(x).all():
        raise NonFiniteStateError("scheme produced a non-finite state")
    return x


def euler_maruyama(problem, h_fine, fine):
    """Euler-Maruyama on the fine grid driven by ``fine.g``."""
    n = fine.n_fine
    _check_step(h_fine, n)
    dw = np.sqrt(h_fine) * fine.g
    x = problem.start(fine.batch_shape)
    b, sig = problem.drift, problem.diffusion
    for i in range(n):
        x = x + b(x) * h_fine + sig(x) * dw[..., i, None]
    return SchemeResult(_finite(x), drift_calls=n, diffusion_calls=n)


def sra1(problem, h_fine, fine):
    """Two-stage additive-noise Runge-Kutta scheme of weak order two."""
    if not problem.additive:
        raise NotAdditiveError("SRA1 needs a problem declared with additive noise")
    if not fine.has_areas:
        raise MissingAreasError("SRA1 needs fine areas f")
    n = fine.n_fine
    _check_step(h_fine, n)
    x = problem.start(fine.batch_shape)
    sig = problem.diffusion(x)
    sqrt_h = np.sqrt(h_fine)
    dw = sqrt_h * fine.g
    dz = sqrt_h * (fine.g + fine.f / SQRT3)
    b = problem.drift
    for i in range(n):
        b0 = b(x)
        theta = b0 * h_fine + sig * dz[..., i, None]
        x = x + (b0 / 3.0 + 2.0 / 3.0 * b(x + 0.75 * theta)) * h_fine + sig * dw[..., i, None]
    return SchemeResult(_finite(x), drift_calls=2 * n, diffusion_calls=1)


def milstein(problem, h, coeffs):
    """Scalar Milstein scheme driven by the coarse increments ``coeffs.gs``.

    Without ``problem.diffusion_grad`` the correction uses the derivative-free
    difference ``sigma(x + h (g^2 - 1) sigma(x)) - sigma(x)``.
    """
    if problem.dim != 1:
        raise DimensionError("Milstein is implemented for scalar SDEs only")
    n = coeffs.n_coarse
    _check_step(h, n)
    g = coeffs.gs
    dw = np.sqrt(h) * g
    chi = h * (g * g - 1.0)
    x = problem.start(g.shape[:-1])
    b, sig, grad = problem.drift, problem.diffusion, problem.diffusion_grad
    for i in range(n):
        s = sig(x)
        c = chi[..., i, None]
        if grad is not None:
            corr = 0.5 * grad(x) * c
        else:
            corr = 0.5 * (sig(x + c * s) - s)
        x = x + b(x) * h + corr + s * dw[..., i, None]
    return SchemeResult(_finite(x), drift_calls=n, diffusion_calls=n if grad is not None else 2 * n)


def _rk_step(z0, h, sqrt_h, a, b_, ode_drift, sig):
    # a, b_: batch arrays; polynomial P(u) = a + b_ u on [0, 1]
    i1 = (a + 0.5 * b_)[..., None]
    i4 = (0.5 * a + b_ / 3.0)[..., None]
    i2 = 0.5 * i1 * i1
    i3 = i1 - i4
    s0 = sig(z0)
    b1 = ode_drift(z0 + sqrt_h * s0 * i3)
    y1 = z0 + sqrt_h * s0 * i1
    s1 = sig(y1)
    s2 = sig(z0 + h * s0 * i2 + h * sqrt_h * b1 * i4)
    s3 = sig(y1 + sqrt_h * s1 * i1)
    return z0 + h * b1 + s2 - s0 * (1.0 - sqrt_h * i1) + sqrt_h / 6.0 * (s3 - 2.0 * s1 + s0) * i1


def parabola_rk_step(z0, h, a, b, problem):
    """One step of the parabola-driven ODE ``z' = h b~(z) + sqrt(h) sigma(z) (a + b u)``.

    Local error ``O(h^2)``; one drift and four diffusion evaluations.
    ``a``, ``b`` may be arrays matching the batch shape of ``z0``.
    """
    z0 = np.asarray(z0, dtype=float)
    out = _rk_step(
        z0, h, np.sqrt(h), np.asarray(a, dtype=float), np.asarray(b, dtype=float),
        problem.ode_drift(), problem.diffusion,
    )
    return _finite(out)


def parabola_scheme(problem, h, coeffs):
    """Chain :func:`parabola_rk_step` over the coarse intervals."""
    n = coeffs.n_coarse
    _check_step(h, n)
    a = coeffs.gs + SQRT3 * coeffs.gsp
    b = -SQRT12 * coeffs.gsp
    sqrt_h = np.sqrt(h)
    ode_drift, sig = problem.ode_drift(), problem.diffusion
    z = problem.start(coeffs.gs.shape[:-1])
    for i in range(n):
        z = _rk_step(z, h, sqrt_h, a[..., i], b[..., i], ode_drift, sig)
    return SchemeResult(_finite(z), drift_calls=n, diffusion_calls=4 * n)


def gauss_legendre_i(h, w, hh, params):
    """3-point Gauss-Legendre value of ``h int_0^1 exp(a~ h v - sigma (v W + 6 v (1-v) H)) dv``."""
    w = np.asarray(w, dtype=float)[..., None]
    hh = np.asarray(hh, dtype=float)[..., None]
    v = _GL_NODES
    expo = params.a_tilde * h * v - params.sigma * (v * w + 6.0 * v * (1.0 - v) * hh)
    return h * (np.exp(expo) @ _GL_WEIGHTS)


def igbm_parabola_step(x, h, wh, params):
    """Exact-flow IGBM step along a parabola with increment/area ``wh``."""
    integral = gauss_legendre_i(h, wh.w, wh.hh, params)
    return np.exp(-params.a_tilde * h + params.sigma * wh.w) * (x + params.a * params.b * integral)


def igbm_scheme(problem, h, coeffs):
    """Parabola scheme for IGBM using the closed-form flow of the ODE.

    One step counts as one drift evaluation for cost accounting.
    """
    if problem.igbm is None:
        raise ConfigError("problem carries no IGBM parameters")
    if problem.dim != 1:
        raise DimensionError("IGBM is scalar")
    n = coeffs.n_coarse
    _check_step(h, n)
    wh = coeffs.wh(h)
    x = problem.start(coeffs.gs.shape[:-1])[..., 0]
    for i in range(n):
        x = igbm_parabola_step(x, h, type(wh)(wh.w[..., i], wh.hh[..., i]), problem.igbm)
    return SchemeResult(_finite(x[..., None]), drift_calls=n, diffusion_calls=0)


PRIMARY_SCHEMES = {Primary.EULER: euler_maruyama, Primary.SRA1: sra1}
SECONDARY_SCHEMES = {
    Secondary.PARABOLA_RK: parabola_scheme,
    Secondary.PARABOLA_EXACT_IGBM: igbm_scheme,
    Secondary.MILSTEIN: milstein,
}

# drift evaluations per step, used for budget planning
PRIMARY_COST = {Primary.EULER: 1, Primary.SRA1: 2}
SECONDARY_COST = {Secondary.PARABOLA_RK: 1, Secondary.PARABOLA_EXACT_IGBM: 1, Secondary.MILSTEIN: 1}
SECONDARY_DIFFUSION_COST = {Secondary.PARABOLA_RK: 4, Secondary.PARABOLA_EXACT_IGBM: 0, Secondary.MILSTEIN: 1}


def run_primary(kind, problem, h_fine, fine):
    return PRIMARY_SCHEMES[Primary(kind)](problem, h_fine, fine)


def run_secondary(kind, problem, h, coeffs):
    return SECONDARY_SCHEMES[Secondary(kind)](problem, h, coeffs)
