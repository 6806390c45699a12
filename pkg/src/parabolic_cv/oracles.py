"""Reference computations that share no code with the schemes they check."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .errors import ConfigError, MaxDepthError, UnstableError
from .models import PdeSpec


@dataclass(frozen=True)
class PdeResult:
    value: float
    error_estimate: float
    domain_change: float
    nx: int
    nt: int
    domain: tuple

    def metadata(self):
        return {
            "value": self.value,
            "richardson_error": self.error_estimate,
            "domain_halving_change": self.domain_change,
            "nx": self.nx,
            "nt": self.nt,
            "domain": list(self.domain),
            "scheme": "Crank-Nicolson, centred differences, u_xx = 0 at both ends",
        }


def _solve_grid(spec, x0, lo, hi, nx, nt):
    x = np.linspace(lo, hi, nx + 1)
    dx = (hi - lo) / nx
    dt = 1.0 / nt
    xi = x[1:-1]
    a = np.asarray(spec.drift_coeff(xi), dtype=float) * np.ones_like(xi)
    s2 = np.asarray(spec.diff_coeff(xi), dtype=float) ** 2 * np.ones_like(xi)
    # interior operator L u_j = lo_j u_{j-1} + di_j u_j + up_j u_{j+1}
    lo_c = 0.5 * s2 / dx**2 - 0.5 * a / dx
    up_c = 0.5 * s2 / dx**2 + 0.5 * a / dx
    di_c = -s2 / dx**2
    # eliminate the end nodes with u_0 = 2 u_1 - u_2, u_n = 2 u_{n-1} - u_{n-2}
    di_c[0] += 2.0 * lo_c[0]
    up_c[0] -= lo_c[0]
    di_c[-1] += 2.0 * up_c[-1]
    lo_c[-1] -= up_c[-1]
    lo_c[0] = up_c[-1] = 0.0

    half = 0.5 * dt
    ab = np.zeros((3, xi.size))
    ab[0, 1:] = -half * up_c[:-1]
    ab[1] = 1.0 - half * di_c
    ab[2, :-1] = -half * lo_c[1:]

    u = np.asarray(spec.terminal(xi), dtype=float) * np.ones_like(xi)
    for _ in range(nt):
        rhs = u + half * di_c * u
        rhs[1:] += half * lo_c[1:] * u[:-1]
        rhs[:-1] += half * up_c[:-1] * u[1:]
        u = solve_banded((1, 1), ab, rhs, check_finite=False)
    if not np.isfinite(u).all():
        raise UnstableError("PDE solution is not finite")
    return float(np.interp(x0, xi, u))


def feynman_kac_solve(spec, x0, tol=1e-6, check_domain=True):
    """``u(x0, 0)`` for the backward problem described by ``spec``.

    The error estimate is the Richardson difference between the ``(nx, nt)``
    grid and the doubled grid; the doubled-grid value is returned after
    extrapolation.  With ``check_domain`` the solve is repeated on a domain of
    half the width (same spacing) and must agree within ``tol``.
    """
    lo, hi = spec.domain
    if not lo < x0 < hi:
        raise ConfigError(f"x0={x0} outside the PDE domain {spec.domain}")
    coarse = _solve_grid(spec, x0, lo, hi, spec.nx, spec.nt)
    fine = _solve_grid(spec, x0, lo, hi, 2 * spec.nx, 2 * spec.nt)
    err = abs(fine - coarse) / 3.0
    value = fine + (fine - coarse) / 3.0
    change = 0.0
    if check_domain:
        w = 0.25 * (hi - lo)
        mid = 0.5 * (lo + hi)
        half = _solve_grid(spec, x0, mid - w, mid + w, spec.nx // 2, spec.nt)
        change = abs(half - coarse)
    if err > tol or change > tol:
        raise UnstableError(
            f"PDE oracle not converged: Richardson estimate {err:.2e}, domain change {change:.2e}, tol {tol:.1e}"
        )
    return PdeResult(value, err, change, spec.nx, spec.nt, (lo, hi))


def adaptive_quadrature(f, tol=1e-10, a=0.0, b=1.0, max_subdivisions=200):
    """Globally adaptive Gauss-Kronrod quadrature of a scalar function on ``[a, b]``."""
    if not tol > 0:
        raise ConfigError("tol must be positive")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=max_subdivisions)
        except integrate.IntegrationWarning as exc:
            raise MaxDepthError(f"quadrature did not reach tol={tol}: {exc}") from None
    return value


def simpson(y, dx):
    """Composite Simpson rule on an even number of equal intervals along the last axis."""
    n = y.shape[-1] - 1
    if n < 2 or n % 2:
        raise ConfigError("Simpson rule needs an even number of intervals")
    return dx / 3.0 * (y[..., 0] + y[..., -1] + 4.0 * y[..., 1:-1:2].sum(-1) + 2.0 * y[..., 2:-1:2].sum(-1))


def igbm_exact_terminal(x0, a, b, sigma, w_path):
    """Exact IGBM value at ``t = 1`` given Brownian values on a uniform grid.

    ``w_path`` has shape ``(..., n + 1)`` with ``w_path[..., 0] == 0``; the
    time integral is evaluated by the composite Simpson rule.
    """
    w_path = np.asarray(w_path, dtype=float)
    n = w_path.shape[-1] - 1
    at = a + 0.5 * sigma**2
    u = np.linspace(0.0, 1.0, n + 1)
    integral = simpson(np.exp(at * u - sigma * w_path), 1.0 / n)
    return np.exp(-at + sigma * w_path[..., -1]) * (x0 + a * b * integral)
