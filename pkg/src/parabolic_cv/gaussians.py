"""Gaussian inputs of the fine and coarse schemes.

Fine family
    ``g[i']`` are normalised Brownian increments on the fine grid and
    ``f[i']`` (optional) the normalised "parabolic adjustments" built from
    the time integral of the path over each fine step.  Both are i.i.d.
    standard normal.

Coarse parabola coefficients
    ``gs[i]`` (normalised coarse increment) and ``gsp[i]`` (normalised
    coarse area term, ``sqrt(12) H / sqrt(h)``) define the piecewise
    parabolic path.  They are either drawn directly (unconditioned) or derived
    from a fine family, in which case they have the same joint law but are
    coupled with the fine scheme.

All arrays may carry leading batch dimensions: ``g`` has shape
``batch + (n_fine,)`` and ``gs`` shape ``batch + (n_coarse,)``.

Draw order
    ``sample_fine`` consumes, per replication and per fine step, ``g`` then
    ``f`` (when requested).  ``parabola_unconditioned`` consumes ``gs`` then
    ``gsp`` per coarse interval.  ``condition_on_increments`` consumes one
    fresh normal per coarse interval.  Batched calls lay replications out
    row-major, so a batched call consumes exactly what the same sequence of
    single-replication calls would.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DivisibilityError, MissingAreasError, OutOfIntervalError

SQRT3 = np.sqrt(3.0)


class Provenance(enum.Enum):
    UNCONDITIONED = "unconditioned"
    INCREMENTS = "conditioned-on-increments"
    INCREMENTS_AND_AREAS = "conditioned-on-increments-and-areas"


@dataclass(frozen=True)
class FineGaussians:
    """Fine-grid family: increments ``g`` and optional areas ``f``."""

    g: np.ndarray
    f: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "g", g)
        if g.ndim == 0 or g.shape[-1] < 1:
            raise ValueError("fine family needs at least one step")
        if not np.isfinite(g).all():
            raise ValueError("fine increments must be finite")
        if self.f is not None:
            f = np.asarray(self.f, dtype=float)
            if f.shape != g.shape:
                raise ValueError(f"f shape {f.shape} does not match g shape {g.shape}")
            if not np.isfinite(f).all():
                raise ValueError("fine areas must be finite")
            object.__setattr__(self, "f", f)

    @property
    def n_fine(self):
        return self.g.shape[-1]

    @property
    def has_areas(self):
        return self.f is not None

    @property
    def batch_shape(self):
        return self.g.shape[:-1]


@dataclass(frozen=True)
class WHPair:
    """Increment ``w`` and centred area ``hh`` of a path over a coarse step."""

    w: np.ndarray
    hh: np.ndarray


@dataclass(frozen=True)
class ParabolaCoeffs:
    """Normalised coefficients of a piecewise parabolic path."""

    gs: np.ndarray
    gsp: np.ndarray
    provenance: Provenance = Provenance.UNCONDITIONED

    def __post_init__(self):
        gs = np.asarray(self.gs, dtype=float)
        gsp = np.asarray(self.gsp, dtype=float)
        if gs.shape != gsp.shape:
            raise ValueError(f"gs shape {gs.shape} does not match gsp shape {gsp.shape}")
        if gs.ndim == 0 or gs.shape[-1] < 1:
            raise ValueError("parabola needs at least one interval")
        object.__setattr__(self, "gs", gs)
        object.__setattr__(self, "gsp", gsp)

    @property
    def n_coarse(self):
        return self.gs.shape[-1]

    def wh(self, h):
        """Unnormalised ``(W, H)`` per interval for coarse step ``h``."""
        sqrt_h = np.sqrt(h)
        return WHPair(w=sqrt_h * self.gs, hh=sqrt_h / (2.0 * SQRT3) * self.gsp)


def _batch(size):
    if size is None:
        return ()
    if isinstance(size, (int, np.integer)):
        return (int(size),)
    return tuple(size)


def sample_fine(rng, n_fine, with_areas=False, size=None):
    """Draw a fine Gaussian family of ``n_fine`` steps.

    Consumes ``n_fine`` normals per replication (``2 * n_fine`` with areas,
    ordered ``g, f`` per step).
    """
    if n_fine < 1:
        raise ValueError("n_fine must be >= 1")
    batch = _batch(size)
    if with_areas:
        z = rng.standard_normal(batch + (n_fine, 2))
        return FineGaussians(g=z[..., 0], f=z[..., 1])
    return FineGaussians(g=rng.standard_normal(batch + (n_fine,)))


def parabola_unconditioned(rng, n_coarse, size=None):
    """Draw free parabola coefficients: ``2 * n_coarse`` normals per replication."""
    if n_coarse < 1:
        raise ValueError("n_coarse must be >= 1")
    z = rng.standard_normal(_batch(size) + (n_coarse, 2))
    return ParabolaCoeffs(gs=z[..., 0], gsp=z[..., 1], provenance=Provenance.UNCONDITIONED)


def _blocks(x, q):
    n_fine = x.shape[-1]
    if q < 1:
        raise DivisibilityError(f"q must be a positive integer, got {q}")
    if n_fine % q:
        raise DivisibilityError(f"n_fine={n_fine} is not a multiple of q={q}")
    return x.reshape(x.shape[:-1] + (n_fine // q, q))


def increment_weights(q):
    """Weights ``1 + (1 - 2j)/q`` for ``j = 1..q``."""
    j = np.arange(1, q + 1)
    return 1.0 + (1.0 - 2.0 * j) / q


def condition_on_increments(fine, q, rng=None, *, g_hat=None):
    """Coarse coefficients conditioned on the fine increments only.

    The part of the coarse area not determined by the increments is filled in
    with fresh normals ``g_hat`` (one per coarse interval), drawn from ``rng``
    unless given explicitly.
    """
    blocks = _blocks(fine.g, q)
    n_coarse = blocks.shape[-2]
    if g_hat is None:
        if rng is None:
            raise ValueError("need either rng or g_hat")
        g_hat = rng.standard_normal(fine.batch_shape + (n_coarse,))
    else:
        g_hat = np.asarray(g_hat, dtype=float)
        if g_hat.shape != fine.batch_shape + (n_coarse,):
            raise ValueError(f"g_hat shape {g_hat.shape} != {fine.batch_shape + (n_coarse,)}")
    gs = blocks.sum(axis=-1) / np.sqrt(q)
    gsp = SQRT3 / np.sqrt(q) * (blocks @ increment_weights(q) + g_hat / np.sqrt(3.0 * q))
    return ParabolaCoeffs(gs=gs, gsp=gsp, provenance=Provenance.INCREMENTS)


def condition_on_increments_and_areas(fine, q):
    """Coarse coefficients fully determined by fine increments and areas."""
    if not fine.has_areas:
        raise MissingAreasError("areas conditioning needs a fine family with f draws")
    blocks = _blocks(fine.g, q)
    fblocks = _blocks(fine.f, q)
    gs = blocks.sum(axis=-1) / np.sqrt(q)
    gsp = SQRT3 / np.sqrt(q) * (blocks @ increment_weights(q) + fblocks.sum(axis=-1) / (SQRT3 * q))
    return ParabolaCoeffs(gs=gs, gsp=gsp, provenance=Provenance.INCREMENTS_AND_AREAS)


def parabola_eval(coeffs, i, h, u, w_prefix):
    """Value of the piecewise parabola at time ``u`` in interval ``i`` (1-based).

    ``w_prefix`` is the path value at the left end of the interval,
    ``sqrt(h) * sum(gs[:i-1])``.  Only unbatched coefficients are supported.
    """
    if not 1 <= i <= coeffs.n_coarse:
        raise OutOfIntervalError(f"interval index {i} outside 1..{coeffs.n_coarse}")
    left, right = (i - 1) * h, i * h
    # tolerate roundoff at the interval ends
    slack = 1e-12 * max(1.0, abs(right))
    if u < left - slack or u > right + slack:
        raise OutOfIntervalError(f"u={u} outside [{left}, {right}]")
    s = u - left
    return (
        w_prefix
        + s / np.sqrt(h) * coeffs.gs[..., i - 1]
        + SQRT3 * s * (right - u) / h**1.5 * coeffs.gsp[..., i - 1]
    )


def conditional_delta_i_stats(delta_w, h_fine):
    """Law of the coarse time integral given the fine increments of one block.

    ``delta_w`` holds the ``q`` unnormalised fine increments of a coarse
    interval.  Returns the conditional mean and variance of
    ``int (W_u - W_s) du`` over that interval.
    """
    delta_w = np.asarray(delta_w, dtype=float)
    q = delta_w.shape[-1]
    j = np.arange(1, q + 1)
    mean = h_fine * (delta_w @ (q + 0.5 - j))
    return mean, q * h_fine**3 / 12.0


def sample_coupled_block(rng, n_reps, n_fine, q, with_areas):
    """Fine family plus the coarse coefficients conditioned on it.

    Per replication the stream is consumed as: the fine family (``g, f`` per
    step), then, when there are no areas, one fresh normal per coarse
    interval.  The result is identical to calling :func:`sample_fine` and
    :func:`condition_on_increments` replication by replication, whatever the
    value of ``n_reps``.
    """
    if with_areas:
        fine = sample_fine(rng, n_fine, True, size=n_reps)
        return fine, condition_on_increments_and_areas(fine, q)
    if n_fine % q:
        raise DivisibilityError(f"n_fine={n_fine} is not a multiple of q={q}")
    n_coarse = n_fine // q
    z = rng.standard_normal((n_reps, n_fine + n_coarse))
    fine = FineGaussians(g=z[:, :n_fine])
    return fine, condition_on_increments(fine, q, g_hat=z[:, n_fine:])
