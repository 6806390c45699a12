"""
Coarse parabola coefficients from a fine Gaussian family
========================================================

A fine Euler path is driven by standard normals g_1..g_N'.  Grouping them
in blocks of q gives the coarse increments, and a weighted sum plus one
fresh normal gives the area coefficient.  Both are again independent
standard normals, which is what makes the coarse run a valid control
variate: its law does not depend on the coupling.
"""

import numpy as np

from parabolic_cv import rng
from parabolic_cv.gaussians import (
    condition_on_increments,
    condition_on_increments_and_areas,
    parabola_unconditioned,
    sample_coupled_block,
    sample_fine,
)

# one fine family of 16 steps, coarsened by q = 4
fine = sample_fine(rng.stream(0, "demo"), 16)
coarse = condition_on_increments(fine, 4, rng.stream(1, "demo"))
print("fine g        ", np.round(fine.g, 3))
print("coarse gs     ", np.round(coarse.gs, 3))
print("coarse gsp    ", np.round(coarse.gsp, 3))

# the increments part is exact: sum over the block, rescaled
print("block sums ok ", np.allclose(coarse.gs, fine.g.reshape(4, 4).sum(1) / 2))

# many coupled blocks: sample covariance of (gs, gsp) is the identity
fine, c = sample_coupled_block(rng.stream(2, "demo"), 100_000, 16, 16, False)
print("covariance, increments conditioning\n", np.round(np.cov(c.gs[:, 0], c.gsp[:, 0]), 3))

# with areas on the fine grid no fresh draw is needed
fine = sample_fine(rng.stream(3, "demo"), 16, with_areas=True, size=100_000)
c = condition_on_increments_and_areas(fine, 16)
print("covariance, increments and areas\n", np.round(np.cov(c.gs[:, 0], c.gsp[:, 0]), 3))

# free coefficients for the cheap runs
u = parabola_unconditioned(rng.stream(4, "demo"), 1, size=100_000)
print("covariance, unconditioned\n", np.round(np.cov(u.gs[:, 0], u.gsp[:, 0]), 3))
