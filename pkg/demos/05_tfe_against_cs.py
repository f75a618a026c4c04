"""
Two routes to the same Taylor terms
===================================

The transformed field expansion flattens the boundary and solves a forced
Laplace problem at each order; the operator expansion recurses on Fourier
multipliers.  Both produce G_n(f) D, and the terms agree to roundoff.
"""

import numpy as np

from dnomp import cs, mpnum, profiles, tfe
from dnomp.spectral import Grid, fft_inverse, synthesize

with mpnum.PrecisionCtx(53):
    h = "0.4"
    g = Grid(128)
    f = profiles.random_profile(4, "0.02", seed=2, depth=h).sample(g)
    D = synthesize(profiles.random_dirichlet(4, seed=5), g)
    a = tfe.tfe_gn(f, D, 10, g, h, N=24, keep_fields=False).terms
    b = cs.gn_apply(f, D, 10, g, depth=mpnum.parse_real(h))
    for n in range(11):
        ref = mpnum.real(fft_inverse(b[n]))
        print(f"n={n:2d}   |G_n D| {float(mpnum.rms(ref)):.1e}   "
              f"difference {float(mpnum.rms(a[n] - ref)):.1e}")
