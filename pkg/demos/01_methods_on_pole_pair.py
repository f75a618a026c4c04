"""
Five methods on one surface
===========================

The pole-pair profile eta = -0.3 - 0.3 cos x carries closed-form Dirichlet and
Neumann data, so every method can be scored against the exact answer.
"""

import numpy as np

from dnomp import afm, bim, cs, mpnum, profiles, tfe
from dnomp.spectral import Grid

with mpnum.PrecisionCtx(120):
    # finite depth so that the transformed field expansion applies too
    pair = profiles.pole_pair("0.3", "-0.6", "1.2")
    h = pair.profile.h
    g = Grid(96)
    eta, D, N = pair.sample(g)

    err = {}
    err["bim"] = mpnum.rms(bim.bim_dno(pair.profile, D, g, depth=h) - N)
    s = afm.build_system(pair.profile, 64, 96)
    err["afm"] = mpnum.rms(afm.afm_neumann(s, D) - N)
    err["afm*"] = mpnum.rms(afm.afmstar_neumann(s, D) - N)
    err["cs, n<=40"] = mpnum.rms(cs.dno_apply(eta, D, g, 40, depth=h) - N)
    err["tfe, n<=40"] = mpnum.rms(tfe.tfe_dno(eta, D, g, h, 40, N=32) - N)

    for name, e in err.items():
        print(f"{name:12s} rms error {float(e):.2e}")

    # the series converge geometrically at a rate set by the distance to the pole
    terms = cs.gn_apply(eta, D, 40, g, depth=h)
    e = cs.apply_partial_sum(terms, D, N, g).rms
    print("CS partial sums:", " ".join(f"{float(e[n]):.0e}" for n in range(0, 41, 5)))
