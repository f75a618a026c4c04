"""
Regularizing the global relation
================================

The AFM matrix has singular values spanning dozens of orders of magnitude.
Keeping only the leading ones (a pseudo-inverse cutoff) trades truncation
error against amplified roundoff; the error curve has an interior minimum.
"""

import numpy as np

from dnomp import afm, mpnum, profiles

with mpnum.PrecisionCtx(160):
    pair = profiles.pole_pair("0.5")
    s = afm.build_system(pair.profile, 96, 96)
    _, D, N = pair.sample(s.grid)
    sw = afm.cutoff_sweep(s, D, N)
    sv = mpnum.floats(s.singular_values())

print(f"singular values from {sv[0]:.1e} down to {sv[-1]:.1e}")
ra, rb = mpnum.floats(sw.rms_afm), mpnum.floats(sw.rms_star)
for c in range(0, len(ra), 8):
    print(f"cutoff {c:3d}   AFM {ra[c]:.1e}   AFM* {rb[c]:.1e}")
print(f"best AFM cutoff {sw.best_afm}: {ra[sw.best_afm]:.1e}")
