"""
Cancellation in the operator expansion
======================================

G_n is assembled from terms A_n whose norms grow much faster than the norm of
G_n itself.  The gap is the number of digits lost to cancellation, which is why
the expansion needs extended precision at high order.
"""

import numpy as np

from dnomp import cs, mpnum, profiles
from dnomp.spectral import Grid

# the powers f^n widen in spectrum, so the grid is generous
with mpnum.PrecisionCtx(300):
    g = Grid(1024)
    f = profiles.example_profile("smooth").sample(g)
    run = cs.gn_recursion(f, 24, g, 32, store_rows=0)
    rep = run.report

print(" n   log10|A_n|   log10|G_n|   digits lost   r_n")
for s in rep.stats[1:]:
    print(f"{s.n:2d}   {s.log10_normA:10.2f}   {s.log10_normG:10.2f}   "
          f"{s.log10_normA - s.log10_normG:11.1f}   {float(s.r):.1e}")

# the same study in double precision loses the operator after a few orders
with mpnum.PrecisionCtx(53):
    g = Grid(64)
    f = profiles.cosine_profile("0.5").sample(g)
    run = cs.gn_recursion(f, 30, g, 32, warn=False)
print("53-bit run flagged from order", run.report.flagged[0])
