"""
A series that converges on half the surface
===========================================

On eta = -0.5 cos x the exact potential has a series in e^{ikx} e^{|k|y}
whose partial sums converge where eta < 0 and diverge where eta > 0.
"""

import numpy as np

from dnomp import mpnum, profiles

with mpnum.PrecisionCtx(200):
    pair = profiles.pole_pair("0.5")
    Ks = [4, 8, 16, 32, 64]
    rep = profiles.divergent_series_demo(pair, Ks, M=64)

print("  K   error where eta<0   error where eta>0")
for K, b, a in zip(rep.K, rep.err_below, rep.err_above):
    print(f"{K:3d}   {float(b[0]):17.1e}   {float(a[0]):17.1e}")
