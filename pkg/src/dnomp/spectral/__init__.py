"""FFT, Fourier multipliers and Chebyshev tools on multiprecision arrays."""

from .fft import fft_forward, fft_inverse, dft, factor_235
from .fields import (
    Grid, SurfaceField, wavenumbers, nyquist_index, zero_nyquist,
    apply_multiplier, sym_ddx, sym_D, sym_absD, sym_hilbert, sym_G0,
    ddx, hilbert, trapezoid_ip, synthesize,
)
from .chebyshev import (
    lobatto_nodes, cheb_transform, cheb_differentiate, clenshaw,
    cheb_integrals, product_weights,
)

__all__ = [
    "fft_forward", "fft_inverse", "dft", "factor_235",
    "Grid", "SurfaceField", "wavenumbers", "nyquist_index", "zero_nyquist",
    "apply_multiplier", "sym_ddx", "sym_D", "sym_absD", "sym_hilbert", "sym_G0",
    "ddx", "hilbert", "trapezoid_ip", "synthesize",
    "lobatto_nodes", "cheb_transform", "cheb_differentiate", "clenshaw",
    "cheb_integrals", "product_weights",
]
