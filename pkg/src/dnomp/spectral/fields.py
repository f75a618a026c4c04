"""Periodic grids, Fourier multipliers and spectral differentiation.

Mode arrays use numpy FFT ordering: index i holds wavenumber i for
i < M/2 and i - M above.  For even M the Nyquist slot (index M/2) is
always zeroed after a multiplier is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .. import mpnum
from .fft import fft_forward, fft_inverse


def wavenumbers(M: int) -> np.ndarray:
    """Integer wavenumbers in FFT order (the Nyquist slot is labelled -M/2)."""
    return np.fft.fftfreq(M, 1.0 / M).round().astype(np.int64)


def nyquist_index(M: int):
    return M // 2 if M % 2 == 0 else None


@dataclass(frozen=True)
class Grid:
    """Uniform grid x_j = L j / M on one period (L defaults to 2 pi)."""

    M: int
    L: object = None

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"grid needs M >= 2, got {self.M}")

    @property
    def is_standard(self) -> bool:
        return self.L is None

    def length(self):
        return 2 * mpnum.pi() if self.L is None else mpfr(self.L)

    def nodes(self) -> np.ndarray:
        L = self.length()
        return np.array([L * j / self.M for j in range(self.M)], dtype=object)

    def k(self) -> np.ndarray:
        return wavenumbers(self.M)

    def kphys(self) -> np.ndarray:
        """Physical wavenumbers 2 pi k / L as mp reals."""
        k = mpnum.ints(self.k())
        if self.L is None:
            return k
        return k * (2 * mpnum.pi() / mpfr(self.L))


@dataclass
class SurfaceField:
    """Grid samples of a (real or complex) periodic function."""

    grid: Grid
    values: np.ndarray
    _modes: np.ndarray | None = field(default=None, repr=False)

    @property
    def modes(self) -> np.ndarray:
        if self._modes is None:
            self._modes = fft_forward(self.values)
        return self._modes

    @classmethod
    def from_modes(cls, grid: Grid, modes: np.ndarray, real: bool = True):
        vals = fft_inverse(modes)
        if real:
            vals = mpnum.real(vals)
        return cls(grid, vals, np.asarray(modes, dtype=object))


def zero_nyquist(modes: np.ndarray, axis: int = 0) -> np.ndarray:
    M = modes.shape[axis]
    ny = nyquist_index(M)
    if ny is not None:
        modes = modes.copy()
        idx = [slice(None)] * modes.ndim
        idx[axis] = ny
        modes[tuple(idx)] = mpc(0)
    return modes


def apply_multiplier(modes: np.ndarray, symbol: np.ndarray, axis: int = 0) -> np.ndarray:
    """Multiply mode array by a symbol sampled at the wavenumbers."""
    symbol = np.asarray(symbol, dtype=object)
    shape = [1] * modes.ndim
    shape[axis] = -1
    return zero_nyquist(modes * symbol.reshape(shape), axis)


# ---------------------------------------------------------------------------
# standard symbols


def sym_ddx(grid: Grid) -> np.ndarray:
    """i k"""
    return np.array([mpc(0, k) for k in grid.kphys()], dtype=object)


def sym_D(grid: Grid) -> np.ndarray:
    """k, the symbol of D = -i d/dx"""
    return grid.kphys()


def sym_absD(grid: Grid) -> np.ndarray:
    return np.abs(grid.kphys())


def sym_hilbert(grid: Grid) -> np.ndarray:
    """-i sgn(k), with sgn(0) = 0"""
    return np.array([mpc(0, -int(np.sign(k))) for k in grid.k()], dtype=object)


def sym_G0(grid: Grid, depth=None) -> np.ndarray:
    """|k| for infinite depth, k tanh(k h) for depth h."""
    k = grid.kphys()
    if depth is None:
        return np.abs(k)
    return k * mpnum.tanh(k * mpfr(depth))


def ddx(values: np.ndarray, grid: Grid, axis: int = 0, real: bool = True) -> np.ndarray:
    """Spectral x-derivative of grid samples (Nyquist dropped)."""
    c = fft_forward(values, axis=axis)
    d = fft_inverse(apply_multiplier(c, sym_ddx(grid), axis), axis=axis)
    return mpnum.real(d) if real else d


def hilbert(values: np.ndarray, grid: Grid, real: bool = True) -> np.ndarray:
    c = fft_forward(values)
    out = fft_inverse(apply_multiplier(c, sym_hilbert(grid)))
    return mpnum.real(out) if real else out


def trapezoid_ip(f: np.ndarray, g: np.ndarray, grid: Grid):
    """(L/M) sum f_j conj(g_j), exact for trigonometric polynomials below M."""
    g = np.asarray(g, dtype=object)
    gc = mpnum.conj(g) if g.size and isinstance(g.flat[0], mpc) else g
    return np.dot(np.asarray(f, dtype=object), gc) * grid.length() / grid.M


def synthesize(coeffs: dict, grid: Grid, deriv: int = 0) -> np.ndarray:
    """Samples of sum_k c_k e^{ikx} (c_{-k} = conj c_k) and its derivatives.

    ``coeffs`` maps k >= 0 to the complex coefficient.  Wavenumbers beyond
    the grid are folded back, which gives exact samples of the series.
    """
    M = grid.M
    modes = mpnum.zeros(M, complex_=True)
    scale = mpfr(1) if grid.L is None else 2 * mpnum.pi() / mpfr(grid.L)
    for k, c in coeffs.items():
        c = mpc(c)
        for kk, cc in ((k, c), (-k, c.conjugate())) if k else ((0, c),):
            val = cc * (mpc(0, kk * scale) ** deriv) if deriv else cc
            modes[kk % M] += val
    return mpnum.real(fft_inverse(modes))
