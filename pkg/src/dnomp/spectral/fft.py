"""Mixed-radix FFT on object arrays of mpc/mpfr.

Transforms act along axis 0 (other axes are batch).  Lengths whose prime
factors are 2, 3 and 5 use a recursive decimation-in-time algorithm; any
other length goes through Bluestein's chirp-z identity on a smooth length.

Conventions: ``fft_forward`` carries the 1/M factor,

    c_k = (1/M) sum_j x_j exp(-2 pi i j k / M),

and ``fft_inverse`` is the plain synthesis sum, so inverse(forward(x)) == x.
Twiddle tables are cached per (length, bits).
"""

from __future__ import annotations

import numpy as np
import gmpy2
from gmpy2 import mpc, mpfr

from .. import mpnum

_GUARD = 16
_twiddles: dict[tuple[int, int], np.ndarray] = {}


def factor_235(n: int) -> tuple[list[int], int]:
    """Split n into radix-2/3/5 factors and the remaining cofactor."""
    out = []
    for p in (2, 3, 5):
        while n % p == 0 and n > 1:
            out.append(p)
            n //= p
    return out, n


def _next_smooth(n: int) -> int:
    m = n
    while factor_235(m)[1] != 1:
        m += 1
    return m


def twiddle_table(n: int) -> np.ndarray:
    """exp(-2 pi i j / n), j = 0..n-1, correctly rounded at current precision."""
    bits = mpnum.current_bits()
    key = (n, bits)
    tab = _twiddles.get(key)
    if tab is None:
        with gmpy2.context(gmpy2.get_context(), precision=bits + _GUARD):
            ang = [2 * gmpy2.const_pi() * j / n for j in range(n)]
            vals = [(gmpy2.cos(a), -gmpy2.sin(a)) for a in ang]
        # use symmetry so that exact values (1, -1, +-i) stay exact
        tab = np.empty(n, dtype=object)
        for j, (c, s) in enumerate(vals):
            tab[j] = mpc(c, s)
        tab[0] = mpc(1)
        if n % 2 == 0:
            tab[n // 2] = mpc(-1)
        if n % 4 == 0:
            tab[n // 4] = mpc(0, -1)
            tab[3 * n // 4] = mpc(0, 1)
        _twiddles[key] = tab
    return tab


def clear_cache():
    _twiddles.clear()


def _dft_smooth(x: np.ndarray, factors: list[int], tab: np.ndarray,
                stride: int, sign: int) -> np.ndarray:
    """Unnormalized DFT along axis 0; tab[stride * j] = exp(-2 pi i j / len)."""
    n = x.shape[0]
    if n == 1:
        return x
    r = factors[0]
    m = n // r
    rest = x.shape[1:]
    y = _dft_smooth(x.reshape((m, r) + rest), factors[1:], tab, stride * r, sign)
    ntab = len(tab)
    k1 = np.arange(m)
    cols = [y[:, 0]]
    for q in range(1, r):
        idx = (stride * q * k1) % ntab
        w = tab[idx] if sign < 0 else mpnum.conj(tab[idx])
        w = w.reshape((m,) + (1,) * len(rest))
        cols.append(y[:, q] * w)
    out = np.empty((r, m) + rest, dtype=object)
    if r == 2:
        out[0] = cols[0] + cols[1]
        out[1] = cols[0] - cols[1]
    elif r == 3:
        t = cols[1] + cols[2]
        d = (cols[1] - cols[2]) * _c3(sign)
        base = cols[0] - t / 2
        out[0] = cols[0] + t
        out[1] = base + d
        out[2] = base - d
    else:
        # generic small prime radix
        wr = [tab[(stride * m * e) % ntab] for e in range(r)]
        if sign > 0:
            wr = [w.conjugate() for w in wr]
        for k2 in range(r):
            acc = cols[0]
            for q in range(1, r):
                acc = acc + cols[q] * wr[(q * k2) % r]
            out[k2] = acc
    return out.reshape((n,) + rest)


def _c3(sign):
    # i * sign * sqrt(3)/2
    return mpc(0, sign * gmpy2.sqrt(mpfr(3)) / 2)


def _bluestein(x: np.ndarray, sign: int) -> np.ndarray:
    n = x.shape[0]
    rest = x.shape[1:]
    L = _next_smooth(2 * n - 1)
    with gmpy2.context(gmpy2.get_context(), precision=mpnum.current_bits() + _GUARD):
        pi = gmpy2.const_pi()
        # chirp c_j = exp(sign * i pi j^2 / n); reduce j^2 mod 2n exactly
        ch = [pi * ((j * j) % (2 * n)) / n for j in range(n)]
        ch = [(gmpy2.cos(a), gmpy2.sin(a)) for a in ch]
    c = np.array([mpc(a, sign * b) for a, b in ch], dtype=object)
    shp = (n,) + (1,) * len(rest)
    a = mpnum.zeros((L,) + rest, complex_=True)
    a[:n] = x * c.reshape(shp)
    b = mpnum.zeros(L, complex_=True)
    cc = mpnum.conj(c)
    b[:n] = cc
    b[L - n + 1:] = cc[1:][::-1]
    fa = dft(a, -1)
    fb = dft(b, -1).reshape((L,) + (1,) * len(rest))
    conv = dft(fa * fb, +1)[:n] / L
    return conv * c.reshape(shp)


def dft(x: np.ndarray, sign: int = -1) -> np.ndarray:
    """Unnormalized DFT along axis 0 with kernel exp(sign * 2 pi i j k / n)."""
    x = np.asarray(x, dtype=object)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty transform")
    factors, rest = factor_235(n)
    if rest != 1:
        return _bluestein(x, sign)
    return _dft_smooth(x, factors, twiddle_table(n), 1, sign)


def fft_forward(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Normalized forward transform (1/M factor) along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=object), axis, 0)
    if x.shape[0] < 4:
        raise ValueError("grid transforms need M >= 4")
    out = dft(x, -1) / x.shape[0]
    return np.moveaxis(out, 0, axis)


def fft_inverse(c: np.ndarray, axis: int = 0) -> np.ndarray:
    """Synthesis sum along ``axis``; exact inverse of ``fft_forward``."""
    c = np.moveaxis(np.asarray(c, dtype=object), axis, 0)
    if c.shape[0] < 4:
        raise ValueError("grid transforms need M >= 4")
    return np.moveaxis(dft(c, +1), 0, axis)
