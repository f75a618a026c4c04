"""Chebyshev tools on Gauss-Lobatto nodes s_i = cos(pi i / N), i = 0..N.

Coefficient arrays run along axis 0 (degree 0..N); trailing axes are batch.
"""

from __future__ import annotations

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .. import mpnum
from .fft import dft


def lobatto_nodes(N: int) -> np.ndarray:
    if N < 1:
        raise ValueError("need N >= 1")
    with gmpy2.context(gmpy2.get_context(), precision=mpnum.current_bits() + 16):
        s = [gmpy2.cos(gmpy2.const_pi() * i / N) for i in range(N + 1)]
    s = np.array([+v for v in s], dtype=object)  # round to working precision
    s[0], s[N] = mpfr(1), mpfr(-1)
    if N % 2 == 0:
        s[N // 2] = mpfr(0)
    return s


def cheb_transform(values: np.ndarray) -> np.ndarray:
    """Nodal values at the Lobatto nodes -> Chebyshev coefficients (DCT-I)."""
    f = np.asarray(values, dtype=object)
    N = f.shape[0] - 1
    if N < 2:
        raise ValueError("need N >= 2 (three or more nodes)")
    # the length-2N DFT loses a few bits to twiddle rounding, which the
    # derivative recurrence then amplifies by ~N^2; guard bits absorb it
    with gmpy2.context(gmpy2.get_context(), precision=mpnum.current_bits() + 16):
        ext = np.concatenate([f, f[-2:0:-1]], axis=0)
        G = mpnum.real(dft(ext, -1)[: N + 1])
        a = G / N
        a[0] = a[0] / 2
        a[N] = a[N] / 2
    return mpnum.to_real(a) if a.dtype == object else a


def cheb_differentiate(alpha: np.ndarray, h=2) -> np.ndarray:
    """Coefficients of d/dy when s = 1 + 2 y / h (h = 2 gives d/ds).

    Uses the descending recurrence beta_{N} = 0, beta_{N-1} = N alpha_N,
    beta_j = (j+1) alpha_{j+1} + beta_{j+2}; the derivative's coefficients
    are then beta_0 and 2 beta_j for j >= 1, times the chain factor 2/h.
    """
    a = np.asarray(alpha, dtype=object)
    N = a.shape[0] - 1
    beta = mpnum.zeros(a.shape)
    if N == 0:
        return beta
    beta[N - 1] = N * a[N]
    for j in range(N - 2, -1, -1):
        beta[j] = (j + 1) * a[j + 1] + beta[j + 2]
    beta[1:] = 2 * beta[1:]
    return beta * (2 / mpfr(h))


def clenshaw(alpha: np.ndarray, s) -> np.ndarray:
    """Evaluate sum_j alpha_j T_j(s) at points s in [-1, 1].

    Returns shape (len(s),) + alpha.shape[1:].
    """
    a = np.asarray(alpha, dtype=object)
    s = np.atleast_1d(np.asarray(s, dtype=object))
    for v in s:
        if v < -1 or v > 1:
            raise ValueError(f"Chebyshev evaluation point {v} outside [-1, 1]")
    N = a.shape[0] - 1
    bshape = (len(s),) + (1,) * (a.ndim - 1)
    x = s.reshape(bshape)
    b1 = mpnum.zeros((len(s),) + a.shape[1:])
    b2 = b1
    for j in range(N, 0, -1):
        b1, b2 = a[j] + 2 * x * b1 - b2, b1
    return a[0] + x * b1 - b2


def cheb_integrals(n: int) -> np.ndarray:
    """I_m = int_{-1}^{1} T_m(s) ds for m = 0..n."""
    return np.array([mpfr(2) / (1 - m * m) if m % 2 == 0 else mpfr(0)
                     for m in range(n + 1)], dtype=object)


def product_weights(N: int) -> np.ndarray:
    """W_ij = int T_i T_j ds, so that int p q ds = a^T W b exactly."""
    I = cheb_integrals(2 * N)
    W = np.empty((N + 1, N + 1), dtype=object)
    for i in range(N + 1):
        for j in range(N + 1):
            W[i, j] = (I[i + j] + I[abs(i - j)]) / 2
    return W
