"""AFM and AFM* methods built on the global relation.

The Dirichlet data D and Neumann data N of a harmonic function satisfy

    int e^{ikx} [ i cosh(k(eta+h)) N + sinh(k(eta+h)) D_x ] dx = 0

for every k (infinite depth: replace cosh, sinh by e^{|k| eta}, sgn k e^{|k| eta}).
Sampling the basis functions on M collocation points gives matrices A, B of
size M x (K-1) with columns

    A_0 = 1/M,   A_{2k-1}, A_{2k} = (sqrt 2/M) g_k(x) (cos kx, sin kx),
    B_0 = 0,     B_{2k-1}, B_{2k} = (sqrt 2/M) s_k(x) (-sin kx, cos kx),

for 1 <= k < K/2, where

    infinite depth:  g_k = s_k = exp(k (eta - eta_max)),
    depth h:         g_k = cosh(k(eta+h)) / cosh(k(eta_max+h)),
                     s_k = sinh(k(eta+h)) / cosh(k(eta_max+h)).

This real sine/cosine form is a unitary recombination of the complex
columns e^{ikx}, so it has the same singular values and yields the same
Neumann data.  With A = U S V^T,

    AFM:   N = U pinv(S) V^T B^T D_x,
    AFM*:  N = -d/dx ( B V pinv(S) U^T D ),

where pinv keeps the leading ``cutoff`` singular values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpfr

from . import linalg, mpnum
from .spectral import Grid, ddx, fft_forward


@dataclass
class AfmSystem:
    A: np.ndarray
    B: np.ndarray
    grid: Grid
    K: int
    depth: object
    eta: np.ndarray
    eta_max: object
    profile: object = None
    _fact: dict = field(default_factory=dict, repr=False)

    @property
    def ncols(self) -> int:
        return self.A.shape[1]

    def svd(self) -> linalg.SVD:
        if "svd" not in self._fact:
            self._fact["svd"] = linalg.svd(self.A)
        return self._fact["svd"]

    def qr(self) -> linalg.QR:
        if "qr" not in self._fact:
            self._fact["qr"] = linalg.qr(self.A)
        return self._fact["qr"]

    def singular_values(self) -> np.ndarray:
        return self.svd().s

    def cond(self):
        return self.svd().cond()


@dataclass
class CutoffSweep:
    cutoffs: np.ndarray          # 0..K-1
    rms_afm: np.ndarray
    rms_star: np.ndarray
    best_afm: int
    best_star: int
    err_afm: np.ndarray          # E_j at the best AFM cutoff
    err_star: np.ndarray


def _depth(depth):
    if depth is None or depth == "inf":
        return None
    return mpnum.parse_real(depth) if isinstance(depth, str) else mpfr(depth)


def _column_factors(eta, emax, k: int, h):
    """g_k, s_k on the grid, evaluated without overflow."""
    g = mpnum.exp(k * (eta - emax))
    if h is None:
        return g, g
    a = mpnum.exp(-2 * k * (eta + h))
    b = gmpy2.exp(-2 * k * (emax + h))
    return g * (1 + a) / (1 + b), g * (1 - a) / (1 + b)


def build_system(profile, K: int, M: int | None = None, depth=None,
                 eta_max=None) -> AfmSystem:
    """Assemble A and B.

    ``profile`` is a WaveProfile (depth and eta_max taken from it unless
    given) or an array of surface samples on the M-point grid.
    """
    if K < 2 or K % 2:
        raise ValueError("K must be even and >= 2")
    if hasattr(profile, "sample"):
        M = 3 * K // 2 if M is None else M
        grid = Grid(M)
        eta = profile.sample(grid)
        depth = profile.depth if depth is None else depth
        emax = profile.eta_max() if eta_max is None else eta_max
        prof = profile
    else:
        eta = np.asarray(profile, dtype=object)
        M = len(eta)
        grid = Grid(M)
        emax = max(eta) if eta_max is None else eta_max
        prof = None
    if M < K:
        raise ValueError(f"need M >= K (M={M}, K={K})")
    h = _depth(depth)
    emax = mpfr(emax)
    if any(v > emax for v in eta):
        raise ValueError("eta_max is below a sample of eta")
    if h is not None and any(v <= -h for v in eta):
        raise ValueError("surface touches the bottom")
    x = grid.nodes()
    A = mpnum.zeros((M, K - 1))
    B = mpnum.zeros((M, K - 1))
    A[:, 0] = mpfr(1) / M
    w = gmpy2.sqrt(mpfr(2)) / M
    for k in range(1, K // 2):
        g, s = _column_factors(eta, emax, k, h)
        c = mpnum.cos(k * x)
        sn = mpnum.sin(k * x)
        A[:, 2 * k - 1] = w * g * c
        A[:, 2 * k] = w * g * sn
        B[:, 2 * k - 1] = -w * s * sn
        B[:, 2 * k] = w * s * c
    return AfmSystem(A, B, grid, K, depth, eta, emax, prof)


def _check_cutoff(sys: AfmSystem, cutoff):
    n = sys.ncols
    if cutoff is None:
        return n
    if not 0 <= cutoff <= n:
        raise ValueError(f"cutoff {cutoff} outside 0..{n}")
    return cutoff


def afm_neumann(sys: AfmSystem, D, cutoff: int | None = None,
                method: str = "svd") -> np.ndarray:
    """Neumann samples from the global relation (AFM)."""
    Dx = ddx(np.asarray(D, dtype=object), sys.grid)
    rhs = sys.B.T @ Dx
    if method == "svd":
        return linalg.pinv_apply(sys.svd(), _check_cutoff(sys, cutoff), rhs, adjoint=True)
    if method == "qr":
        f = sys.qr()
        return f.Q @ linalg.solve_triangular(f.R, rhs, trans=True)
    raise ValueError(f"unknown method {method!r}")


def afmstar_neumann(sys: AfmSystem, D, cutoff: int | None = None,
                    method: str = "svd") -> np.ndarray:
    """Neumann samples from the dual expansion (AFM*)."""
    D = np.asarray(D, dtype=object)
    if method == "svd":
        c = linalg.pinv_apply(sys.svd(), _check_cutoff(sys, cutoff), D)
    elif method == "qr":
        f = sys.qr()
        c = linalg.solve_triangular(f.R, f.Q.T @ D)
    else:
        raise ValueError(f"unknown method {method!r}")
    return -ddx(sys.B @ c, sys.grid)


def _rms_columns(E):
    """RMS over rows of each column."""
    M = E.shape[0]
    return np.array([gmpy2.sqrt(np.dot(E[:, i], E[:, i]) / M) for i in range(E.shape[1])],
                    dtype=object)


def cutoff_sweep(sys: AfmSystem, D, N) -> CutoffSweep:
    """RMS error of both methods for every cutoff 0..K-1."""
    f = sys.svd()
    D = np.asarray(D, dtype=object)
    N = np.asarray(N, dtype=object)
    n = sys.ncols
    Dx = ddx(D, sys.grid)
    a = (f.V.T @ (sys.B.T @ Dx)) / f.s
    b = (f.U.T @ D) / f.s
    # partial sums over retained singular triples, one column per cutoff
    Pa = np.cumsum(f.U * a[None, :], axis=1)
    W = -ddx(sys.B @ f.V, sys.grid)
    Pb = np.cumsum(W * b[None, :], axis=1)
    Ea = N[:, None] - np.concatenate([mpnum.zeros((len(N), 1)), Pa], axis=1)
    Eb = N[:, None] - np.concatenate([mpnum.zeros((len(N), 1)), Pb], axis=1)
    ra = _rms_columns(Ea)
    rb = _rms_columns(Eb)
    ia = int(np.argmin(mpnum.floats(ra)))
    ib = int(np.argmin(mpnum.floats(rb)))
    return CutoffSweep(np.arange(n + 1), ra, rb, ia, ib, Ea[:, ia], Eb[:, ib])


def afm_transform(sys: AfmSystem, values) -> np.ndarray:
    """Packed coefficients in the orthogonalized AFM basis.

    c = Q^T v / sqrt(M) from A = QR, returned as c_0, c_{2k-1} + i c_{2k}.
    """
    f = sys.qr()
    v = np.asarray(values, dtype=object)
    c = (f.Q.T @ v) / gmpy2.sqrt(mpfr(sys.grid.M))
    out = mpnum.zeros(sys.K // 2, complex_=True)
    out[0] = gmpy2.mpc(c[0])
    out[1:] = mpnum.make_complex(c[1::2], c[2::2])
    return out


def fourier_magnitudes(values, kmax: int) -> np.ndarray:
    """|v_k| for 0 <= k < kmax with the 1/M-normalized DFT."""
    vh = fft_forward(np.asarray(values, dtype=object))
    return np.abs(vh[:kmax])
