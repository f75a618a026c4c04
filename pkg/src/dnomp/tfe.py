"""Transformed field expansion for the finite-depth Dirichlet-Neumann operator.

The fluid domain -h < y < eta(x) is flattened to -h < y < 0 by
u(x, y) = phi(x, (1 + eta/h) y + eta).  Writing eta = f and expanding
u = sum_n u_n, each order solves

    Delta u_n = d_x F1^n + d_y F2^n + F3^n,   u_n(x, 0) = 0,   u_{n,y}(x, -h) = 0,

with u_0 harmonic and u_0(x, 0) = D.  With r = 1 + y/h and q = -f/h,

    F1^n = r f_x sum_{m<n} q^m u_{n-1-m,y}
    F4^n = f_x sum_{m<n} q^m u_{n-1-m,x}
    F5^n = r f_x^2 sum_{m<n-1} (m+1) q^m u_{n-2-m,y}
    F2^n = r (F4 - F5) + (f/h) sum_{m<n} (m+2) q^m u_{n-1-m,y}
    F3^n = (F5 - F4)/h

and the operator terms are read off at y = 0:

    G_n D = -f_x u_{n-1,x} + sum_{m<=n} q^m u_{n-m,y} + f_x^2 sum_{m<=n-2} q^m u_{n-2-m,y}.

Each Fourier mode of u_n solves u'' - k^2 u = ik F1 + F2' + F3 in y, handled
by a Galerkin method on the Chebyshev basis T_j(s) - 1 (j = 1..N),
s = 1 + 2y/h, with all integrals evaluated exactly in coefficient space.
Derivatives applied to the forcing are moved onto test functions, so large
wavenumbers never multiply data without being divided out again by the
inverse Laplacian.

Grids have shape (N+1, M): row i holds y_i = h (s_i - 1)/2 with s_i the
Chebyshev-Lobatto nodes cos(pi i/N), so row 0 is the surface y = 0 and row
N is the bottom.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import linalg, mpnum
from .spectral import (Grid, cheb_differentiate, cheb_transform, ddx, fft_forward,
                       fft_inverse, lobatto_nodes, product_weights, wavenumbers,
                       zero_nyquist)


class TfeError(ValueError):
    pass


@dataclass
class BulkField:
    """Gradient of u_n on the (N+1) x M grid plus its Chebyshev-Fourier coefficients."""
    n: int
    ux: np.ndarray
    uy: np.ndarray
    alpha: np.ndarray      # (N+1, M) Chebyshev coefficients of u_n(k, .), FFT order in k


@dataclass
class TfeNorms:
    kappa: np.ndarray      # (n_orders, N+1)
    gamma: np.ndarray      # (n_orders, M)


def _depth(h):
    if isinstance(h, str) and h.strip().lower() in ("inf", "+inf", "infinity"):
        h = None
    h = mpnum.parse_real(h) if isinstance(h, str) else (None if h is None else mpfr(h))
    if h is None or h <= 0:
        raise TfeError("the transformed field expansion needs a finite depth h > 0")
    return h


class TfeSolver:
    """Fourier-Chebyshev discretization for a fixed surface f and depth h."""

    def __init__(self, fvals, grid: Grid, h, N: int = 24):
        if not grid.is_standard:
            raise TfeError("period 2 pi assumed")
        if N < 2:
            raise TfeError("need N >= 2")
        self.grid = grid
        self.M = grid.M
        self.N = N
        self.h = _depth(h)
        self.f = np.asarray(fvals, dtype=object)
        if any(v <= -self.h for v in self.f):
            raise TfeError("surface touches the bottom")
        self.fx = ddx(self.f, grid)
        self.q = -self.f / self.h
        self.s = lobatto_nodes(N)
        self.y = self.h * (self.s - 1) / 2
        self.r = 1 + self.y / self.h
        self._setup_galerkin()
        self._lu = {}

    # -- Chebyshev machinery ------------------------------------------------

    def _setup_galerkin(self):
        N = self.N
        one, zero = mpfr(1), mpfr(0)
        # T_j(s_i) = cos(pi i j / N) at the Lobatto nodes
        self.T = np.empty((N + 1, N + 1), dtype=object)
        with gmpy2.context(gmpy2.get_context(), precision=mpnum.current_bits() + 16):
            pi = gmpy2.const_pi()
            tab = [gmpy2.cos(pi * m / N) for m in range(2 * N)]
        tab = [+v for v in tab]
        for i in range(N + 1):
            for j in range(N + 1):
                self.T[i, j] = tab[(i * j) % (2 * N)]
        # basis phi_j = T_j - T_0, j = 1..N, as coefficient columns
        Phi = np.full((N + 1, N), zero, dtype=object)
        for j in range(1, N + 1):
            Phi[0, j - 1] = -one
            Phi[j, j - 1] = one
        dPhi = cheb_differentiate(Phi)           # d/ds
        W = product_weights(N)
        self.Phi = Phi
        self.S = dPhi.T @ W @ dPhi               # int phi_i' phi_j' ds
        self.Mass = Phi.T @ W @ Phi              # int phi_i phi_j ds
        self.R1 = Phi.T @ W                      # int phi_i p ds = R1 @ coeffs(p)
        self.R2 = dPhi.T @ W
        # phi_i(-1) = (-1)^i - 1
        self.bot = np.array([mpfr((-1) ** j - 1) for j in range(1, N + 1)], dtype=object)

    def _system(self, k: int) -> linalg.LU:
        lu = self._lu.get(k)
        if lu is None:
            h = self.h
            Kmat = self.S * (2 / h) + self.Mass * (k * k * h / 2)
            lu = linalg.lu_factor(Kmat)
            self._lu[k] = lu
        return lu

    def values(self, alpha):
        """Nodal values from Chebyshev coefficients (along axis 0)."""
        return self.T @ alpha

    def dy(self, alpha):
        """Chebyshev coefficients of d/dy."""
        return cheb_differentiate(alpha, self.h)

    # -- fields ---------------------------------------------------------------

    def _gradient(self, n: int, alpha, U=None, Uy=None) -> BulkField:
        k = mpnum.ints(wavenumbers(self.M))
        U = self.values(alpha) if U is None else U
        Uy = self.values(self.dy(alpha)) if Uy is None else Uy
        ux = mpnum.real(fft_inverse(zero_nyquist(U * (mpc(0, 1) * k)[None, :], axis=1), axis=1))
        uy = mpnum.real(fft_inverse(zero_nyquist(Uy, axis=1), axis=1))
        return BulkField(n, ux, uy, alpha)

    def order0(self, D) -> BulkField:
        """u_0 with u_0(x, 0) = D and a flat bottom."""
        Dh = zero_nyquist(fft_forward(np.asarray(D, dtype=object)))
        k = mpnum.ints(wavenumbers(self.M))
        ak = np.abs(k)
        h = self.h
        # cosh(k(y+h))/cosh(kh) = e^{k y} (1 + e^{-2k(y+h)}) / (1 + e^{-2kh}), k >= 0
        y = self.y[:, None]
        a = ak[None, :]
        base = mpnum.exp(a * y) / (1 + mpnum.exp(-2 * a * h))
        tail = mpnum.exp(-2 * a * (y + h))
        Uhat = base * (1 + tail) * Dh[None, :]
        # the y-derivative is known in closed form at this order
        Uyhat = a * base * (1 - tail) * Dh[None, :]
        # Chebyshev coefficients along y (real and imaginary parts separately)
        alpha = mpnum.make_complex(cheb_transform(mpnum.real(Uhat)),
                                   cheb_transform(mpnum.imag(Uhat)))
        return self._gradient(0, alpha, Uhat, Uyhat)

    def forcing(self, n: int, hist: list) -> tuple:
        """F1^n, F2^n, F3^n on the grid from u_0..u_{n-1}."""
        if n < 1:
            raise TfeError("forcing starts at order 1")
        fx, f, q, h = self.fx[None, :], self.f[None, :], self.q, self.h
        r = self.r[:, None]
        zero = mpnum.zeros((self.N + 1, self.M))
        s1, s4, s5, s2 = zero, zero, zero, zero
        qm = np.full(self.M, mpfr(1), dtype=object)
        for m in range(n):
            qq = qm[None, :]
            s1 = s1 + qq * hist[n - 1 - m].uy
            s4 = s4 + qq * hist[n - 1 - m].ux
            s2 = s2 + (m + 2) * qq * hist[n - 1 - m].uy
            if m <= n - 2:
                s5 = s5 + (m + 1) * qq * hist[n - 2 - m].uy
            qm = qm * q
        F1 = r * fx * s1
        F4 = fx * s4
        F5 = r * fx * fx * s5
        F2 = r * (F4 - F5) + (f / h) * s2
        F3 = (F5 - F4) / h
        return F1, F2, F3

    def solve_order(self, n: int, F1, F2, F3) -> BulkField:
        """u_n from its forcing: u'' - k^2 u = ik F1 + F2' + F3, u(0) = 0, u'(-h) = 0."""
        M, h = self.M, self.h

        def coeffs(F):     # Chebyshev in y, then Fourier in x
            return fft_forward(cheb_transform(F), axis=1)

        f1, f2, f3 = coeffs(F1), coeffs(F2), coeffs(F3)
        F2bot = fft_forward(F2[self.N], axis=0)
        kk = wavenumbers(M)
        alpha = mpnum.zeros((self.N + 1, M), complex_=True)
        for col in range(M // 2):               # k = 0..M/2-1, negatives by symmetry
            k = int(kk[col])
            src = mpc(0, k) * f1[:, col] + f3[:, col]
            rhs = -(h / 2) * (self.R1 @ src) + self.R2 @ f2[:, col] + self.bot * F2bot[col]
            c = self._system(k).solve(rhs)
            a = self.Phi @ c
            alpha[:, col] = a
            if col:
                alpha[:, M - col] = mpnum.conj(a)
        return self._gradient(n, alpha)

    def surface_term(self, n: int, hist: list):
        """G_n D on the grid."""
        fx, q = self.fx, self.q
        out = mpnum.zeros(self.M)
        if n >= 1:
            out = out - fx * hist[n - 1].ux[0]
        qm = np.full(self.M, mpfr(1), dtype=object)
        for m in range(n + 1):
            out = out + qm * hist[n - m].uy[0]
            if m <= n - 2:
                out = out + fx * fx * qm * hist[n - 2 - m].uy[0]
            qm = qm * q
        return out


@dataclass
class TfeRun:
    terms: list                    # G_n D on the grid
    fields: list = field(repr=False, default_factory=list)
    solver: TfeSolver | None = field(repr=False, default=None)


def tfe_gn(fvals, Dvals, n_max: int, grid: Grid, h, N: int = 24,
           keep_fields: bool = True) -> TfeRun:
    """Terms G_n(f) D, n = 0..n_max."""
    sol = TfeSolver(fvals, grid, h, N)
    hist = [sol.order0(Dvals)]
    terms = [sol.surface_term(0, hist)]
    for n in range(1, n_max + 1):
        F = sol.forcing(n, hist)
        hist.append(sol.solve_order(n, *F))
        terms.append(sol.surface_term(n, hist))
    return TfeRun(terms, hist if keep_fields else [], sol)


def tfe_dno(fvals, Dvals, grid: Grid, h, n_max: int, N: int = 24):
    """Partial sum of the transformed field expansion."""
    run = tfe_gn(fvals, Dvals, n_max, grid, h, N, keep_fields=False)
    return np.sum(np.stack(run.terms), axis=0)


def tfe_norms(fields: list) -> TfeNorms:
    """Partial norms of the Chebyshev-Fourier coefficients of each u_n."""
    kap, gam = [], []
    for bf in fields:
        a2 = np.abs(bf.alpha) ** 2
        kap.append([gmpy2.sqrt(v) for v in np.sum(a2, axis=1)])
        gam.append([gmpy2.sqrt(v) for v in np.sum(a2, axis=0)])
    return TfeNorms(np.array(kap, dtype=object), np.array(gam, dtype=object))
