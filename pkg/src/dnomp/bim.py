"""Boundary integral method for the Dirichlet-Neumann map.

The potential is written as a periodic double-layer with density mu on the
parametrized surface zeta(a) = a + i eta(a).  The density solves the
second-kind equation

    mu/2 + (1/2 pi) int A(a, b) mu(b) db = D,
    A(a, b) = Im{ zeta'(b)/2 cot((zeta(a) - zeta(b))/2) },
    A(a, a) = Im{ -zeta''(a) / (2 zeta'(a)) },

and the normal derivative follows from

    N = (1/2) H[mu'] + (1/2 pi) int B(a, b) mu'(b) db,
    B(a, b) = Re{ zeta'(a)/2 cot((zeta(a) - zeta(b))/2) - (1/2) cot((a - b)/2) },
    B(a, a) = Re{ zeta''(a) / (2 zeta'(a)) },

with H the Hilbert transform (symbol -i sgn k).  At finite depth the double
layer is mirrored in the bottom y = -h; the image pole sits at
conj(zeta(b)) - 2ih and adds smooth kernels

    A_img(a, b) = -Im{ conj(zeta'(b))/2 cot((zeta(a) - conj(zeta(b)) + 2ih)/2) },
    B_img(a, b) = -Re{ zeta'(a)/2 cot((zeta(a) - conj(zeta(b)) + 2ih)/2) }.

Integrals use the trapezoidal rule on the uniform grid, which converges
spectrally for these periodic kernels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import linalg, mpnum
from .spectral import Grid, ddx, hilbert


@dataclass
class BimKernels:
    grid: Grid
    depth: object
    A: np.ndarray       # real M x M, includes the image term at finite depth
    B: np.ndarray


@dataclass
class BimSolution:
    mu: np.ndarray
    N: np.ndarray
    method: str
    residual: object            # relative residual of the density equation
    cond: object = None         # 1-norm condition estimate (LU path)
    iterations: int = 0


def _surface(eta_src, grid: Grid):
    """eta, eta', eta'' on the grid from a profile or from grid samples."""
    if hasattr(eta_src, "sample"):
        return eta_src.sample(grid), eta_src.sample(grid, 1), eta_src.sample(grid, 2)
    eta = np.asarray(eta_src, dtype=object)
    d1 = ddx(eta, grid)
    return eta, d1, ddx(d1, grid)


def _depth(depth):
    if depth is None or depth == "inf":
        return None
    return mpnum.parse_real(depth) if isinstance(depth, str) else mpfr(depth)


def assemble_kernels(eta_src, grid: Grid, depth=None) -> BimKernels:
    """Nystrom kernels A, B on the grid (eta_src: WaveProfile or samples)."""
    if not grid.is_standard:
        raise ValueError("boundary integral kernels assume period 2 pi")
    M = grid.M
    h = _depth(depth)
    a = grid.nodes()
    eta, e1, e2 = _surface(eta_src, grid)
    if h is not None and any(v <= -h for v in eta):
        raise ValueError("surface touches the bottom")
    zeta = mpnum.make_complex(a, eta)
    z1 = mpnum.make_complex(np.full(M, mpfr(1), dtype=object), e1)
    z2 = mpnum.make_complex(mpnum.zeros(M), e2)

    diff = np.subtract.outer(zeta, zeta) / 2
    np.fill_diagonal(diff, mpc(1))        # placeholder, overwritten below
    C = mpnum.cot(diff)
    A = mpnum.imag(C * (z1[None, :] / 2))
    # (1/2) cot((a_i - a_j)/2) depends on i - j only
    half_cot = [mpfr(0)] + [gmpy2.cot(a[d] / 2) / 2 for d in range(1, M)]
    idx = (np.arange(M)[:, None] - np.arange(M)[None, :]) % M
    Hc = np.array(half_cot, dtype=object)[idx]
    B = mpnum.real(C * (z1[:, None] / 2)) - Hc
    ratio = z2 / (2 * z1)
    for i in range(M):
        A[i, i] = -ratio[i].imag
        B[i, i] = ratio[i].real
    if h is not None:
        img = np.subtract.outer(zeta, mpnum.conj(zeta)) + mpc(0, 2 * h)
        Ci = mpnum.cot(img / 2)
        A = A - mpnum.imag(Ci * (mpnum.conj(z1)[None, :] / 2))
        B = B - mpnum.real(Ci * (z1[:, None] / 2))
    return BimKernels(grid, depth, A, B)


def system_matrix(ker: BimKernels) -> np.ndarray:
    """(1/2) I + A/M, the discretized second-kind operator."""
    M = ker.grid.M
    S = ker.A / M
    for i in range(M):
        S[i, i] = S[i, i] + mpfr(1) / 2
    return S


def bim_neumann(ker: BimKernels, mu: np.ndarray) -> np.ndarray:
    g = ker.grid
    dmu = ddx(mu, g)
    return hilbert(dmu, g) / 2 + (ker.B @ dmu) / g.M


def bim_solve(ker: BimKernels, D, method: str = "lu", tol=None) -> BimSolution:
    """Solve for the density and return it with N = G(eta) D."""
    D = np.asarray(D, dtype=object)
    S = system_matrix(ker)
    cond = None
    its = 0
    if method == "lu":
        lu = linalg.lu_factor(S)
        mu = lu.solve(D)
        cond = linalg.cond1_estimate(S, lu)
    elif method == "gmres":
        try:
            mu, _, its = linalg.gmres(lambda v: S @ v, D, tol=tol)
        except linalg.ConvergenceError as exc:
            warnings.warn(f"GMRES did not converge ({exc}); using LU instead", RuntimeWarning)
            return bim_solve(ker, D, "lu")
    else:
        raise ValueError(f"unknown method {method!r}")
    r = S @ mu - D
    res = gmpy2.sqrt(np.dot(r, r)) / gmpy2.sqrt(np.dot(D, D)) if np.any(D != 0) else mpfr(0)
    return BimSolution(mu, bim_neumann(ker, mu), method, res, cond, its)


def bim_dno(eta_src, D, grid: Grid, depth=None, method: str = "lu") -> np.ndarray:
    """Convenience: N = G(eta) D on the grid."""
    return bim_solve(assemble_kernels(eta_src, grid, depth), D, method).N
