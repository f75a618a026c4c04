"""Dense linear algebra on multiprecision object arrays.

Matrices are 2-D numpy object arrays of mpfr or mpc.  Everything here runs
at the precision of the active context; inner products in the SVD use a few
guard bits so that the orthogonality test is not swamped by summation error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import mpnum

_GUARD = 12


class LinalgError(ArithmeticError):
    pass


class SingularMatrixError(LinalgError):
    pass


class RankWarning(UserWarning):
    pass


class ConvergenceError(LinalgError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


def _is_complex(A) -> bool:
    A = np.asarray(A, dtype=object)
    return any(isinstance(v, mpc) for v in A.flat)


def _guarded():
    return gmpy2.context(gmpy2.get_context(),
                         precision=mpnum.current_bits() + _GUARD)


def _cdot(a, b):
    """a^H b (plain dot for real arrays)."""
    if len(a) and isinstance(a[0], mpc):
        a = mpnum.conj(a)
    return np.dot(a, b)


def matmul(A, B):
    A = np.asarray(A, dtype=object)
    B = np.asarray(B, dtype=object)
    if A.shape[-1] != B.shape[0]:
        raise ValueError(f"shape mismatch {A.shape} @ {B.shape}")
    return A @ B


def hermitian(A):
    A = np.asarray(A, dtype=object)
    return mpnum.conj(A.T) if _is_complex(A) else A.T


# ---------------------------------------------------------------------------
# LU with partial pivoting


@dataclass
class LU:
    lu: np.ndarray
    perm: np.ndarray

    def solve(self, b):
        """Solve A x = b (b may have several columns)."""
        b = np.asarray(b, dtype=object)
        n = self.lu.shape[0]
        if b.shape[0] != n:
            raise ValueError("right-hand side has wrong length")
        x = b[self.perm].copy()
        LUm = self.lu
        for i in range(1, n):
            x[i] = x[i] - np.dot(LUm[i, :i], x[:i])
        for i in range(n - 1, -1, -1):
            if i < n - 1:
                x[i] = x[i] - np.dot(LUm[i, i + 1:], x[i + 1:])
            x[i] = x[i] / LUm[i, i]
        return x

    def solve_adjoint(self, b):
        """Solve A^H x = b."""
        b = np.asarray(b, dtype=object)
        n = self.lu.shape[0]
        LH = hermitian(self.lu)
        y = b.copy()
        # U^H z = b
        for i in range(n):
            if i:
                y[i] = y[i] - np.dot(LH[i, :i], y[:i])
            y[i] = y[i] / LH[i, i]
        # L^H w = z
        for i in range(n - 2, -1, -1):
            y[i] = y[i] - np.dot(LH[i, i + 1:], y[i + 1:])
        x = y.copy()
        x[self.perm] = y
        return x


def lu_factor(A) -> LU:
    a = np.array(A, dtype=object, copy=True)
    n, m = a.shape
    if n != m:
        raise ValueError("LU needs a square matrix")
    perm = np.arange(n)
    for i in range(n):
        col = np.abs(a[i:, i])
        p = i + int(np.argmax(col))
        if col[p - i] == 0:
            raise SingularMatrixError(f"zero pivot at column {i}")
        if p != i:
            a[[i, p]] = a[[p, i]]
            perm[[i, p]] = perm[[p, i]]
        if i + 1 < n:
            a[i + 1:, i] = a[i + 1:, i] / a[i, i]
            a[i + 1:, i + 1:] = a[i + 1:, i + 1:] - np.multiply.outer(a[i + 1:, i], a[i, i + 1:])
    return LU(a, perm)


def lu_solve(A, b):
    return lu_factor(A).solve(b)


def norm1(A):
    return max(np.sum(np.abs(np.asarray(A, dtype=object)), axis=0))


def cond1_estimate(A, lu: LU | None = None, iters: int = 5):
    """Hager/Higham estimate of ||A||_1 ||A^{-1}||_1."""
    A = np.asarray(A, dtype=object)
    lu = lu or lu_factor(A)
    n = A.shape[0]
    x = np.full(n, mpfr(1) / n, dtype=object)
    est = mpfr(0)
    jlast = -1
    for _ in range(iters):
        y = lu.solve(x)
        est_new = np.sum(np.abs(y))
        xi = np.array([mpfr(1) if (v.real if isinstance(v, mpc) else v) >= 0 else mpfr(-1)
                       for v in y], dtype=object)
        z = lu.solve_adjoint(xi)
        az = np.abs(z)
        j = int(np.argmax(az))
        if est_new <= est or j == jlast:
            est = max(est, est_new)
            break
        est, jlast = est_new, j
        if az[j] <= np.dot(mpnum.real(z) if _is_complex(z) else z, x):
            break
        x = mpnum.zeros(n)
        x[j] = mpfr(1)
    return norm1(A) * est


# ---------------------------------------------------------------------------
# Householder QR


@dataclass
class QR:
    Q: np.ndarray
    R: np.ndarray


def qr(A) -> QR:
    """Thin Householder QR without pivoting; diag(R) is real and >= 0."""
    a = np.array(A, dtype=object, copy=True)
    m, n = a.shape
    if m < n:
        raise ValueError("thin QR needs rows >= cols")
    cplx = _is_complex(a)
    if cplx:
        a = mpnum.to_complex(a)
    colnorm = [gmpy2.sqrt(np.sum(np.abs(a[:, k]) ** 2)) for k in range(n)]
    vs = []
    for k in range(n):
        x = a[k:, k]
        nx = gmpy2.sqrt(np.sum(np.abs(x) ** 2)) if cplx else gmpy2.sqrt(np.dot(x, x))
        if nx == 0:
            vs.append(None)
            continue
        x0 = x[0]
        ax0 = abs(x0)
        ph = x0 / ax0 if ax0 != 0 else (mpc(1) if cplx else mpfr(1))
        alpha = -ph * nx
        v = x.copy()
        v[0] = v[0] - alpha
        vn = gmpy2.sqrt(np.sum(np.abs(v) ** 2)) if cplx else gmpy2.sqrt(np.dot(v, v))
        v = v / vn
        vs.append(v)
        sub = a[k:, k:]
        w = _cdot(v, sub) if cplx else np.dot(v, sub)
        a[k:, k:] = sub - 2 * np.multiply.outer(v, w)
    R = np.triu(a[:n, :n])
    R[np.tril_indices(n, -1)] = mpc(0) if cplx else mpfr(0)
    Q = mpnum.zeros((m, n), complex_=cplx)
    for i in range(n):
        Q[i, i] = mpc(1) if cplx else mpfr(1)
    for k in range(n - 1, -1, -1):
        v = vs[k]
        if v is None:
            continue
        sub = Q[k:, :]
        w = _cdot(v, sub) if cplx else np.dot(v, sub)
        Q[k:, :] = sub - 2 * np.multiply.outer(v, w)
    # make diag(R) real, nonnegative
    for k in range(n):
        r = R[k, k]
        ar = abs(r)
        if ar == 0:
            continue
        ph = r / ar
        if ph != 1:
            R[k, k:] = R[k, k:] * (ph.conjugate() if cplx else ph)
            Q[:, k] = Q[:, k] * ph
        R[k, k] = ar if not cplx else mpc(ar)
    small = mpfr(2) ** (8 - mpnum.current_bits())
    weak = [k for k in range(n) if abs(R[k, k]) <= small * colnorm[k]]
    if weak:
        warnings.warn(f"QR: columns {weak[:8]}{'...' if len(weak) > 8 else ''} are numerically "
                      "dependent on earlier ones", RankWarning)
    return QR(Q, R)


def solve_triangular(R, b, trans: bool = False):
    """Solve R x = b (or R^H x = b) for upper-triangular R."""
    R = np.asarray(R, dtype=object)
    x = np.array(b, dtype=object, copy=True)
    n = R.shape[0]
    if any(R[i, i] == 0 for i in range(n)):
        raise SingularMatrixError("zero on the diagonal of R")
    if not trans:
        for i in range(n - 1, -1, -1):
            x[i] = (x[i] - np.dot(R[i, i + 1:], x[i + 1:])) / R[i, i]
    else:
        Rh = hermitian(R)
        for i in range(n):
            x[i] = (x[i] - np.dot(Rh[i, :i], x[:i])) / Rh[i, i]
    return x


# ---------------------------------------------------------------------------
# one-sided Jacobi SVD


@dataclass
class SVD:
    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    sweeps: int = 0

    def cond(self):
        return self.s[0] / self.s[-1] if self.s[-1] != 0 else mpfr("inf")


def svd(A, max_sweeps: int = 30, tol=None, precondition: bool = True) -> SVD:
    """Thin SVD A = U diag(s) V^H by one-sided (Hestenes) Jacobi.

    With ``precondition`` the Jacobi iteration runs on R^H from a Householder
    QR of A, which needs fewer and cheaper sweeps.  Columns are pivoted by
    norm at each step (de Rijk), so ``s`` comes out in decreasing order.
    Convergence: every pair cosine below ``tol`` (default 2**(4 - bits)).
    The largest-magnitude entry of each column of U is made real and
    positive.
    """
    A = np.asarray(A, dtype=object)
    m, n = A.shape
    if m < n:
        t = svd(hermitian(A), max_sweeps, tol, precondition)
        return _fix_phase(SVD(t.V, t.s, t.U, t.sweeps))
    if precondition:
        f = qr(A)
        t = _jacobi(hermitian(f.R), max_sweeps, tol)
        return _fix_phase(SVD(f.Q @ t.V, t.s, t.U, t.sweeps))
    return _fix_phase(_jacobi(A, max_sweeps, tol))


def _fix_phase(f: SVD) -> SVD:
    U, V = f.U, f.V
    cplx = _is_complex(U)
    for i in range(U.shape[1]):
        col = U[:, i]
        j = int(np.argmax(np.abs(col)))
        if col[j] == 0:
            continue
        ph = col[j] / abs(col[j])
        if ph != 1:
            phc = ph.conjugate() if cplx else ph
            U[:, i] = col * phc
            V[:, i] = V[:, i] * phc
        if cplx:
            U[j, i] = mpc(abs(col[j]))     # exactly real, free of rounding residue
    return f


def _jacobi(A, max_sweeps, tol) -> SVD:
    m, n = A.shape
    cplx = _is_complex(A)
    bits = mpnum.current_bits()
    tol = mpfr(2) ** (4 - bits) if tol is None else mpfr(tol)
    G = np.array(A.T, dtype=object, copy=True)  # row p = column p of A
    if cplx:
        G = mpnum.to_complex(G)
    one, zero = (mpc(1), mpc(0)) if cplx else (mpfr(1), mpfr(0))
    V = np.full((n, n), zero, dtype=object)
    for i in range(n):
        V[i, i] = one

    def sqnorm(v):
        with _guarded():
            s = np.sum(np.abs(v) ** 2) if cplx else np.dot(v, v)
        return +s

    sweeps = 0
    worst = None
    for sweeps in range(1, max_sweeps + 1):
        nrm = [sqnorm(G[p]) for p in range(n)]
        rotated = False
        worst = mpfr(0)
        for p in range(n - 1):
            # bring the largest remaining column forward
            jmax = p + int(np.argmax(nrm[p:]))
            if jmax != p and nrm[jmax] > nrm[p]:
                G[[p, jmax]] = G[[jmax, p]]
                V[[p, jmax]] = V[[jmax, p]]
                nrm[p], nrm[jmax] = nrm[jmax], nrm[p]
            a = G[p]
            for q in range(p + 1, n):
                al, be = nrm[p], nrm[q]
                if al == 0 or be == 0:
                    continue
                b = G[q]
                with _guarded():
                    g = _cdot(a, b)
                g = +g
                ag = abs(g)
                c_ = ag / gmpy2.sqrt(al * be)
                if c_ > worst:
                    worst = c_
                if c_ <= tol:
                    continue
                rotated = True
                if cplx:
                    ph = (g / ag).conjugate()
                    b = b * ph
                    vq = V[q] * ph
                else:
                    vq = V[q]
                    if g < 0:
                        b, vq, ag = -b, -vq, -g
                zeta = (be - al) / (2 * ag)
                t = 1 / (abs(zeta) + gmpy2.sqrt(1 + zeta * zeta))
                if zeta < 0:
                    t = -t
                cs = 1 / gmpy2.sqrt(1 + t * t)
                sn = cs * t
                a_new = cs * a - sn * b
                G[q] = sn * a + cs * b
                G[p] = a = a_new
                vp = V[p].copy()
                V[p] = cs * vp - sn * vq
                V[q] = sn * vp + cs * vq
                na, nb = al - t * ag, be + t * ag
                # recompute norms that may have lost accuracy by cancellation
                nrm[p] = na if na > al / 4 else sqnorm(a)
                nrm[q] = nb if nb > be / 4 else sqnorm(G[q])
        if not rotated:
            break
    else:
        raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps "
                               f"(largest cosine {float(worst):.3e})", residual=worst)
    s = np.array([gmpy2.sqrt(sqnorm(G[p])) for p in range(n)], dtype=object)
    order = sorted(range(n), key=lambda i: s[i], reverse=True)
    s = s[order]
    G = G[order]
    V = V[order]
    U = np.empty((m, n), dtype=object)
    for i in range(n):
        U[:, i] = G[i] / s[i] if s[i] != 0 else G[i] * 0
    return SVD(U, s, np.array(V.T, dtype=object), sweeps)


def pinv_apply(f: SVD, cutoff: int, y, adjoint: bool = False):
    """Apply the truncated pseudo-inverse keeping the leading ``cutoff`` singular values.

    ``adjoint=False``: V S^+ U^H y  (pseudo-inverse of A).
    ``adjoint=True``:  U S^+ V^H y  (pseudo-inverse of A^H).
    ``cutoff=0`` gives the zero vector.
    """
    r = len(f.s)
    if cutoff < 0 or cutoff > r:
        raise ValueError(f"cutoff {cutoff} outside 0..{r}")
    left, right = (f.U, f.V) if adjoint else (f.V, f.U)
    y = np.asarray(y, dtype=object)
    if cutoff == 0:
        return mpnum.zeros(left.shape[0], _is_complex(left) or _is_complex(y))
    c = hermitian(right[:, :cutoff]) @ y
    c = c / f.s[:cutoff]
    return left[:, :cutoff] @ c


# ---------------------------------------------------------------------------
# restarted GMRES


def gmres(matvec, b, tol=None, restart: int = 40, maxiter: int = 50, x0=None):
    """Restarted GMRES; returns (x, relative residual, iterations)."""
    b = np.asarray(b, dtype=object)
    n = len(b)
    cplx = _is_complex(b)
    tol = mpfr(2) ** (10 - mpnum.current_bits()) if tol is None else mpfr(tol)
    x = mpnum.zeros(n, cplx) if x0 is None else np.array(x0, dtype=object)
    bnorm = gmpy2.sqrt(np.sum(np.abs(b) ** 2))
    if bnorm == 0:
        return x, mpfr(0), 0
    its = 0
    rel = mpfr(1)
    for _ in range(maxiter):
        r = b - matvec(x)
        beta = gmpy2.sqrt(np.sum(np.abs(r) ** 2))
        rel = beta / bnorm
        if rel <= tol:
            break
        Q = [r / beta]
        H = np.full((restart + 1, restart), mpfr(0), dtype=object)
        cs, sn = [], []
        e = [beta] + [mpfr(0)] * restart
        kdone = 0
        for k in range(restart):
            w = matvec(Q[k])
            for i in range(k + 1):
                H[i, k] = _cdot(Q[i], w)
                w = w - H[i, k] * Q[i]
            H[k + 1, k] = gmpy2.sqrt(np.sum(np.abs(w) ** 2))
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -_conj(sn[i]) * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            hk, hk1 = H[k, k], H[k + 1, k]
            den = gmpy2.sqrt(abs(hk) ** 2 + abs(hk1) ** 2)
            c_ = abs(hk) / den
            s_ = (hk / abs(hk)) * _conj(hk1) / den if abs(hk) != 0 else mpfr(1)
            cs.append(c_)
            sn.append(s_)
            H[k, k] = c_ * hk + s_ * hk1
            H[k + 1, k] = mpfr(0)
            e[k + 1] = -_conj(s_) * e[k]
            e[k] = c_ * e[k]
            its += 1
            kdone = k + 1
            if abs(e[k + 1]) / bnorm <= tol or hk1 == 0:
                break
            Q.append(w / hk1)
        y = [mpfr(0)] * kdone
        for i in range(kdone - 1, -1, -1):
            acc = e[i]
            for j in range(i + 1, kdone):
                acc = acc - H[i, j] * y[j]
            y[i] = acc / H[i, i]
        for i in range(kdone):
            x = x + y[i] * Q[i]
    r = b - matvec(x)
    rel = gmpy2.sqrt(np.sum(np.abs(r) ** 2)) / bnorm
    if rel > tol:
        raise ConvergenceError(f"GMRES stalled at relative residual {float(rel):.3e}", rel)
    return x, rel, its


def _conj(z):
    return z.conjugate() if isinstance(z, mpc) else z
