"""Operator expansion of the Dirichlet-Neumann operator.

For eta = f (the expansion parameter absorbed into f) the operator is
expanded as G = sum_n G_n, with G_0 = |D| (infinite depth) or
|D| tanh(h|D|), and the recursion

    G_n = A_n - sum_{s=1}^{n-1} Y_{n-s} f^{n-s} G_s / (n-s)!,

where Y_m = |D|^m, times tanh(h|D|) for odd m at finite depth.  The matrix
entries of A_n are known in closed form (in the basis e^{ikx}):

    infinite depth:  A_kj = -2 |k|^n |j| (f^n)_{k-j} / n!   if kj < 0, else 0
    depth h:         A_kj = j k^n a_nkj (f^n)_{k-j} / n!,
                     a = tanh kh - tanh jh (n even), 1 - tanh kh tanh jh (n odd)

Two drivers are provided: ``gn_recursion`` builds columns of the G_n
matrices (rows |k| < M/2, columns 0 < j < K/2), and ``gn_apply`` runs the
same recursion on a single vector to get the terms G_n D.

The large |k|^n factors make the recursion cancel catastrophically; high
precision (hundreds of bits) is the normal operating mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import mpnum
from .mpnum import PrecisionWarning
from .spectral import Grid, fft_forward, fft_inverse, wavenumbers, zero_nyquist


def _depth(depth):
    if depth is None or depth == "inf":
        return None
    return mpnum.parse_real(depth) if isinstance(depth, str) else mpfr(depth)


def _check_grid(grid: Grid):
    if not grid.is_standard:
        raise ValueError("operator expansion assumes period 2 pi; rescale the profile")
    if grid.M % 2:
        raise ValueError("use an even number of grid points")


@dataclass
class OperatorMatrix:
    """Stored block of an operator in the basis e^{ikx}.

    ``rows`` are wavenumbers (FFT order subset), ``cols`` positive column
    wavenumbers.  Entries for j < 0 follow from G_{-k,-j} = conj(G_{kj});
    column 0 is identically zero.
    """

    n: int
    M: int
    rows: np.ndarray
    cols: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        self._ri = {int(k): i for i, k in enumerate(self.rows)}
        self._ci = {int(j): i for i, j in enumerate(self.cols)}

    def entry(self, k: int, j: int):
        if j == 0:
            return mpc(0)
        if j < 0:
            return self.entry(-k, -j).conjugate()
        try:
            return self.entries[self._ri[k], self._ci[j]]
        except KeyError:
            raise KeyError(f"entry ({k}, {j}) not stored") from None

    def block(self, R: int) -> tuple[np.ndarray, np.ndarray]:
        """Entries with |k| < R and 0 < j < R as (wavenumbers k, matrix)."""
        ks = np.array([k for k in self.rows if abs(k) < R])
        ks = np.sort(ks)
        js = [j for j in self.cols if j < R]
        out = np.empty((len(ks), len(js)), dtype=object)
        for a, k in enumerate(ks):
            for b, j in enumerate(js):
                out[a, b] = self.entry(int(k), int(j))
        return ks, out

    def apply(self, modes: np.ndarray) -> np.ndarray:
        """Apply to a mode vector whose support lies in the stored columns."""
        M = self.M
        out = mpnum.zeros(M, complex_=True)
        kk = wavenumbers(M)
        for idx, j in enumerate(kk):
            c = modes[idx]
            if c == 0 or j == 0:
                continue
            if abs(j) not in self._ci:
                raise ValueError(f"input has mode {j} outside stored columns")
            if j > 0:
                col = self.entries[:, self._ci[j]]
                for r, k in enumerate(self.rows):
                    out[k % M] += col[r] * c
            else:
                col = self.entries[:, self._ci[-j]]
                for r, k in enumerate(self.rows):
                    out[(-k) % M] += col[r].conjugate() * c
        return out


@dataclass
class OrderStats:
    n: int
    log10_normA: float
    log10_normG: float
    r: object                   # symmetry defect (mp)
    noise_ratio: float
    flagged: bool


@dataclass
class CancellationReport:
    M: int
    K: int
    stats: list = field(default_factory=list)

    @property
    def n(self):
        return [s.n for s in self.stats]

    @property
    def log10_normA(self):
        return np.array([s.log10_normA for s in self.stats])

    @property
    def log10_normG(self):
        return np.array([s.log10_normG for s in self.stats])

    @property
    def r(self):
        return [s.r for s in self.stats]

    @property
    def flagged(self):
        return [s.n for s in self.stats if s.flagged]

    def rescaled(self, eps) -> tuple[np.ndarray, np.ndarray]:
        """log10 norms of A_n and G_n for the profile eps*f (factor eps^n)."""
        shift = np.array(self.n) * float(gmpy2.log10(mpfr(eps)))
        return self.log10_normA + shift, self.log10_normG + shift


@dataclass
class CSRun:
    grid: Grid
    K: int
    depth: object
    matrices: list             # OperatorMatrix for n = 0..n_max
    report: CancellationReport


# ---------------------------------------------------------------------------
# shared pieces


class _Symbols:
    """Wavenumber-dependent factors at the active precision."""

    def __init__(self, M: int, depth):
        self.M = M
        self.h = _depth(depth)
        self.k = wavenumbers(M)
        self.kmp = mpnum.ints(self.k)
        self.absk = np.abs(self.kmp)
        if self.h is None:
            self.G0 = self.absk
            self.th = None
        else:
            kh = self.kmp * self.h
            self.th = mpnum.tanh(self.absk * self.h)
            self.G0 = self.absk * self.th
            self.cosh_kh = mpnum.cosh(kh)
            self.ep = mpnum.exp(kh) / self.cosh_kh   # e^{kh}/cosh(kh)
            self.em = mpnum.exp(-kh) / self.cosh_kh
        self._Y = {0: np.full(M, mpfr(1), dtype=object)}
        self._pw = {0: np.full(M, mpfr(1), dtype=object)}

    def pow_fact(self, m: int) -> np.ndarray:
        """|k|^m / m!"""
        if m not in self._pw:
            prev = self.pow_fact(m - 1)
            self._pw[m] = prev * self.absk / m
        return self._pw[m]

    def Y(self, m: int) -> np.ndarray:
        """Y_m / m!  (Nyquist zeroed)."""
        if m not in self._Y:
            y = self.pow_fact(m)
            if self.h is not None and m % 2 == 1:
                y = y * self.th
            y = y.copy()
            y[self.M // 2] = mpfr(0)
            self._Y[m] = y
        return self._Y[m]


def _powers(fvals: np.ndarray, n_max: int) -> list:
    out = [None, np.asarray(fvals, dtype=object)]
    for _ in range(2, n_max + 1):
        out.append(out[-1] * out[1])
    return out


def _a_column(n: int, j: int, fhat: np.ndarray, sym: _Symbols) -> np.ndarray:
    """Column j of A_n (rows in FFT order, |k - j| < M/2)."""
    M = sym.M
    k = sym.k
    d = k - j
    valid = (np.abs(d) < M // 2) & (k != -(M // 2))
    out = mpnum.zeros(M, complex_=True)
    idx = np.nonzero(valid)[0]
    if sym.h is None:
        idx = idx[k[idx] < 0]
        coef = -2 * j * sym.pow_fact(n)[idx]
    else:
        h = sym.h
        dh = mpnum.ints(d[idx]) * h
        num = mpnum.sinh(dh) if n % 2 == 0 else mpnum.cosh(dh)
        a = num / (sym.cosh_kh[idx] * gmpy2.cosh(j * h))
        kn = mpnum.ints(k[idx]) ** n
        coef = j * kn * a / math.factorial(n)
    out[idx] = coef * fhat[d[idx] % M]
    return out


def an_matrix(fvals: np.ndarray, n: int, grid: Grid, K: int, depth=None) -> OperatorMatrix:
    """Columns 0 < j < K/2 of A_n over all rows |k| < M/2."""
    _check_grid(grid)
    if n < 1:
        raise ValueError("A_n is defined for n >= 1")
    sym = _Symbols(grid.M, depth)
    fn = _powers(fvals, n)[n]
    fhat = fft_forward(fn)
    ratio = _tail(fhat)
    if ratio > mpfr(2) ** (8 - mpnum.current_bits()):
        warnings.warn(f"(f^{n}) is not resolved on M={grid.M}: tail/peak = {float(ratio):.1e}",
                      PrecisionWarning)
    cols = np.arange(1, K // 2)
    ent = np.stack([_a_column(n, int(j), fhat, sym) for j in cols], axis=1)
    return OperatorMatrix(n, grid.M, sym.k.copy(), cols, ent)


# ---------------------------------------------------------------------------
# diagnostics


def _tail(fhat: np.ndarray):
    M = len(fhat)
    peak = mpnum.max_abs(fhat)
    if peak == 0:
        return mpfr(0)
    k = np.abs(wavenumbers(M))
    return max(abs(fhat[i]) for i in np.nonzero(k >= M // 2 - 1)[0]) / peak


def tail_ratio(fvals: np.ndarray, n: int) -> float:
    """|(f^n)^|_k| near |k| = M/2 relative to its peak; small means f^n is resolved."""
    return float(_tail(fft_forward(_powers(fvals, max(n, 1))[max(n, 1)])))


def _log10_normA(n: int, fhat: np.ndarray, sym: _Symbols) -> float:
    """log10 ||A_n||_F over k in (-M/2, M/2), 0 < j < M/2, |k-j| < M/2, times sqrt 2."""
    M = sym.M
    half = M // 2
    lf = mpnum.log10_abs(fhat) * np.log(10)         # natural log of |(f^n)_d|
    lognf = math.lgamma(n + 1)
    if sym.h is None:
        # group by d = j - k > 0 (k < 0 < j): weight sum_j (d-j)^{2n} j^2
        terms = []
        j = np.arange(1, half, dtype=float)
        for d in range(2, half):
            jj = j[: d - 1]
            w = 2 * n * np.log(d - jj) + 2 * np.log(jj)
            lw = np.logaddexp.reduce(w)
            terms.append(lw + 2 * lf[(-d) % M])
        total = np.logaddexp.reduce(terms) if terms else -np.inf
        total += np.log(4.0) - 2 * lognf + np.log(2.0)
    else:
        h = float(sym.h)
        k = np.arange(-half + 1, half, dtype=float)[:, None]
        j = np.arange(1, half, dtype=float)[None, :]
        d = k - j
        mask = np.abs(d) < half

        def lcosh(x):
            ax = np.abs(x)
            return ax + np.log1p(np.exp(-2 * ax)) - np.log(2.0)

        with np.errstate(divide="ignore"):
            ad = np.abs(d) * h
            if n % 2 == 0:
                lnum = ad + np.log(-np.expm1(-2 * ad)) - np.log(2.0)
            else:
                lnum = lcosh(d * h)
            la = lnum - lcosh(k * h) - lcosh(j * h)
            lk = np.where(k == 0, -np.inf if n > 0 else 0.0, n * np.log(np.abs(k) + (k == 0)))
            w = 2 * (np.log(j) + lk - lognf + la) + 2 * lf[(d.astype(int)) % M]
        w = np.where(mask, w, -np.inf)
        total = np.logaddexp.reduce(w.ravel()) + np.log(2.0)
    return float(total / 2 / np.log(10))


def _row_sets(M, K):
    k = wavenumbers(M)
    return np.nonzero(np.abs(k) < K // 2)[0], np.nonzero(np.abs(k) >= int(0.45 * M))[0]


def _stats(n, blk, outer, cols, fhat, sym, K, want_A=True):
    """Diagnostics from the resolved rows (|k| < K/2) and the outer rows."""
    M = sym.M
    half = K // 2
    rows_in, _ = _row_sets(M, K)
    rpos = {int(sym.k[i]): a for a, i in enumerate(rows_in)}
    jcols = [i for i, j in enumerate(cols) if j < half]
    sub = blk[:, jcols]
    sq = np.sum(np.abs(sub) ** 2) if sub.size else mpfr(0)
    normG = gmpy2.sqrt(2 * sq)
    # symmetry defect |G_kj - conj(G_jk)|, with G_{j,k} = conj(G_{-j,-k})
    pos = {int(j): i for i, j in enumerate(cols)}
    rmax = mpfr(0)
    for b in jcols:
        j = int(cols[b])
        for k_ in range(-half + 1, half):
            g = blk[rpos[k_], b]
            if k_ > 0:
                other = blk[rpos[j], pos[k_]].conjugate() if k_ in pos else mpc(0)
            elif k_ < 0:
                other = blk[rpos[-j], pos[-k_]] if -k_ in pos else mpc(0)
            else:
                other = mpc(0)
            v = abs(g - other)
            if v > rmax:
                rmax = v
    r = rmax / normG if normG != 0 else mpfr(0)
    # noise: median of the outer 10% of rows against the resolved block; exact
    # zeros (parity and band structure) are left out of both medians
    lo = mpnum.log10_abs(outer.ravel()).astype(float)
    li = mpnum.log10_abs(sub.ravel()).astype(float) if sub.size else np.array([-np.inf])
    lo, li = lo[np.isfinite(lo)], li[np.isfinite(li)]
    if lo.size == 0:
        ratio = 0.0
    elif li.size == 0:
        ratio = np.inf
    else:
        ratio = float(10 ** min(np.median(lo) - np.median(li), 300))
    lA = _log10_normA(n, fhat, sym) if (want_A and n >= 1) else -np.inf
    lG = float(gmpy2.log10(normG)) if normG != 0 else -np.inf
    # outer rows also grow for genuine reasons, so a flag needs the symmetry
    # defect to confirm that a third of the working digits are gone
    lost = r > mpfr(2) ** (-(gmpy2.get_context().precision // 3))
    return OrderStats(n, lA, lG, r, ratio, bool(ratio > 1 and lost))


def _filter_mask(n: int, cols: np.ndarray, M: int) -> np.ndarray:
    """Entries forced to vanish for a profile with bandwidth 1."""
    k = wavenumbers(M)[:, None]
    j = np.asarray(cols)[None, :]
    return (k * j == 0) | (np.abs(k) > n - np.abs(j)) | ((k - j - n) % 2 != 0)


# ---------------------------------------------------------------------------
# column recursion


def gn_recursion(fvals: np.ndarray, n_max: int, grid: Grid, K: int | None = None,
                 depth=None, filter: bool = False, store_rows: int | None = None,
                 batch: int | None = None, normA: bool = True,
                 cols=None, warn: bool = True, progress=None) -> CSRun:
    """Columns of G_0..G_{n_max} for 0 < j < K/2 with rows |k| < M/2.

    ``filter`` zeroes the entries that vanish identically when f has
    bandwidth 1 (e.g. f = cos(x - x0)).  ``store_rows`` keeps only rows
    |k| < store_rows in the returned matrices; diagnostics always see full
    columns.  ``batch`` limits how many columns are processed together
    (memory).  ``cols`` overrides the column set.
    """
    _check_grid(grid)
    M = grid.M
    K = M if K is None else K
    if K > M or K % 2:
        raise ValueError("need even K <= M")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    fvals = np.asarray(fvals, dtype=object)
    if filter:
        fh = fft_forward(fvals)
        kk = wavenumbers(M)
        tiny = mpnum.max_abs(fh) * mpfr(2) ** (8 - mpnum.current_bits())
        if any(abs(c) > tiny for c, k_ in zip(fh, kk) if abs(k_) > 1):
            raise ValueError("filtering requires a profile of bandwidth 1")
    sym = _Symbols(M, depth)
    cols = np.arange(1, K // 2) if cols is None else np.asarray(sorted(cols))
    fpow = _powers(fvals, max(n_max, 1))
    fhat = [None] + [fft_forward(fpow[m]) for m in range(1, n_max + 1)]
    batch = len(cols) if batch is None else batch
    rows_keep = (np.arange(M) if store_rows is None
                 else np.nonzero(np.abs(sym.k) < store_rows)[0])

    rows_in, rows_out = _row_sets(M, K)

    # G_0
    G0full = mpnum.zeros((M, len(cols)), complex_=True)
    for b, j in enumerate(cols):
        G0full[j % M, b] = mpc(sym.G0[j % M])
    report = CancellationReport(M, K)
    report.stats.append(_stats(0, G0full[rows_in], G0full[rows_out], cols, None, sym, K,
                               want_A=False))
    keep = {n: [] for n in range(1, n_max + 1)}
    blks = {n: [] for n in range(1, n_max + 1)}
    outs = {n: [] for n in range(1, n_max + 1)}
    for bi, b0 in enumerate(range(0, len(cols), batch)):
        bc = cols[b0:b0 + batch]
        hist = [None]  # real-space G_s columns, s >= 1
        for n in range(1, n_max + 1):
            acc = np.stack([_a_column(n, int(j), fhat[n], sym) for j in bc], axis=1)
            if n > 1:
                w = len(bc)
                for s0 in range(1, n, 8):
                    ss = range(s0, min(s0 + 8, n))
                    prods = np.concatenate([fpow[n - s][:, None] * hist[s] for s in ss], axis=1)
                    P = fft_forward(prods)
                    for i, s in enumerate(ss):
                        acc = acc - sym.Y(n - s)[:, None] * P[:, i * w:(i + 1) * w]
            acc = zero_nyquist(acc)
            if filter:
                acc[_filter_mask(n, bc, M)] = mpc(0)
            hist.append(fft_inverse(acc))
            keep[n].append(acc[rows_keep])
            blks[n].append(acc[rows_in])
            outs[n].append(acc[rows_out])
            if progress:
                progress(n, bi)
        del hist
    stored = [G0full[rows_keep]]
    for n in range(1, n_max + 1):
        blk = np.concatenate(blks.pop(n), axis=1)
        out = np.concatenate(outs.pop(n), axis=1)
        report.stats.append(_stats(n, blk, out, cols, fhat[n], sym, K, want_A=normA))
        stored.append(np.concatenate(keep.pop(n), axis=1))
    if warn and report.flagged:
        warnings.warn(f"propagated noise dominates the outer rows from order "
                      f"{report.flagged[0]}; increase the precision or the grid",
                      PrecisionWarning)
    rows = sym.k[rows_keep]
    mats = [OperatorMatrix(n, M, rows.copy(), cols.copy(), stored[n]) for n in range(n_max + 1)]
    return CSRun(grid, K, depth, mats, report)


def cancellation_report(run: CSRun) -> CancellationReport:
    return run.report


def gn_column(fvals, n_max: int, grid: Grid, j: int, depth=None):
    """Full columns G_n e^{ijx} for n = 0..n_max (mode arrays)."""
    run = gn_recursion(fvals, n_max, grid, K=grid.M, depth=depth, cols=[j],
                       normA=False, warn=False)
    return [m.entries[:, 0] for m in run.matrices]


# ---------------------------------------------------------------------------
# vector recursion


def _pad(modes: np.ndarray, P: int) -> np.ndarray:
    """Embed M modes (FFT order) in a grid P times finer."""
    M = modes.shape[0]
    if P == 1:
        return modes
    out = mpnum.zeros((P * M,) + modes.shape[1:], complex_=True)
    h = M // 2
    out[:h] = modes[:h]
    out[P * M - h + 1:] = modes[h + 1:]
    return out


def _trunc(modes: np.ndarray, M: int) -> np.ndarray:
    """Modes |k| < M/2 of a finer mode array, Nyquist slot zero."""
    if modes.shape[0] == M:
        return zero_nyquist(modes)
    h = M // 2
    out = mpnum.zeros((M,) + modes.shape[1:], complex_=True)
    out[:h] = modes[:h]
    out[h + 1:] = modes[modes.shape[0] - h + 1:]
    return out


def _an_apply(n: int, fn: np.ndarray, Dhat: np.ndarray, sym: _Symbols, P: int = 1) -> np.ndarray:
    """A_n D via FFT products, using separable cancellation-free factors.

    ``fn`` lives on the grid P times finer than ``Dhat``.
    """
    M = sym.M

    def conv(v):
        return _trunc(fft_forward(fn * fft_inverse(_pad(v, P))), M)

    k = sym.kmp
    if sym.h is None:
        pos = np.array([kk > 0 for kk in sym.k])
        neg = np.array([kk < 0 for kk in sym.k])
        terms = [(neg, pos), (pos, neg)]
        out = mpnum.zeros(M, complex_=True)
        base = -2 * sym.pow_fact(n)
        for rmask, cmask in terms:
            src = np.where(cmask, sym.absk * Dhat, mpc(0))
            out = out + np.where(rmask, base * conv(src), mpc(0))
        return zero_nyquist(out)
    kn = k ** n / math.factorial(n)
    # column factors j e^{-jh}/cosh(jh) and j e^{jh}/cosh(jh)
    r1 = kn * sym.ep / 2
    r2 = kn * sym.em / 2
    if n % 2 == 0:
        r2 = -r2
    p1 = conv(k * sym.em * Dhat)
    p2 = conv(k * sym.ep * Dhat)
    return zero_nyquist(r1 * p1 + r2 * p2)


def gn_apply(fvals: np.ndarray, Dvals: np.ndarray, n_max: int, grid: Grid,
             depth=None, dealias: bool = True) -> list:
    """Terms G_n D, n = 0..n_max, as mode arrays.

    With ``dealias`` the products f^m G_s D are formed on a grid twice as
    fine and truncated back to |k| < M/2, so that the large high-wavenumber
    content of the intermediate terms cannot wrap around onto low modes.
    """
    _check_grid(grid)
    M = grid.M
    P = 2 if dealias else 1
    sym = _Symbols(M, depth)
    fhat = fft_forward(np.asarray(fvals, dtype=object))
    fpow = _powers(fft_inverse(_pad(zero_nyquist(fhat), P)).copy(), max(n_max, 1))
    fpow = [None] + [mpnum.real(v) for v in fpow[1:]]
    Dhat = zero_nyquist(fft_forward(np.asarray(Dvals, dtype=object)))
    terms = [zero_nyquist(sym.G0 * Dhat)]
    hist = [None]
    for n in range(1, n_max + 1):
        acc = _an_apply(n, fpow[n], Dhat, sym, P)
        if n > 1:
            prods = np.stack([fpow[n - s] * hist[s] for s in range(1, n)], axis=1)
            Pm = _trunc(fft_forward(prods), M)
            for s in range(1, n):
                acc = acc - sym.Y(n - s) * Pm[:, s - 1]
        acc = zero_nyquist(acc)
        terms.append(acc)
        hist.append(fft_inverse(_pad(acc, P)))
    return terms


@dataclass
class PartialSumErrors:
    rms: list          # RMS error after n terms, n = 0..n_max
    cutoff: int


def apply_partial_sum(terms, Dvals, Nvals, grid: Grid, mode_cutoff: int | None = None,
                      ) -> PartialSumErrors:
    """RMS errors of N - sum_{m<=n} G_m D, n = 0..len(terms)-1.

    Only modes |k| < mode_cutoff receive the corrections n >= 1; the rest
    keep the G_0 residual.  ``terms`` are mode arrays (see ``gn_apply``) or
    OperatorMatrix objects applied to D.
    """
    M = grid.M
    k = wavenumbers(M)
    cut = M // 2 if mode_cutoff is None else mode_cutoff
    inside = np.abs(k) < cut
    Dhat = zero_nyquist(fft_forward(np.asarray(Dvals, dtype=object)))
    Nhat = fft_forward(np.asarray(Nvals, dtype=object))
    tm = [t.apply(Dhat) if isinstance(t, OperatorMatrix) else t for t in terms]
    E = Nhat - tm[0]
    out = [gmpy2.sqrt(np.sum(np.abs(E) ** 2))]
    for t in tm[1:]:
        E = E - np.where(inside, t, mpc(0))
        out.append(gmpy2.sqrt(np.sum(np.abs(E) ** 2)))
    return PartialSumErrors(out, cut)


def dno_apply(fvals, Dvals, grid: Grid, n_max: int, depth=None, mode_cutoff=None):
    """Partial sum sum_{n<=n_max} G_n D on the grid."""
    terms = gn_apply(fvals, Dvals, n_max, grid, depth)
    k = wavenumbers(grid.M)
    cut = grid.M // 2 if mode_cutoff is None else mode_cutoff
    inside = np.abs(k) < cut
    acc = terms[0]
    for t in terms[1:]:
        acc = acc + np.where(inside, t, mpc(0))
    return mpnum.real(fft_inverse(acc))
