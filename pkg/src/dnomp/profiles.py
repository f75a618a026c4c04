"""Surface profiles, exact Dirichlet/Neumann pairs and profile files.

A profile is a real 2 pi-periodic elevation eta(x) = sum_k c_k e^{ikx}
stored through its coefficients for k >= 0.  Coefficients are produced at
the active precision, so closed-form families are as accurate as the
context allows.  The fluid occupies -h < y < eta(x) (h = None means
infinite depth).
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from . import mpnum
from .spectral import Grid, synthesize


class ProfileError(ValueError):
    pass


def _as_depth(depth):
    if depth is None or depth == "inf":
        return None
    d = mpnum.parse_real(depth) if isinstance(depth, str) else mpfr(depth)
    if d <= 0:
        raise ProfileError(f"depth must be positive, got {depth}")
    return d


@dataclass
class WaveProfile:
    """Fourier-represented free surface.

    ``source`` is either a dict ``k -> value`` (numbers, mp scalars or
    (re, im) decimal-string pairs) or a callable returning such a dict at
    the active precision.
    """

    source: dict | Callable[[], dict]
    depth: object = None
    name: str = "profile"
    _cache: dict = field(default_factory=dict, repr=False)

    def coefficients(self) -> dict[int, mpc]:
        bits = mpnum.current_bits()
        c = self._cache.get(bits)
        if c is None:
            raw = self.source() if callable(self.source) else self.source
            c = {}
            for k, v in sorted(raw.items()):
                if k < 0:
                    raise ProfileError("store only k >= 0")
                if isinstance(v, tuple):
                    v = mpc(mpnum.parse_real(v[0]), mpnum.parse_real(v[1]))
                c[int(k)] = mpc(v)
            if 0 in c and c[0].imag != 0:
                raise ProfileError("mean elevation must be real")
            self._cache[bits] = c
        return c

    @property
    def h(self):
        """Depth as an mp number (None for infinite depth)."""
        return _as_depth(self.depth)

    def bandwidth(self) -> int:
        c = self.coefficients()
        nz = [k for k, v in c.items() if v != 0]
        return max(nz) if nz else 0

    def sample(self, grid: Grid, deriv: int = 0) -> np.ndarray:
        return synthesize(self.coefficients(), grid, deriv)

    def evaluate(self, x, deriv: int = 0):
        """Direct series evaluation at arbitrary points."""
        x = np.atleast_1d(np.asarray(x, dtype=object))
        out = mpnum.zeros(x.shape)
        for k, c in self.coefficients().items():
            if k == 0:
                if deriv == 0:
                    out = out + c.real
                continue
            # c e^{ikx} + conj: 2 Re(c (ik)^d e^{ikx})
            z = c * mpc(0, k) ** deriv if deriv else c
            out = out + 2 * mpnum.real(z * mpnum.cis(k * x))
        return out

    def eta_max(self, oversample: int = 4):
        """Maximum elevation: dense-grid search refined by Newton on eta'."""
        bits = mpnum.current_bits()
        key = ("max", bits)
        if key in self._cache:
            return self._cache[key]
        bw = max(self.bandwidth(), 1)
        M = 1
        while M < oversample * max(2 * bw + 2, 64):
            M *= 2
        g = Grid(M)
        vals = self.sample(g)
        j = int(np.argmax(vals))
        x = g.nodes()[j]
        best = vals[j]
        tol = mpfr(2) ** (8 - bits)
        for _ in range(80):
            d1 = self.evaluate([x], 1)[0]
            d2 = self.evaluate([x], 2)[0]
            if d2 >= 0:
                break
            step = d1 / d2
            x = x - step
            if abs(step) <= tol:
                break
        val = self.evaluate([x])[0]
        emax = max(val, best)
        self._cache[key] = emax
        return emax

    def with_depth(self, depth) -> "WaveProfile":
        return WaveProfile(self.source, depth, self.name)


# ---------------------------------------------------------------------------
# profile families


def cosine_profile(eps, offset=0, depth=None) -> WaveProfile:
    """eta = offset - eps cos x"""
    def src():
        e = mpnum.parse_real(eps) if isinstance(eps, str) else mpfr(eps)
        o = mpnum.parse_real(offset) if isinstance(offset, str) else mpfr(offset)
        return {0: mpc(o), 1: mpc(-e / 2)}
    return WaveProfile(src, depth, f"cosine(eps={eps}, offset={offset})")


def shifted_cosine(shift=None, depth=None) -> WaveProfile:
    """eta = cos(x - shift); shift defaults to pi/6."""
    def src():
        s = mpnum.pi() / 6 if shift is None else mpfr(shift)
        return {1: mpnum.cis(-s) / 2}
    return WaveProfile(src, depth, "cos(x - pi/6)")


def exp_decay_profile(alpha, beta, depth=None, guard: int = 16) -> WaveProfile:
    """eta_k = exp(-alpha |k|^beta) for all k, truncated below 2^-(bits+guard)."""
    def src():
        a = mpnum.parse_real(alpha) if isinstance(alpha, str) else mpfr(alpha)
        if isinstance(beta, Fraction):
            b = mpfr(beta.numerator) / beta.denominator
        else:
            b = mpnum.parse_real(beta) if isinstance(beta, str) else mpfr(beta)
        lim = (mpnum.current_bits() + guard) * gmpy2.log(2)
        kmax = int(gmpy2.ceil((lim / a) ** (1 / b))) + 1
        out = {0: mpc(1)}
        for k in range(1, kmax + 1):
            out[k] = mpc(gmpy2.exp(-a * mpfr(k) ** b))
        return out
    return WaveProfile(src, depth, f"exp(-{alpha}|k|^{beta})")


def poisson_profile(depth=None) -> WaveProfile:
    """sinh(1) / (cosh(1) - cos x), i.e. eta_k = exp(-|k|)."""
    p = exp_decay_profile(1, 1, depth)
    p.name = "sinh(1)/(cosh(1)-cos x)"
    return p


def example_profile(kind: str, depth=None) -> WaveProfile:
    """The three test surfaces of increasing roughness.

    bandlimited: cos(x - pi/6); analytic: eta_k = e^{-|k|};
    smooth (C-infinity, not analytic): eta_k = e^{-1.5 |k|^{2/3}}.
    """
    if kind == "bandlimited":
        return shifted_cosine(depth=depth)
    if kind == "analytic":
        return poisson_profile(depth)
    if kind == "smooth":
        p = exp_decay_profile("1.5", Fraction(2, 3), depth)
        p.name = "exp(-1.5|k|^(2/3))"
        return p
    raise ProfileError(f"unknown example kind {kind!r}")


def random_profile(kmax: int, amplitude, seed: int = 0, depth=None,
                   mean: bool = False) -> WaveProfile:
    """Random band-limited profile with max |eta| <= amplitude.

    The float64 draws are taken as exact binary values, so the profile is
    identical at every precision.
    """
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((kmax + 1, 2))
    raw[:, :] /= (1.0 + np.arange(kmax + 1))[:, None]
    if not mean:
        raw[0] = 0.0
    raw[0, 1] = 0.0

    def src():
        amp = mpnum.parse_real(amplitude) if isinstance(amplitude, str) else mpfr(amplitude)
        c = {k: mpc(mpfr(raw[k, 0]), mpfr(raw[k, 1])) for k in range(kmax + 1)}
        total = abs(c[0]) + 2 * sum(abs(c[k]) for k in range(1, kmax + 1))
        return {k: v * amp / total for k, v in c.items()}
    return WaveProfile(src, depth, f"random(kmax={kmax}, amp={amplitude}, seed={seed})")


def random_dirichlet(kmax: int, seed: int = 1) -> dict:
    """Random band-limited Dirichlet data as a coefficient source."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((kmax + 1, 2)) / (1.0 + np.arange(kmax + 1))[:, None]
    raw[0] = 0.0
    return {k: mpc(mpfr(raw[k, 0]), mpfr(raw[k, 1])) for k in range(kmax + 1)}


# ---------------------------------------------------------------------------
# exact pairs


def _phi_terms(x, y):
    """F(y) = -sinh y / (cosh y - cos x) and its x, y derivatives."""
    ch, sh, cx, sx = mpnum.cosh(y), mpnum.sinh(y), mpnum.cos(x), mpnum.sin(x)
    den = ch - cx
    F = -sh / den
    Fy = (ch * cx - 1) / (den * den)
    Fx = sh * sx / (den * den)
    return F, Fx, Fy, den


@dataclass
class ExactPair:
    """Profile with closed-form Dirichlet and Neumann data.

    phi = (1/2) Im{cot(z/2) - cot((z + 2ih)/2)}, z = x + iy, which is
    harmonic below the surface when the pole at z = 0 lies above it.
    """

    profile: WaveProfile
    name: str = "pole pair"

    def _fields(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=object))
        eta = self.profile.evaluate(x)
        deta = self.profile.evaluate(x, 1)
        F, Fx, Fy, den = _phi_terms(x, eta)
        for d in den:
            if d == 0:
                raise ProfileError("surface passes through the pole")
        h = self.profile.h
        if h is None:
            phi = (F + 1) / 2
            px, py = Fx / 2, Fy / 2
        else:
            if any(e <= -h for e in eta):
                raise ProfileError("surface touches the bottom")
            G, Gx, Gy, _ = _phi_terms(x, eta + 2 * h)
            phi, px, py = (F - G) / 2, (Fx - Gx) / 2, (Fy - Gy) / 2
        return phi, py - deta * px

    def check(self):
        """Reject profiles for which the pole sits inside the fluid."""
        e0 = self.profile.evaluate([mpfr(0)])[0]
        if e0 >= 0:
            raise ProfileError("pole at the origin lies inside or on the fluid")

    def dirichlet(self, x) -> np.ndarray:
        return self._fields(x)[0]

    def neumann(self, x) -> np.ndarray:
        return self._fields(x)[1]

    def sample(self, grid: Grid):
        x = grid.nodes()
        self.check()
        D, N = self._fields(x)
        return self.profile.sample(grid), D, N


def pole_pair(eps="0.5", offset=0, depth=None) -> ExactPair:
    """Exact pair on eta = offset - eps cos x."""
    return ExactPair(cosine_profile(eps, offset, depth))


@dataclass
class FlatPair:
    """Flat surface with D = cos(kx): N = k tanh(kh) cos(kx)."""

    k: int = 1
    depth: object = None

    @property
    def profile(self):
        return WaveProfile({0: 0}, self.depth, "flat")

    def sample(self, grid: Grid):
        x = grid.nodes()
        D = mpnum.cos(self.k * x)
        h = _as_depth(self.depth)
        fac = mpfr(self.k) if h is None else self.k * gmpy2.tanh(self.k * h)
        return mpnum.zeros(grid.M), D, fac * D


# ---------------------------------------------------------------------------
# divergence of the global-relation series


@dataclass
class DivergenceReport:
    K: list
    err_below: list     # max error where eta < 0 (D, N)
    err_above: list     # max error where eta >= 0 (D, N)
    eta_max: object

    def converges_below(self) -> bool:
        d = [e[0] for e in self.err_below]
        return d[-1] < d[0]

    def diverges_above(self) -> bool:
        d = [e[0] for e in self.err_above]
        return len(d) > 1 and d[-1] > d[0]


def series_partial_sums(pair: ExactPair, x, K: int):
    """Partial sums of the exact series solution evaluated on the surface.

    The coefficients c_0 = 1, c_k = e^{|k| eta_max}/2 reproduce D and N
    exactly where the sums converge; the sums diverge wherever eta > 0.
    """
    x = np.atleast_1d(np.asarray(x, dtype=object))
    eta = pair.profile.evaluate(x)
    deta = pair.profile.evaluate(x, 1)
    D = np.full(len(x), mpfr(1), dtype=object)
    N = mpnum.zeros(len(x))
    for k in range(1, K + 1):
        e = mpnum.exp(k * eta)
        ckx, skx = mpnum.cos(k * x), mpnum.sin(k * x)
        D = D + e * ckx
        N = N + k * e * (ckx + deta * skx)
    return D, N


def divergent_series_demo(pair: ExactPair, Ks, M: int = 256, margin="0.25") -> DivergenceReport:
    """Errors of the partial sums away from the line eta = 0.

    Points with eta < -tau form the convergent region and eta > tau the
    divergent one, tau = margin * max|eta|; convergence degenerates to
    O(1) oscillation right at eta = 0.
    """
    if pair.profile.h is not None:
        raise ProfileError("divergence demo is for infinite depth")
    g = Grid(M)
    x = g.nodes()
    eta = pair.profile.evaluate(x)
    D, N = pair._fields(x)
    tau = mpnum.parse_real(margin) * mpnum.max_abs(eta)
    below = np.array([e < -tau for e in eta])
    above = np.array([e > tau for e in eta])
    out_b, out_a = [], []
    for K in Ks:
        Dk, Nk = series_partial_sums(pair, x, K)
        eD, eN = np.abs(Dk - D), np.abs(Nk - N)
        out_b.append((max(eD[below]), max(eN[below])) if below.any() else (mpfr(0), mpfr(0)))
        out_a.append((max(eD[above]), max(eN[above])) if above.any() else (mpfr(0), mpfr(0)))
    return DivergenceReport(list(Ks), out_b, out_a, pair.profile.eta_max())


# ---------------------------------------------------------------------------
# profile files


@dataclass
class SurfaceData:
    profile: WaveProfile
    dirichlet: dict            # k >= 0 -> mpc Fourier coefficient of D
    L: object = None
    meta: dict = field(default_factory=dict)

    def dirichlet_samples(self, grid: Grid):
        return synthesize(self.dirichlet, grid)


def _parse_modes(rows, what):
    out = {}
    last = -1
    for row in rows:
        if not isinstance(row, list) or len(row) != 3:
            raise ProfileError(f"{what}: entries must be [k, re, im]")
        k, re_, im_ = row
        if not isinstance(k, int) or k < 0:
            raise ProfileError(f"{what}: wavenumbers must be integers >= 0")
        if k <= last:
            raise ProfileError(f"{what}: wavenumbers must be strictly increasing")
        last = k
        if not isinstance(re_, str) or not isinstance(im_, str):
            raise ProfileError(f"{what}: values must be decimal strings")
        out[k] = mpc(mpnum.parse_real(re_), mpnum.parse_real(im_))
    if 0 in out and out[0].imag != 0:
        raise ProfileError(f"{what}: k = 0 coefficient must be real")
    return out


def load_surface_file(path, ctx: mpnum.PrecisionCtx) -> SurfaceData:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProfileError(f"cannot read profile file {path}: {exc}") from exc
    for key in ("L", "depth", "eta", "dirichlet"):
        if key not in doc:
            raise ProfileError(f"profile file missing '{key}'")
    with ctx:
        L = mpnum.parse_real(doc["L"])
        if L <= 0:
            raise ProfileError("L must be positive")
        two_pi = 2 * mpnum.pi()
        L_std = abs(L - two_pi) <= two_pi * ctx.eps * 8
        depth = doc["depth"]
        if depth != "inf":
            _as_depth(depth)
        eta = _parse_modes(doc["eta"], "eta")
        D = _parse_modes(doc["dirichlet"], "dirichlet")
    # keep the decimal strings so other precisions parse them afresh
    src = {row[0]: (row[1], row[2]) for row in doc["eta"]}
    prof = WaveProfile(src, None if depth == "inf" else depth, doc.get("meta", {}).get("name", "file"))
    prof._cache[ctx.bits] = eta
    return SurfaceData(prof, D, None if L_std else doc["L"], doc.get("meta", {}))


def save_surface_file(path, data: SurfaceData, ctx: mpnum.PrecisionCtx):
    with ctx:
        def rows(c):
            return [[int(k), mpnum.format_real(mpc(v).real, ctx),
                     mpnum.format_real(mpc(v).imag, ctx)] for k, v in sorted(c.items())]
        L = mpnum.format_real(2 * mpnum.pi() if data.L is None else mpnum.parse_real(str(data.L)), ctx)
        depth = "inf" if data.profile.depth is None else mpnum.format_real(data.profile.h, ctx)
        doc = {"L": L, "depth": depth, "eta": rows(data.profile.coefficients()),
               "dirichlet": rows(data.dirichlet), "meta": dict(data.meta, bits=ctx.bits)}
    Path(path).write_text(json.dumps(doc, indent=1))
