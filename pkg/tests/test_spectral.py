import gmpy2
import numpy as np
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given, strategies as st

from dnomp import mpnum
from dnomp.mpnum import PrecisionCtx
from dnomp.spectral import (Grid, SurfaceField, apply_multiplier, cheb_differentiate,
                            cheb_transform, clenshaw, ddx, factor_235, fft_forward,
                            fft_inverse, hilbert, lobatto_nodes, product_weights, sym_absD,
                            sym_D, sym_G0, sym_hilbert, synthesize, trapezoid_ip, wavenumbers)

from conftest import maxabs


def _random(M, seed, cplx=False):
    rng = np.random.default_rng(seed)
    v = mpnum.real_array(rng.standard_normal(M))
    if cplx:
        v = mpnum.make_complex(v, mpnum.real_array(rng.standard_normal(M)))
    return v


# -- FFT ---------------------------------------------------------------------


def test_cos_modes_M8(ctx53):
    g = Grid(8)
    c = fft_forward(mpnum.cos(g.nodes()))
    k = wavenumbers(8)
    for i, kk in enumerate(k):
        want = 0.5 if abs(kk) == 1 else 0.0
        assert abs(c[i] - want) < 1e-15


def test_constant_dc(ctx53):
    c = fft_forward(np.full(12, mpfr(1), dtype=object))
    assert c[0] == 1
    assert maxabs(c[1:]) < 1e-16


@pytest.mark.parametrize("M", [4, 6, 15, 256, 320, 384, 2304, 7, 14, 22, 97])
def test_roundtrip_sizes(M):
    # 2/3/5-smooth sizes from the studies plus primes and odd composites (Bluestein)
    with PrecisionCtx(113):
        v = _random(M, M, cplx=True)
        back = fft_inverse(fft_forward(v))
        assert maxabs(back - v) < M * 2.0 ** (-113 + 8)


def test_roundtrip_M320_bound(ctx53):
    v = _random(320, 1)
    err = maxabs(mpnum.real(fft_inverse(fft_forward(v))) - v)
    assert err < 320 * 2.0 ** (-53 + 8)


def test_matches_direct_dft(ctx113):
    M = 30
    v = _random(M, 3, cplx=True)
    c = fft_forward(v)
    x = 2 * mpnum.pi() / M
    for k in (0, 1, 7, 29):
        direct = sum(v[j] * gmpy2.exp(mpc(0, -k * j) * x) for j in range(M)) / M
        assert abs(direct - c[k]) < 1e-32


def test_fft_axis(ctx53):
    A = np.stack([_random(8, 1), _random(8, 2)], axis=1)
    c = fft_forward(A, axis=0)
    assert maxabs(c[:, 1] - fft_forward(A[:, 1])) == 0
    c1 = fft_forward(A.T, axis=1)
    assert maxabs(c1.T - c) == 0


@pytest.mark.parametrize("M", [1, 2, 3])
def test_fft_rejects_small(ctx53, M):
    with pytest.raises(ValueError):
        fft_forward(np.full(M, mpfr(1), dtype=object))
    with pytest.raises(ValueError):
        fft_inverse(np.full(M, mpc(1), dtype=object))


def test_factor_235():
    assert factor_235(24576)[1] == 1
    assert factor_235(2304)[1] == 1
    assert factor_235(14)[1] == 7


@given(st.integers(4, 48), st.integers(0, 10_000))
def test_parseval(M, seed):
    with PrecisionCtx(100):
        v = _random(M, seed, cplx=True)
        c = fft_forward(v)
        lhs = np.sum(np.abs(v) ** 2) / M
        rhs = np.sum(np.abs(c) ** 2)
        assert abs(lhs - rhs) <= lhs * 2.0 ** (-100 + 10)


@given(st.integers(2, 30), st.integers(0, 1000))
def test_real_field_conjugate_symmetry(half, seed):
    M = 2 * half
    with PrecisionCtx(80):
        c = fft_forward(_random(M, seed))
        for k in range(1, half):
            assert abs(c[k] - c[M - k].conjugate()) <= 2.0 ** (-80 + 8) * (1 + abs(c[k]))


# -- multipliers -------------------------------------------------------------


def test_G0_finite_depth_multiplier(ctx113):
    g = Grid(32)
    h = mpnum.parse_real("0.7")
    x = g.nodes()
    for k in (1, 3, 9):
        c = fft_forward(mpnum.cos(k * x))
        out = mpnum.real(fft_inverse(apply_multiplier(c, sym_G0(g, h))))
        assert maxabs(out - k * gmpy2.tanh(k * h) * mpnum.cos(k * x)) < 1e-31


def test_hilbert_sin(ctx53):
    g = Grid(16)
    x = g.nodes()
    assert maxabs(hilbert(mpnum.sin(x), g) + mpnum.cos(x)) < 1e-15


def test_absD_passthrough(ctx53):
    g = Grid(16)
    x = g.nodes()
    c = fft_forward(mpnum.cos(x))
    out = mpnum.real(fft_inverse(apply_multiplier(c, sym_absD(g))))
    assert maxabs(out - mpnum.cos(x)) < 4e-15


def test_symbol_zero_mode_conventions(ctx53):
    g = Grid(8)
    assert sym_hilbert(g)[0] == 0
    assert sym_absD(g)[0] == 0
    assert sym_G0(g, 1)[0] == 0
    c = fft_forward(np.full(8, mpfr(3), dtype=object))
    assert maxabs(apply_multiplier(c, sym_G0(g, 2))) == 0


def test_nyquist_zeroed(ctx53):
    g = Grid(8)
    x = g.nodes()
    v = mpnum.cos(4 * x)
    c = fft_forward(v)
    assert abs(c[4]) == 1
    assert maxabs(apply_multiplier(c, sym_absD(g))) == 0
    assert maxabs(ddx(v, g)) < 1e-15


@given(st.integers(0, 1000))
def test_multiplier_composition(seed):
    with PrecisionCtx(90):
        g = Grid(24)
        c = fft_forward(_random(24, seed))
        s1, s2 = sym_D(g), sym_G0(g, mpnum.parse_real("0.3"))
        a = apply_multiplier(apply_multiplier(c, s1), s2)
        b = apply_multiplier(c, s1 * s2)
        assert maxabs(a - b) <= 2.0 ** (-90 + 8) * maxabs(b)


@given(st.integers(0, 1000))
def test_real_symbol_preserves_reality(seed):
    with PrecisionCtx(70):
        g = Grid(20)
        c = apply_multiplier(fft_forward(_random(20, seed)), sym_G0(g))
        v = fft_inverse(c)
        assert maxabs(mpnum.imag(v)) <= 2.0 ** (-70 + 8) * maxabs(v)


def test_ddx_general_period(ctx113):
    L = mpnum.parse_real("3")
    g = Grid(32, L)
    x = g.nodes()
    w = 2 * mpnum.pi() / L
    assert maxabs(ddx(mpnum.sin(w * x), g) - w * mpnum.cos(w * x)) < 1e-30


def test_surface_field_views(ctx53):
    g = Grid(8)
    f = SurfaceField(g, mpnum.cos(g.nodes()))
    assert abs(f.modes[1] - 0.5) < 1e-16
    back = SurfaceField.from_modes(g, f.modes)
    assert maxabs(back.values - f.values) < 1e-15


def test_synthesize_folds_high_modes(ctx113):
    g = Grid(8)
    coeffs = {1: mpc("0.25"), 9: mpc("0.5")}
    x = g.nodes()
    want = mpnum.cos(x) / 2 + mpnum.cos(9 * x)
    assert maxabs(synthesize(coeffs, g) - want) < 1e-32
    assert maxabs(synthesize({2: mpc(0.5)}, g, 1) + 2 * mpnum.sin(2 * x)) < 1e-32


# -- trapezoid ---------------------------------------------------------------


def test_trapezoid_orthonormality(ctx113):
    g = Grid(16)
    e1 = mpnum.cis(g.nodes())
    e2 = mpnum.cis(2 * g.nodes())
    assert abs(trapezoid_ip(e1, e1, g) - 2 * mpnum.pi()) < 1e-32
    assert abs(trapezoid_ip(e1, e2, g)) < 1e-32


def test_trapezoid_poisson_mean(ctx113):
    g = Grid(128)
    x = g.nodes()
    f = gmpy2.sinh(mpfr(1)) / (gmpy2.cosh(mpfr(1)) - mpnum.cos(x))
    one = np.full(128, mpfr(1), dtype=object)
    val = trapezoid_ip(f, one, g) / (2 * mpnum.pi())
    # error of the trapezoid rule is ~ e^{-M}
    assert abs(val - 1) < 1e-33


# -- Chebyshev ---------------------------------------------------------------


def test_cheb_T2_and_constant(ctx53):
    s = lobatto_nodes(6)
    a = cheb_transform(2 * s * s - 1)
    assert abs(a[2] - 1) < 1e-15 and maxabs(np.delete(a, 2)) < 1e-15
    c = cheb_transform(np.full(7, mpfr(5), dtype=object))
    assert abs(c[0] - 5) < 1e-15 and maxabs(c[1:]) < 1e-15


def test_cheb_rejects_small(ctx53):
    with pytest.raises(ValueError):
        cheb_transform(mpnum.real_array([1, 2]))


@given(st.integers(2, 40), st.integers(0, 1000))
def test_cheb_roundtrip(N, seed):
    with PrecisionCtx(100):
        v = _random(N + 1, seed)
        a = cheb_transform(v)
        back = clenshaw(a, lobatto_nodes(N))
        assert maxabs(back - v) <= N * 2.0 ** (-100 + 8) * max(1.0, maxabs(v))


def test_cheb_differentiate_T1(ctx53):
    a = mpnum.real_array([0, 1, 0])
    h = mpnum.parse_real("0.5")
    b = cheb_differentiate(a, h)
    assert list(b) == [2 / h, 0, 0]
    assert list(cheb_differentiate(a)) == [1, 0, 0]
    assert maxabs(cheb_differentiate(mpnum.real_array([3, 0, 0]))) == 0


def test_cheb_differentiate_cosh(ctx53):
    N, k, h = 32, 3, mpfr(1)
    s = lobatto_nodes(N)
    y = h * (s - 1) / 2
    a = cheb_transform(mpnum.cosh(k * (y + h)))
    d = clenshaw(cheb_differentiate(a, h), s)
    assert maxabs(d - k * mpnum.sinh(k * (y + h))) < 1e-12


def test_cheb_differentiate_polynomials(ctx212):
    N = 9
    s = lobatto_nodes(N)
    for deg in range(1, N + 1):
        p = s ** deg
        d = clenshaw(cheb_differentiate(cheb_transform(p)), s)
        assert maxabs(d - deg * s ** (deg - 1)) < 1e-55


def test_clenshaw_values(ctx53):
    assert clenshaw(mpnum.real_array([0, 0, 1]), [mpfr(0)])[0] == -1
    assert clenshaw(mpnum.real_array([0, 0, 0, 1]), [mpfr(1)])[0] == 1
    with pytest.raises(ValueError):
        clenshaw(mpnum.real_array([1, 2]), [mpfr("1.5")])


def test_clenshaw_direct_sum(ctx113):
    a = _random(12, 4)
    s = mpnum.parse_real("0.3")
    t = gmpy2.acos(s)
    direct = sum(a[j] * gmpy2.cos(j * t) for j in range(12))
    assert abs(clenshaw(a, [s])[0] - direct) < 1e-32


def test_product_weights_exact(ctx113):
    # int T_m T_n ds = (I_{m+n} + I_{|m-n|}) / 2 with I_j = 2/(1-j^2) for even j
    W = product_weights(4)
    assert abs(W[0, 0] - 2) < 1e-33
    assert abs(W[1, 1] - mpfr(2) / 3) < 1e-33
    assert abs(W[2, 2] - (mpfr(2) / 2 * (1 + mpfr(-1) / 15))) < 1e-33
    assert W[1, 2] == 0
