import gmpy2
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given, settings, strategies as st

from dnomp import bim, linalg, mpnum, profiles
from dnomp.mpnum import PrecisionCtx
from dnomp.spectral import Grid, fft_forward

import oracles
from conftest import maxabs


def _flat(depth=None):
    return profiles.WaveProfile({0: 0}, depth)


def test_flat_kernels_vanish(ctx113):
    ker = bim.assemble_kernels(_flat(), Grid(16))
    assert maxabs(ker.A) < 1e-32 and maxabs(ker.B) < 1e-32


def test_flat_density_and_neumann(ctx113):
    g = Grid(16)
    x = g.nodes()
    D = mpnum.cos(x)
    sol = bim.bim_solve(bim.assemble_kernels(_flat(), g), D)
    assert maxabs(sol.mu - 2 * D) < 1e-32
    assert maxabs(sol.N - D) < 1e-32


def test_flat_finite_depth_gives_G0(ctx113):
    # the image kernel is smooth on the scale 2h, so the grid must resolve it
    g = Grid(64)
    x = g.nodes()
    h = mpnum.parse_real("0.8")
    D = mpnum.cos(2 * x) + mpnum.sin(x)
    N = 2 * gmpy2.tanh(2 * h) * mpnum.cos(2 * x) + gmpy2.tanh(h) * mpnum.sin(x)
    assert maxabs(bim.bim_dno(_flat(h), D, g, depth=h) - N) < 1e-30


def test_diagonal_values(ctx113):
    # eta = -0.5 cos x : A(0,0) = -1/4, A(pi/2, pi/2) = 0, B(0,0) = 0
    g = Grid(16)
    ker = bim.assemble_kernels(profiles.cosine_profile("0.5"), g)
    assert abs(ker.A[0, 0] + mpfr(1) / 4) < 1e-32
    assert abs(ker.A[4, 4]) < 1e-32
    assert abs(ker.B[0, 0]) < 1e-32


def _kernels_at(prof, a, b):
    # off-diagonal kernel values straight from the cotangent displays
    def zeta(t):
        return mpc(t, prof.evaluate([t])[0]), mpc(1, prof.evaluate([t], 1)[0])
    za, da = zeta(a)
    zb, db = zeta(b)
    c = mpnum.cot((za - zb) / 2)
    A = (db / 2 * c).imag
    B = (da / 2 * c).real - gmpy2.cot((a - b) / 2) / 2
    return A, B


@pytest.mark.parametrize("alpha", ["0.3", "1.9", "4.4"])
def test_diagonal_limits_by_shrinking_offsets(alpha):
    with PrecisionCtx(200):
        prof = profiles.example_profile("analytic")
        a = mpnum.parse_real(alpha)
        e1, e2 = prof.evaluate([a], 1)[0], prof.evaluate([a], 2)[0]
        ratio = mpc(0, e2) / (2 * mpc(1, e1))
        Ad, Bd = -ratio.imag, ratio.real
        errs = []
        for p in (8, 12, 16):
            d = mpfr(10) ** -p
            A, B = _kernels_at(prof, a, a + d)
            errs.append((abs(A - Ad), abs(B - Bd)))
        # the offset error shrinks like delta
        for (a1, b1), (a2, b2) in zip(errs, errs[1:]):
            assert a2 < a1 * 1e-3 and b2 < b1 * 1e-3
        assert errs[-1][0] < 1e-14 and errs[-1][1] < 1e-14


def test_pole_pair_neumann_at_zero():
    with PrecisionCtx(53):
        pair = profiles.pole_pair("0.5")
        g = Grid(256)
        _, D, _ = pair.sample(g)
        N = bim.bim_dno(pair.profile, D, g)
        assert abs(N[0] - mpfr(oracles.FROZEN["pole_N0"])) <= 1e-12


def test_spectral_convergence():
    errs = []
    with PrecisionCtx(150):
        pair = profiles.pole_pair("0.5", "-1")
        for M in (16, 32, 64):
            g = Grid(M)
            _, D, N = pair.sample(g)
            errs.append(float(mpnum.max_abs(bim.bim_dno(pair.profile, D, g) - N)))
    assert errs[1] < errs[0] * 1e-3 and errs[2] < errs[1] * 1e-6


@pytest.mark.parametrize("offset,depth,tol", [("-0.6", "1.2", 1e-25), ("-0.3", "0.9", 1e-15)])
def test_finite_depth_against_exact_pair(offset, depth, tol):
    with PrecisionCtx(150):
        pair = profiles.pole_pair("0.3", offset, depth)
        errs = []
        for M in (64, 128):
            g = Grid(M)
            _, D, N = pair.sample(g)
            errs.append(mpnum.rms(bim.bim_dno(pair.profile, D, g, depth=pair.profile.h) - N))
        assert errs[1] < tol and errs[1] < errs[0] * 1e-7


def test_condition_stays_small():
    with PrecisionCtx(80):
        prof = profiles.cosine_profile("0.5")
        for M in (32, 64):
            S = bim.system_matrix(bim.assemble_kernels(prof, Grid(M)))
            s = linalg.svd(S).s
            assert s[0] / s[-1] < 100


def test_gmres_path_matches_lu():
    with PrecisionCtx(120):
        pair = profiles.pole_pair("0.5", "-0.5")
        g = Grid(48)
        _, D, _ = pair.sample(g)
        ker = bim.assemble_kernels(pair.profile, g)
        a = bim.bim_solve(ker, D, "lu")
        b = bim.bim_solve(ker, D, "gmres")
        assert b.iterations < 40
        assert maxabs(a.N - b.N) < 1e-30
        assert a.residual < 1e-33 and b.residual < 1e-33
        assert 1 <= float(a.cond) < 100


def test_gmres_fallback_warns(ctx53, monkeypatch):
    g = Grid(16)
    ker = bim.assemble_kernels(profiles.cosine_profile("0.3"), g)

    def fail(*args, **kw):
        raise linalg.ConvergenceError("forced")
    monkeypatch.setattr(linalg, "gmres", fail)
    with pytest.warns(RuntimeWarning, match="LU"):
        sol = bim.bim_solve(ker, mpnum.cos(g.nodes()), "gmres")
    assert sol.method == "lu"


def test_rejects(ctx53):
    with pytest.raises(ValueError):
        bim.assemble_kernels(_flat(), Grid(16, mpfr(3)))
    with pytest.raises(ValueError):
        bim.assemble_kernels(profiles.cosine_profile("0.5"), Grid(16), depth="0.3")
    ker = bim.assemble_kernels(_flat(), Grid(8))
    with pytest.raises(ValueError):
        bim.bim_solve(ker, mpnum.zeros(8), "cg")


def test_samples_input_matches_profile(ctx113):
    g = Grid(64)
    prof = profiles.example_profile("bandlimited")
    k1 = bim.assemble_kernels(prof, g)
    k2 = bim.assemble_kernels(prof.sample(g), g)
    assert maxabs(k1.A - k2.A) < 1e-30 and maxabs(k1.B - k2.B) < 1e-30


@settings(max_examples=8)
@given(st.integers(0, 1000))
def test_kernel_smoothness(seed):
    # smooth eta gives kernels whose rows have rapidly decaying spectra
    with PrecisionCtx(80):
        g = Grid(48)
        ker = bim.assemble_kernels(profiles.random_profile(2, "0.2", seed), g)
        row = fft_forward(ker.A[5])
        assert float(mpnum.max_abs(row[20:29])) < 1e-6 * max(1e-30, float(mpnum.max_abs(row)))
