import json

import gmpy2
import mpmath as mp
import numpy as np
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given, strategies as st

from dnomp import mpnum, profiles
from dnomp.mpnum import PrecisionCtx
from dnomp.profiles import ProfileError
from dnomp.spectral import Grid, ddx, fft_forward, trapezoid_ip

import oracles
from conftest import maxabs


def test_example_analytic_at_zero(ctx113):
    p = profiles.example_profile("analytic")
    v = p.evaluate([mpfr(0)])[0]
    assert abs(v - mpfr(oracles.FROZEN["example2_at_0"])) < 1e-32


def test_example_bandlimited_modes(ctx53):
    c = profiles.example_profile("bandlimited").coefficients()
    assert [k for k, v in c.items() if v != 0] == [1]
    assert abs(c[1] - gmpy2.exp(mpc(0, -1) * mpnum.pi() / 6) / 2) < 1e-16


def test_example_smooth_k8(ctx113):
    c = profiles.example_profile("smooth").coefficients()
    assert abs(c[8] - mpfr(oracles.FROZEN["example3_k8"])) < 1e-34


def test_example_unknown():
    with pytest.raises(ProfileError):
        profiles.example_profile("rough")


@pytest.mark.parametrize("kind,closed", [
    ("bandlimited", lambda x: mpnum.cos(x - mpnum.pi() / 6)),
    ("analytic", lambda x: gmpy2.sinh(mpfr(1)) / (gmpy2.cosh(mpfr(1)) - mpnum.cos(x))),
])
def test_grid_synthesis_matches_closed_form(kind, closed):
    with PrecisionCtx(150):
        g = Grid(64)
        p = profiles.example_profile(kind)
        assert maxabs(p.sample(g) - closed(g.nodes())) < 2.0 ** (-150 + 8) * 10


def test_eta_max(ctx113):
    assert abs(profiles.cosine_profile("0.5").eta_max() - mpfr("0.5")) < 1e-33
    p = profiles.example_profile("bandlimited")
    assert abs(p.eta_max() - 1) < 1e-32


def test_depth_validation(ctx53):
    with pytest.raises(ProfileError):
        profiles.WaveProfile({0: 0}, "-1").h
    assert profiles.WaveProfile({0: 0}, "inf").h is None


# -- exact pairs ----------------------------------------------------------------


def test_pole_pair_values(ctx113):
    pair = profiles.pole_pair("0.5")
    x0 = [mpfr(0)]
    assert abs(pair.dirichlet(x0)[0] - mpfr(oracles.FROZEN["pole_D0"])) < 1e-32
    assert abs(pair.neumann(x0)[0] - mpfr(oracles.FROZEN["pole_N0"])) < 1e-32


@pytest.mark.parametrize("offset,depth", [(0, None), ("-1", None), (0, "1.3"), ("-0.2", "0.9")])
def test_pole_pair_against_mpmath(offset, depth):
    with PrecisionCtx(120):
        pair = profiles.pole_pair("0.5", offset, depth)
        xs = [mpnum.parse_real(s) for s in ("0.3", "1.7", "3.1", "5.0")]
        D, N = pair.dirichlet(xs), pair.neumann(xs)
    with mp.workdps(40):
        off = mp.mpf(offset)
        h = None if depth is None else mp.mpf(depth)
        for x, d, n in zip(xs, D, N):
            xm = mp.mpf(str(x))
            y = off - mp.mpf("0.5") * mp.cos(xm)
            phi = lambda a, b: oracles._pole_phi(a, b, h)
            assert abs(mp.mpf(str(d)) - phi(xm, y)) < mp.mpf(10) ** -33
            nm = mp.diff(lambda t: phi(xm, t), y) - mp.mpf("0.5") * mp.sin(xm) * mp.diff(lambda t: phi(t, y), xm)
            assert abs(mp.mpf(str(n)) - nm) < mp.mpf(10) ** -30


def test_finite_depth_pair_bottom_condition():
    # the image term makes phi_y vanish on y = -h
    with mp.workdps(40):
        h = mp.mpf("0.9")
        for x in ("0.4", "2.0"):
            d = mp.diff(lambda t: oracles._pole_phi(mp.mpf(x), t, h), -h)
            assert abs(d) < mp.mpf(10) ** -30


def test_zero_amplitude_pair_is_flat():
    # eps -> 0 : N = |D| D (pole above a flat surface)
    with PrecisionCtx(113):
        pair = profiles.pole_pair("1e-40", "-1.5")
        g = Grid(128)
        _, D, N = pair.sample(g)
        from dnomp.spectral import apply_multiplier, fft_inverse, sym_absD
        ND = mpnum.real(fft_inverse(apply_multiplier(fft_forward(D), sym_absD(g))))
        assert maxabs(ND - N) < 1e-30


def test_pole_on_surface_rejected(ctx53):
    with pytest.raises(ProfileError):
        profiles.pole_pair("0.5", "0.5").sample(Grid(16))
    with pytest.raises(ProfileError):
        profiles.ExactPair(profiles.cosine_profile("0.5", "0", "0.4")).sample(Grid(16))


def test_pair_satisfies_global_relation():
    # int e^{ikx} e^{k eta} (i N + D_x) dx = 0 for k > 0; with the trapezoid
    # rule the residual decays spectrally in M
    def residual(M):
        with PrecisionCtx(150):
            g = Grid(M)
            pair = profiles.pole_pair("0.5")
            eta, D, N = pair.sample(g)
            Dx = ddx(D, g)
            x = g.nodes()
            worst = mpfr(0)
            for k in (1, 2, 5):
                w = mpnum.exp(k * (eta - mpfr("0.5"))) * mpnum.cis(k * x)
                r = trapezoid_ip(w * (mpc(0, 1) * N + Dx), np.full(M, mpfr(1), dtype=object), g)
                worst = max(worst, abs(r))
            return float(worst)
    r1, r2 = residual(64), residual(128)
    assert r2 < 1e-20 and r2 < r1 * 1e-5


# -- divergence demonstration -------------------------------------------------


def test_series_coefficients(ctx113):
    # c_0 = 1 and c_k = e^{|k| eta_max}/2
    c3 = gmpy2.exp(3 * mpfr("0.5")) / 2
    assert abs(c3 - mpfr(oracles.FROZEN["c3"])) < 1e-32
    pair = profiles.pole_pair("0.5")
    D1, _ = profiles.series_partial_sums(pair, [mpfr(0)], 0)
    assert D1[0] == 1


def test_divergence_demo(ctx113):
    pair = profiles.pole_pair("0.5")
    rep = profiles.divergent_series_demo(pair, [8, 16, 32, 64], M=64)
    assert rep.converges_below() and rep.diverges_above()
    below = [float(e[0]) for e in rep.err_below]
    # slowest convergence at the region edge eta = -eta_max/4: rate e^{-K/8}
    assert all(a > b for a, b in zip(below, below[1:]))
    assert below[-1] < 1e-3
    x = [mpnum.pi()]
    vals = [abs(profiles.series_partial_sums(pair, x, K)[0][0]) for K in (8, 16, 32)]
    assert vals[0] < vals[1] < vals[2]


def test_divergence_demo_needs_infinite_depth(ctx53):
    with pytest.raises(ProfileError):
        profiles.divergent_series_demo(profiles.pole_pair("0.5", 0, "2"), [4])


# -- files ------------------------------------------------------------------------


def test_file_roundtrip_example2(tmp_path):
    ctx = PrecisionCtx(200)
    with ctx:
        p = profiles.example_profile("analytic")
        coeffs = {k: v for k, v in p.coefficients().items() if k <= 100}
        data = profiles.SurfaceData(profiles.WaveProfile(coeffs), {1: mpc("0.5")},
                                    meta={"c": "0.27349", "label": "x"})
    profiles.save_surface_file(tmp_path / "s.json", data, ctx)
    back = profiles.load_surface_file(tmp_path / "s.json", ctx)
    with ctx:
        assert back.profile.coefficients() == coeffs
    assert back.meta["c"] == "0.27349" and back.meta["label"] == "x"
    assert back.dirichlet == {1: mpc("0.5")}


def test_file_stokes_metadata(tmp_path):
    ctx = PrecisionCtx(53)
    for c in ("0.27349", "0.23290"):
        with ctx:
            data = profiles.SurfaceData(profiles.WaveProfile({0: 0}), {}, meta={"c": c})
        profiles.save_surface_file(tmp_path / "f.json", data, ctx)
        assert profiles.load_surface_file(tmp_path / "f.json", ctx).meta["c"] == c


def test_file_empty_is_flat(tmp_path):
    path = tmp_path / "e.json"
    path.write_text(json.dumps({"L": "6.283185307179586", "depth": "inf", "eta": [], "dirichlet": []}))
    ctx = PrecisionCtx(53)
    d = profiles.load_surface_file(path, ctx)
    with ctx:
        assert maxabs(d.profile.sample(Grid(8))) == 0


@pytest.mark.parametrize("doc", [
    {"L": "1", "depth": "inf", "eta": [[1, "0", "0"], [1, "0", "0"]], "dirichlet": []},
    {"L": "1", "depth": "inf", "eta": [[0, "1", "2"]], "dirichlet": []},
    {"L": "1", "depth": "inf", "eta": [[-1, "1", "0"]], "dirichlet": []},
    {"L": "1", "depth": "inf", "eta": [[1, 0.5, "0"]], "dirichlet": []},
    {"L": "1", "depth": "-2", "eta": [], "dirichlet": []},
    {"L": "1", "eta": [], "dirichlet": []},
])
def test_file_schema_errors(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ProfileError):
        profiles.load_surface_file(path, PrecisionCtx(53))


def test_file_reparsed_at_other_precision(tmp_path):
    lo, hi = PrecisionCtx(53), PrecisionCtx(300)
    with hi:
        data = profiles.SurfaceData(profiles.WaveProfile({1: mpc(mpfr(1) / 3)}), {})
    profiles.save_surface_file(tmp_path / "p.json", data, hi)
    back = profiles.load_surface_file(tmp_path / "p.json", lo)
    with hi:
        assert back.profile.coefficients()[1] == mpc(mpfr(1) / 3)


# -- properties ---------------------------------------------------------------------


@given(st.integers(1, 8), st.floats(0.001, 0.5), st.integers(0, 10_000))
def test_random_profile_amplitude(kmax, amp, seed):
    with PrecisionCtx(60):
        p = profiles.random_profile(kmax, amp, seed)
        v = p.sample(Grid(64))
        assert maxabs(v) <= amp * (1 + 1e-15)
        assert p.bandwidth() <= kmax


@given(st.integers(1, 6), st.integers(0, 1000))
def test_random_profile_precision_independent(kmax, seed):
    p = profiles.random_profile(kmax, "0.01", seed)
    with PrecisionCtx(53):
        lo = p.coefficients()
    with PrecisionCtx(200):
        hi = p.coefficients()
        for k in lo:
            assert abs(lo[k] - hi[k]) <= abs(hi[k]) * 2.0 ** -50
