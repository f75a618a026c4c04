"""Reference values computed independently with mpmath.

``FROZEN`` holds the values as decimal strings (60 significant digits).
``recompute`` regenerates each entry from scratch with mpmath, which shares
no code with the package; test_oracles.py checks the two agree.
"""

import mpmath as mp

FROZEN = {
    "tanh_1": "0.761594155955764888119458282604793590412768597257936551596811",
    "tanh_005": "0.0499583749578799721983863652082843196427997937810184399671846",
    "example2_at_0": "2.16395341373865284877000401021802311709373860215079227253357",
    "example3_k8": "0.00247875217666635842304516743081666789150647958553394505087862",
    "pole_D0": "2.54149408253679828413110344447251463834045923684188210947414",
    "pole_N0": "3.91769808903276376485095678588700535571669406555451337376056",
    "c3": "2.24084453516903241130102773005963790950287493418483352838633",
    "bvp_k0_bottom_h05": "-0.125",
}


def _pole_phi(x, y, h=None):
    """Exact harmonic function, evaluated by complex cotangents."""
    z = mp.mpc(x, y)
    v = mp.im(mp.cot(z / 2))
    if h is None:
        return (v + 1) / 2
    return (v - mp.im(mp.cot((z + 2j * h) / 2))) / 2


def pole_dirichlet(x, eps, h=None):
    return _pole_phi(x, -eps * mp.cos(x), h)


def pole_neumann(x, eps, h=None):
    """phi_y - eta' phi_x on y = -eps cos x, by numerical differentiation."""
    y = -eps * mp.cos(x)
    phix = mp.diff(lambda t: _pole_phi(t, y, h), x)
    phiy = mp.diff(lambda t: _pole_phi(x, t, h), y)
    return phiy - eps * mp.sin(x) * phix


def recompute(dps=70):
    with mp.workdps(dps):
        half = mp.mpf(1) / 2
        return {
            "tanh_1": mp.tanh(1),
            "tanh_005": mp.tanh(mp.mpf("0.05")),
            "example2_at_0": mp.sinh(1) / (mp.cosh(1) - 1),
            "example3_k8": mp.exp(-mp.mpf("1.5") * mp.mpf(8) ** (mp.mpf(2) / 3)),
            "pole_D0": pole_dirichlet(0, half),
            "pole_N0": pole_neumann(0, half),
            "c3": mp.exp(3 * half) / 2,
            # u'' = 1, u(0) = 0, u'(-h) = 0 -> u = y^2/2 + h y, u(-h) = -h^2/2
            "bvp_k0_bottom_h05": -mp.mpf("0.5") ** 2 / 2,
        }


def value(name):
    return mp.mpf(FROZEN[name])
