"""Precision contexts and elementwise multiprecision arithmetic.

Scalars are ``gmpy2.mpfr`` / ``gmpy2.mpc`` values rounded to nearest-even at
the working precision.  Arrays are numpy arrays of dtype ``object`` holding
those scalars, so ordinary numpy operators (``+``, ``*``, ``@``, ``np.sum``)
dispatch to MPFR and round every operation correctly.

All arithmetic must run inside an active context::

    ctx = PrecisionCtx(212)
    with ctx:
        x = ctx.real("0.1")
        y = exp(x)

53 bits reproduces IEEE double rounding (the exponent range is wider).
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

MIN_BITS = 24

_DECIMAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_local = threading.local()


class PrecisionError(ValueError):
    """Invalid precision request or unparseable decimal input."""


class PrecisionWarning(UserWarning):
    """Working precision judged insufficient for a computation."""


@dataclass(frozen=True)
class PrecisionCtx:
    """Working precision in significand bits, with round-to-nearest-even."""

    bits: int

    def __post_init__(self):
        if not isinstance(self.bits, (int, np.integer)) or isinstance(self.bits, bool):
            raise PrecisionError(f"bits must be an integer, got {self.bits!r}")
        if self.bits < MIN_BITS:
            raise PrecisionError(f"bits must be >= {MIN_BITS}, got {self.bits}")

    @property
    def digits(self) -> int:
        """Decimal digits that guarantee an exact round trip."""
        return math.ceil(self.bits * math.log10(2)) + 2

    @property
    def eps(self):
        """Unit roundoff 2**-bits."""
        return mpfr(2) ** (-self.bits)

    def __enter__(self):
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = _local.stack = []
        cm = gmpy2.context(gmpy2.get_context(), precision=self.bits,
                           round=gmpy2.RoundToNearest)
        cm.__enter__()
        stack.append(cm)
        return self

    def __exit__(self, *exc):
        _local.stack.pop().__exit__(*exc)
        return False

    def real(self, x):
        """Round a number or decimal string to this precision."""
        with self:
            if isinstance(x, str):
                return parse_real(x, self)
            return mpfr(x)

    def complex(self, re_, im_=0):
        with self:
            re_ = parse_real(re_, self) if isinstance(re_, str) else re_
            im_ = parse_real(im_, self) if isinstance(im_, str) else im_
            return mpc(re_, im_)


def current_bits() -> int:
    return gmpy2.get_context().precision


# ---------------------------------------------------------------------------
# decimal round trip


def parse_real(s: str, ctx: PrecisionCtx | None = None):
    """Parse a finite decimal string, correctly rounded to ``ctx``."""
    if not isinstance(s, str) or not _DECIMAL.match(s.strip()):
        raise PrecisionError(f"not a finite decimal number: {s!r}")
    if ctx is None:
        return mpfr(s.strip())
    with ctx:
        return mpfr(s.strip())


def format_real(x, ctx: PrecisionCtx) -> str:
    """Decimal string with enough digits to reproduce ``x`` at ``ctx``."""
    with ctx:
        x = mpfr(x)
        if not gmpy2.is_finite(x):
            raise PrecisionError(f"cannot format non-finite value {x}")
        if x == 0:
            return "0"
        mant, exp, _ = x.digits(10, ctx.digits)
        sign = ""
        if mant[0] == "-":
            sign, mant = "-", mant[1:]
        # digits() returns 0.mant * 10**exp
        return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1}"


# ---------------------------------------------------------------------------
# array construction


def real_array(values, ctx: PrecisionCtx | None = None) -> np.ndarray:
    """Object array of mpfr rounded from numbers or decimal strings."""
    def conv(v):
        return parse_real(v) if isinstance(v, str) else mpfr(v)
    if ctx is not None:
        with ctx:
            return real_array(values)
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    flat_in, flat_out = arr.reshape(-1), out.reshape(-1)
    for i, v in enumerate(flat_in):
        flat_out[i] = conv(v)
    return out


def complex_array(values, ctx: PrecisionCtx | None = None) -> np.ndarray:
    """Object array of mpc from complex numbers or mp scalars."""
    if ctx is not None:
        with ctx:
            return complex_array(values)
    arr = np.asarray(values, dtype=object)
    return _to_mpc(arr) if arr.size else np.empty(arr.shape, dtype=object)


def zeros(shape, complex_: bool = False) -> np.ndarray:
    z = mpc(0) if complex_ else mpfr(0)
    return np.full(shape, z, dtype=object)


def arange(n: int) -> np.ndarray:
    """Exact mp integers 0..n-1 (needs an active context)."""
    return np.array([mpfr(i) for i in range(n)], dtype=object)


def ints(values) -> np.ndarray:
    return np.array([mpfr(int(v)) for v in np.ravel(values)],
                    dtype=object).reshape(np.shape(values))


def pi():
    return gmpy2.const_pi()


# ---------------------------------------------------------------------------
# elementwise functions (scalars or object arrays)


def _ufunc(f):
    uf = np.frompyfunc(f, 1, 1)

    def apply(x):
        if isinstance(x, np.ndarray):
            if x.dtype != object:
                x = x.astype(object)
            out = uf(x)
            return out if isinstance(out, np.ndarray) else np.array(out, dtype=object)
        return f(x)
    apply.__name__ = getattr(f, "__name__", "ufunc")
    return apply


def _cot(z):
    return 1 / gmpy2.tan(z)


_to_mpc = _ufunc(lambda v: mpc(v))
_to_mpfr = _ufunc(lambda v: mpfr(v))

exp = _ufunc(gmpy2.exp)
log = _ufunc(gmpy2.log)
sqrt = _ufunc(gmpy2.sqrt)
sin = _ufunc(gmpy2.sin)
cos = _ufunc(gmpy2.cos)
tan = _ufunc(gmpy2.tan)
cot = _ufunc(_cot)
sinh = _ufunc(gmpy2.sinh)
cosh = _ufunc(gmpy2.cosh)
tanh = _ufunc(gmpy2.tanh)
sech = _ufunc(gmpy2.sech)
real = _ufunc(lambda z: z.real)
imag = _ufunc(lambda z: z.imag)
conj = _ufunc(lambda z: z.conjugate())
to_complex = _to_mpc
to_real = _to_mpfr
to_float = np.frompyfunc(float, 1, 1)


def cis(theta):
    """exp(i*theta) for real theta."""
    c, s = cos(theta), sin(theta)
    if isinstance(c, np.ndarray):
        return _cis_pair(c, s)
    return mpc(c, s)


_cis_pair = np.frompyfunc(lambda c, s: mpc(c, s), 2, 1)


def make_complex(re_, im_):
    out = _cis_pair(re_, im_)
    return out if isinstance(out, np.ndarray) else out


def floats(x) -> np.ndarray:
    """Round an mp array to float64 (for plotting and diagnostics only)."""
    return np.asarray(to_float(np.asarray(x, dtype=object)), dtype=float)


def complex_floats(x) -> np.ndarray:
    x = np.asarray(x, dtype=object)
    return floats(real(x)) + 1j * floats(imag(x))


def log10_abs(x) -> np.ndarray:
    """log10|x| as float64, safe for magnitudes outside double range."""
    x = np.asarray(x, dtype=object)
    ax = np.abs(x) if x.size else x
    out = np.empty(x.shape, dtype=float)
    for i, v in enumerate(np.ravel(ax)):
        out.flat[i] = -np.inf if v == 0 else float(gmpy2.log10(v))
    return out


def rms(x):
    """Root-mean-square magnitude of an array."""
    x = np.asarray(x, dtype=object).ravel()
    a = np.abs(x)
    return gmpy2.sqrt(np.dot(a, a) / len(x))


def max_abs(x):
    x = np.asarray(x, dtype=object).ravel()
    return np.max(np.abs(x)) if x.size else mpfr(0)
