"""Compiled endpoint kernels with exact directed rounding.

Each operation is computed in round-to-nearest, its exact rounding error is
recovered with an error-free transformation (TwoSum, or a fused multiply-add
for products, quotients and square roots),
and the result is stepped one ulp outward only when the error points that
way.  This reproduces round-down/round-up results without touching the FPU
control word.  Where the error-free transformations are not exact (operands
near overflow, products near underflow) the kernels fall back to an
unconditional one-ulp step, which is always safe.
"""

import math

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

_INF = np.inf
_BIG = 2.0**900
_SMALL = 2.0**-900
_TINY = 5e-324  # smallest subnormal


@intrinsic
def _f2i(typingctx, x):
    sig = types.int64(types.float64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], ir.IntType(64))

    return sig, codegen


@intrinsic
def _i2f(typingctx, i):
    sig = types.float64(types.int64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], ir.DoubleType())

    return sig, codegen


@njit(cache=True, inline="always")
def nu(x):
    """Next representable number above ``x``."""
    if x != x or x == _INF:
        return x
    if x == 0.0:
        return 5e-324
    i = _f2i(x)
    # sign-magnitude layout: moving up shrinks the magnitude of negatives
    return _i2f(i + 1 if x > 0.0 else i - 1)


@njit(cache=True, inline="always")
def nd(x):
    """Next representable number below ``x``."""
    return -nu(-x)


@njit(cache=True, inline="always")
def _two_sum_err(a, b, s):
    bv = s - a
    av = s - bv
    return (a - av) + (b - bv)


@intrinsic
def _fma(typingctx, a, b, c):
    """Fused multiply-add ``a * b + c`` with a single rounding."""
    sig = types.float64(types.float64, types.float64, types.float64)

    def codegen(context, builder, signature, args):
        d = ir.DoubleType()
        fn = cgutils.get_or_insert_function(builder.module, ir.FunctionType(d, [d, d, d]), "llvm.fma.f64")
        return builder.call(fn, args)

    return sig, codegen


@njit(cache=True, inline="always")
def _two_prod_err(a, b, p):
    # exact a*b - p whenever it is representable, which holds away from underflow
    return _fma(a, b, -p)


@njit(cache=True, inline="always")
def _prod_exact_ok(a, b, p):
    aa = abs(a)
    bb = abs(b)
    return aa < _BIG and bb < _BIG and aa > _SMALL and bb > _SMALL and abs(p) > _SMALL


@njit(cache=True)
def add_dn(a, b):
    s = a + b
    if not math.isfinite(s):
        return s
    if _two_sum_err(a, b, s) < 0.0:
        return nd(s)
    return s


@njit(cache=True)
def add_up(a, b):
    s = a + b
    if not math.isfinite(s):
        return s
    if _two_sum_err(a, b, s) > 0.0:
        return nu(s)
    return s


@njit(cache=True)
def mul_dn(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not math.isfinite(p):
        return p
    if p == 0.0:
        # underflow: the exact product is a nonzero number of known sign
        return 0.0 if (a > 0.0) == (b > 0.0) else -_TINY
    if not _prod_exact_ok(a, b, p):
        return nd(p)
    if _two_prod_err(a, b, p) < 0.0:
        return nd(p)
    return p


@njit(cache=True)
def mul_up(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not math.isfinite(p):
        return p
    if p == 0.0:
        return _TINY if (a > 0.0) == (b > 0.0) else 0.0
    if not _prod_exact_ok(a, b, p):
        return nu(p)
    if _two_prod_err(a, b, p) > 0.0:
        return nu(p)
    return p


@njit(cache=True)
def _div_residual_sign(a, b, q):
    """Sign of a/b - q, or 2 when it cannot be decided exactly."""
    if a == 0.0:
        return 0
    if not _prod_exact_ok(q, b, q * b) or abs(a) > _BIG or abs(a) < _SMALL:
        return 2
    r = _fma(-q, b, a)
    if r == 0.0:
        return 0
    s = 1 if r > 0.0 else -1
    return s if b > 0.0 else -s


@njit(cache=True)
def div_dn(a, b):
    q = a / b
    if not math.isfinite(q):
        return q
    if q == 0.0 and a != 0.0:
        return 0.0 if (a > 0.0) == (b > 0.0) else -_TINY
    s = _div_residual_sign(a, b, q)
    if s == 2 or s < 0:
        return nd(q)
    return q


@njit(cache=True)
def div_up(a, b):
    q = a / b
    if not math.isfinite(q):
        return q
    if q == 0.0 and a != 0.0:
        return _TINY if (a > 0.0) == (b > 0.0) else 0.0
    s = _div_residual_sign(a, b, q)
    if s == 2 or s > 0:
        return nu(q)
    return q


@njit(cache=True)
def sqrt_dn(x):
    if x <= 0.0:
        return 0.0
    s = math.sqrt(x)
    if not _prod_exact_ok(s, s, s * s) or x > _BIG or x < _SMALL:
        return max(nd(s), 0.0)
    r = _fma(-s, s, x)
    if r < 0.0:
        return nd(s)
    return s


@njit(cache=True)
def sqrt_up(x):
    if x <= 0.0:
        return 0.0
    s = math.sqrt(x)
    if not _prod_exact_ok(s, s, s * s) or x > _BIG or x < _SMALL:
        return nu(s)
    r = _fma(-s, s, x)
    if r > 0.0:
        return nu(s)
    return s


@njit(cache=True, inline="always")
def imul(al, ah, bl, bh):
    # sign case analysis: two directed products except when both straddle zero
    if al >= 0.0:
        if bl >= 0.0:
            return mul_dn(al, bl), mul_up(ah, bh)
        if bh <= 0.0:
            return mul_dn(ah, bl), mul_up(al, bh)
        return mul_dn(ah, bl), mul_up(ah, bh)
    if ah <= 0.0:
        if bl >= 0.0:
            return mul_dn(al, bh), mul_up(ah, bl)
        if bh <= 0.0:
            return mul_dn(ah, bh), mul_up(al, bl)
        return mul_dn(al, bh), mul_up(al, bl)
    if bl >= 0.0:
        return mul_dn(al, bh), mul_up(ah, bh)
    if bh <= 0.0:
        return mul_dn(ah, bl), mul_up(al, bl)
    return min(mul_dn(al, bh), mul_dn(ah, bl)), max(mul_up(al, bl), mul_up(ah, bh))


@njit(cache=True, inline="always")
def idiv(al, ah, bl, bh):
    lo = min(min(div_dn(al, bl), div_dn(al, bh)), min(div_dn(ah, bl), div_dn(ah, bh)))
    hi = max(max(div_up(al, bl), div_up(al, bh)), max(div_up(ah, bl), div_up(ah, bh)))
    return lo, hi


# --- array kernels (1-D, equal length) -------------------------------------


@njit(cache=True)
def add_arrays(al, ah, bl, bh):
    n = al.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i] = add_dn(al[i], bl[i])
        hi[i] = add_up(ah[i], bh[i])
    return lo, hi


@njit(cache=True)
def sub_arrays(al, ah, bl, bh):
    n = al.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i] = add_dn(al[i], -bh[i])
        hi[i] = add_up(ah[i], -bl[i])
    return lo, hi


@njit(cache=True)
def mul_arrays(al, ah, bl, bh):
    n = al.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i], hi[i] = imul(al[i], ah[i], bl[i], bh[i])
    return lo, hi


@njit(cache=True)
def div_arrays(al, ah, bl, bh):
    n = al.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i], hi[i] = idiv(al[i], ah[i], bl[i], bh[i])
    return lo, hi


@njit(cache=True)
def sqrt_arrays(al, ah):
    n = al.shape[0]
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lo[i] = sqrt_dn(al[i])
        hi[i] = sqrt_up(ah[i])
    return lo, hi


@njit(cache=True)
def matmul(al, ah, bl, bh):
    """Interval (n,k) @ (k,m) by the direct triple loop: n*k*m interval products."""
    n, k = al.shape
    m = bl.shape[1]
    lo = np.empty((n, m))
    hi = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            sl = 0.0
            sh = 0.0
            for t in range(k):
                pl, ph = imul(al[i, t], ah[i, t], bl[t, j], bh[t, j])
                sl = add_dn(sl, pl)
                sh = add_up(sh, ph)
            lo[i, j] = sl
            hi[i, j] = sh
    return lo, hi


@njit(cache=True)
def sum_rows(al, ah):
    """Outward-rounded sum over axis 0 of a 2-D array of intervals."""
    k, m = al.shape
    lo = np.zeros(m)
    hi = np.zeros(m)
    for j in range(m):
        sl = 0.0
        sh = 0.0
        for t in range(k):
            sl = add_dn(sl, al[t, j])
            sh = add_up(sh, ah[t, j])
        lo[j] = sl
        hi[j] = sh
    return lo, hi
