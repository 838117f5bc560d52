"""Compiled Taylor-coefficient recurrences over an expression tape.

Every tape node owns an array ``[k, c]`` of interval coefficients: ``k`` is the
normalized time-derivative index and ``c = 0`` holds the value while
``c = 1..n`` hold its derivatives with respect to the initial condition (the
variational part, present only for C1 jets).
"""

import numpy as np
from numba import njit

from ..interval._kernels import add_dn, add_up, imul, idiv, sqrt_dn, sqrt_up

CONST = 0
VAR = 1
ADD = 2
SUB = 3
NEG = 4
MUL = 5
MULC = 6
DIV = 7
DIVC = 8
SQRT = 9

OK = 0
ZERO_DIVISOR = 1
NEG_RADICAND = 2


@njit(cache=True)
def jet_kernel(ops, aa, bb, clo, chi, var_nodes, outs, xlo, xhi, K, ncol):
    """Coefficients 0..K of the flow (and variational flow if ``ncol > 1``).

    Returns ``(lo, hi, mults, status)`` with ``lo``/``hi`` of shape
    ``(n, K + 1, ncol)`` for the state variables.
    """
    N = ops.shape[0]
    n = xlo.shape[0]
    lo = np.zeros((N, K + 1, ncol))
    hi = np.zeros((N, K + 1, ncol))
    out_lo = np.zeros((n, K + 1, ncol))
    out_hi = np.zeros((n, K + 1, ncol))
    mults = 0
    for i in range(N):
        if ops[i] == CONST:
            lo[i, 0, 0] = clo[aa[i]]
            hi[i, 0, 0] = chi[aa[i]]
        elif ops[i] == VAR:
            j = aa[i]
            lo[i, 0, 0] = xlo[j]
            hi[i, 0, 0] = xhi[j]
            if ncol > 1:
                lo[i, 0, 1 + j] = 1.0
                hi[i, 0, 1 + j] = 1.0
    for k in range(K + 1):
        if k > 0:
            fk = float(k)
            for j in range(n):
                v = var_nodes[j]
                o = outs[j]
                for c in range(ncol):
                    lo[v, k, c], hi[v, k, c] = idiv(lo[o, k - 1, c], hi[o, k - 1, c], fk, fk)
        if k == K:
            break
        for i in range(N):
            op = ops[i]
            if op == CONST or op == VAR:
                continue
            a = aa[i]
            b = bb[i]
            if op == ADD:
                for c in range(ncol):
                    lo[i, k, c] = add_dn(lo[a, k, c], lo[b, k, c])
                    hi[i, k, c] = add_up(hi[a, k, c], hi[b, k, c])
            elif op == SUB:
                for c in range(ncol):
                    lo[i, k, c] = add_dn(lo[a, k, c], -hi[b, k, c])
                    hi[i, k, c] = add_up(hi[a, k, c], -lo[b, k, c])
            elif op == NEG:
                for c in range(ncol):
                    lo[i, k, c] = -hi[a, k, c]
                    hi[i, k, c] = -lo[a, k, c]
            elif op == MULC:
                cl = lo[b, 0, 0]
                ch = hi[b, 0, 0]
                for c in range(ncol):
                    lo[i, k, c], hi[i, k, c] = imul(lo[a, k, c], hi[a, k, c], cl, ch)
                mults += ncol
            elif op == DIVC:
                cl = lo[b, 0, 0]
                ch = hi[b, 0, 0]
                for c in range(ncol):
                    lo[i, k, c], hi[i, k, c] = idiv(lo[a, k, c], hi[a, k, c], cl, ch)
            elif op == MUL:
                sl = 0.0
                sh = 0.0
                for t in range(k + 1):
                    pl, ph = imul(lo[a, t, 0], hi[a, t, 0], lo[b, k - t, 0], hi[b, k - t, 0])
                    sl = add_dn(sl, pl)
                    sh = add_up(sh, ph)
                lo[i, k, 0] = sl
                hi[i, k, 0] = sh
                mults += k + 1
                for c in range(1, ncol):
                    lo[i, k, c] = 0.0
                    hi[i, k, c] = 0.0
                for t in range(k + 1):
                    ual = lo[a, t, 0]
                    uah = hi[a, t, 0]
                    vbl = lo[b, k - t, 0]
                    vbh = hi[b, k - t, 0]
                    for c in range(1, ncol):
                        pl, ph = imul(ual, uah, lo[b, k - t, c], hi[b, k - t, c])
                        ql, qh = imul(lo[a, t, c], hi[a, t, c], vbl, vbh)
                        lo[i, k, c] = add_dn(lo[i, k, c], add_dn(pl, ql))
                        hi[i, k, c] = add_up(hi[i, k, c], add_up(ph, qh))
                mults += 2 * (k + 1) * (ncol - 1)
            elif op == DIV:
                vl = lo[b, 0, 0]
                vh = hi[b, 0, 0]
                if vl <= 0.0 and vh >= 0.0:
                    return out_lo, out_hi, mults, ZERO_DIVISOR
                # w = u / v from u = v * w, solved for the newest coefficient
                sl = lo[a, k, 0]
                sh = hi[a, k, 0]
                for t in range(1, k + 1):
                    pl, ph = imul(lo[b, t, 0], hi[b, t, 0], lo[i, k - t, 0], hi[i, k - t, 0])
                    sl = add_dn(sl, -ph)
                    sh = add_up(sh, -pl)
                mults += k
                lo[i, k, 0], hi[i, k, 0] = idiv(sl, sh, vl, vh)
                for c in range(1, ncol):
                    sl = lo[a, k, c]
                    sh = hi[a, k, c]
                    for t in range(1, k + 1):
                        pl, ph = imul(lo[b, t, 0], hi[b, t, 0], lo[i, k - t, c], hi[i, k - t, c])
                        sl = add_dn(sl, -ph)
                        sh = add_up(sh, -pl)
                    for t in range(k + 1):
                        pl, ph = imul(lo[b, t, c], hi[b, t, c], lo[i, k - t, 0], hi[i, k - t, 0])
                        sl = add_dn(sl, -ph)
                        sh = add_up(sh, -pl)
                    lo[i, k, c], hi[i, k, c] = idiv(sl, sh, vl, vh)
                mults += (2 * k + 1) * (ncol - 1)
            elif op == SQRT:
                if k == 0:
                    if lo[a, 0, 0] < 0.0:
                        return out_lo, out_hi, mults, NEG_RADICAND
                    lo[i, 0, 0] = sqrt_dn(lo[a, 0, 0])
                    hi[i, 0, 0] = sqrt_up(hi[a, 0, 0])
                w0l = 2.0 * lo[i, 0, 0]
                w0h = 2.0 * hi[i, 0, 0]
                if (k > 0 or ncol > 1) and w0l <= 0.0:
                    return out_lo, out_hi, mults, ZERO_DIVISOR
                if k > 0:
                    sl = lo[a, k, 0]
                    sh = hi[a, k, 0]
                    for t in range(1, k):
                        pl, ph = imul(lo[i, t, 0], hi[i, t, 0], lo[i, k - t, 0], hi[i, k - t, 0])
                        sl = add_dn(sl, -ph)
                        sh = add_up(sh, -pl)
                    mults += k - 1
                    lo[i, k, 0], hi[i, k, 0] = idiv(sl, sh, w0l, w0h)
                for c in range(1, ncol):
                    sl = lo[a, k, c]
                    sh = hi[a, k, c]
                    for t in range(1, k + 1):
                        pl, ph = imul(lo[i, t, 0], hi[i, t, 0], lo[i, k - t, c], hi[i, k - t, c])
                        sl = add_dn(sl, -2.0 * ph)
                        sh = add_up(sh, -2.0 * pl)
                    lo[i, k, c], hi[i, k, c] = idiv(sl, sh, w0l, w0h)
                mults += k * (ncol - 1)
    for j in range(n):
        out_lo[j] = lo[var_nodes[j]]
        out_hi[j] = hi[var_nodes[j]]
    return out_lo, out_hi, mults, OK


@njit(cache=True)
def series_eval(lo, hi, upto, wlo, whi, tlo, thi):
    """Weighted Horner sum ``sum_i w_i T^i c_i`` for i = 0..upto, per entry.

    ``lo``/``hi`` have shape ``(n, K + 1, ncol)``; ``T = [tlo, thi]`` is an
    interval time (a point when ``tlo == thi``).  All evaluations use the same
    ``T`` for every term, which is valid because the series is a polynomial
    in one time variable.
    """
    n = lo.shape[0]
    ncol = lo.shape[2]
    out_lo = np.empty((n, ncol))
    out_hi = np.empty((n, ncol))
    for r in range(n):
        for c in range(ncol):
            sl, sh = imul(lo[r, upto, c], hi[r, upto, c], wlo[upto], whi[upto])
            for i in range(upto - 1, -1, -1):
                sl, sh = imul(sl, sh, tlo, thi)
                pl, ph = imul(lo[r, i, c], hi[r, i, c], wlo[i], whi[i])
                sl = add_dn(sl, pl)
                sh = add_up(sh, ph)
            out_lo[r, c] = sl
            out_hi[r, c] = sh
    return out_lo, out_hi
