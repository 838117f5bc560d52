"""Independent reference computations for the tests.

Nothing here imports the package's arithmetic: fields are restated as plain
Python, Taylor coefficients come from a separate series recurrence run in
80-bit long double, and Padé values use exact fractions.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

LD = np.longdouble


def ld(text) -> np.longdouble:
    """Long double nearest to a decimal string (or exact for floats)."""
    return LD(text) if isinstance(text, str) else LD(float(text))


# --- truncated power series on an expression graph ------------------------------


class _Graph:
    def __init__(self):
        self.nodes = []

    def add(self, kind, *args):
        self.nodes.append((kind, args))
        return _Node(self, len(self.nodes) - 1)


class _Node:
    __array_priority__ = 1000

    def __init__(self, g, i):
        self.g, self.i = g, i

    def _wrap(self, other):
        return other if isinstance(other, _Node) else self.g.add("const", other)

    def __add__(self, o):
        return self.g.add("add", self.i, self._wrap(o).i)

    __radd__ = __add__

    def __sub__(self, o):
        return self.g.add("sub", self.i, self._wrap(o).i)

    def __rsub__(self, o):
        return self.g.add("sub", self._wrap(o).i, self.i)

    def __mul__(self, o):
        return self.g.add("mul", self.i, self._wrap(o).i)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self.g.add("div", self.i, self._wrap(o).i)

    def __rtruediv__(self, o):
        return self.g.add("div", self._wrap(o).i, self.i)

    def __neg__(self):
        return self.g.add("sub", self.g.add("const", 0).i, self.i)

    def __pow__(self, alpha):
        return self.g.add("pow", self.i, alpha)


class TaylorReference:
    """Taylor integrator in long double, vectorised over many initial conditions.

    ``rhs`` maps a list of graph nodes to a list of graph nodes using ``+ - * /``
    and ``** alpha`` (real alpha); constants should be long doubles.
    """

    def __init__(self, rhs, dimension: int, order: int = 24):
        g = _Graph()
        self.vars = [g.add("var", j) for j in range(dimension)]
        self.outs = [o.i for o in rhs(self.vars)]
        self.nodes = g.nodes
        self.n = dimension
        self.order = order

    def coefficients(self, x):
        """Array ``(order + 1, n, batch)`` of normalised Taylor coefficients at ``x``."""
        x = [np.asarray(c, dtype=LD) for c in x]
        batch = np.broadcast(*x).shape
        m = self.order
        vals = [np.zeros((m + 1,) + batch, dtype=LD) for _ in self.nodes]
        xs = np.zeros((m + 1, self.n) + batch, dtype=LD)
        for j, c in enumerate(x):
            xs[0, j] = c
        for k in range(m + 1):
            for i, (kind, a) in enumerate(self.nodes):
                out = vals[i]
                if kind == "var":
                    out[k] = xs[k, a[0]]
                elif kind == "const":
                    if k == 0:
                        out[0] = LD(a[0])
                elif kind == "add":
                    out[k] = vals[a[0]][k] + vals[a[1]][k]
                elif kind == "sub":
                    out[k] = vals[a[0]][k] - vals[a[1]][k]
                elif kind == "mul":
                    p, q = vals[a[0]], vals[a[1]]
                    out[k] = np.sum(p[: k + 1] * q[k::-1], axis=0)
                elif kind == "div":
                    p, q = vals[a[0]], vals[a[1]]
                    out[k] = (p[k] - np.sum(out[:k] * q[k:0:-1], axis=0)) / q[0]
                else:  # pow, via k a0 u_k = sum_j (alpha (k - j) - j) a_{k-j} u_j
                    p, alpha = vals[a[0]], LD(a[1])
                    if k == 0:
                        out[0] = p[0] ** alpha
                    else:
                        j = np.arange(k, dtype=LD).reshape((k,) + (1,) * len(batch))
                        w = alpha * (k - j) - j
                        out[k] = np.sum(w * p[k:0:-1] * out[:k], axis=0) / (k * p[0])
            if k < m:
                for j in range(self.n):
                    xs[k + 1, j] = vals[self.outs[j]][k] / (k + 1)
        return xs

    def step(self, x, h):
        c = self.coefficients(x)
        h = LD(h)
        acc = c[-1]
        for k in range(len(c) - 2, -1, -1):
            acc = acc * h + c[k]
        return acc

    def flow(self, x, h, substeps: int = 4):
        x = np.asarray(x, dtype=LD)
        dt = LD(h) / substeps
        for _ in range(substeps):
            x = self.step(x, dt)
        return x

    def trajectory(self, x0, steps, substeps: int = 4):
        """States after each step length in ``steps`` (a list of floats)."""
        x = np.asarray(x0, dtype=LD)
        out = []
        for h in steps:
            x = self.flow(x, h, substeps)
            out.append(x)
        return out


# --- the benchmark fields, restated ---------------------------------------------


def lorenz_rhs(s):
    x, y, z = s
    return [LD(10) * (y - x), x * (LD(28) - z) - y, x * y - LD(8) / LD(3) * z]


def henon_heiles_rhs(s):
    x, y, u, v = s
    return [u, v, LD(0) - x - LD(2) * x * y, x * x - y - y * y]


def pcr3bp_rhs(s, mu=ld("0.0009537")):
    x, y, u, v = s
    a = (x + mu) * (x + mu) + y * y
    b = (x - LD(1) + mu) * (x - LD(1) + mu) + y * y
    ra, rb = a ** LD(-1.5), b ** LD(-1.5)
    return [
        u,
        v,
        LD(2) * v + x - (LD(1) - mu) * (x + mu) * ra - mu * (x - LD(1) + mu) * rb,
        LD(0) - LD(2) * u + y - (LD(1) - mu) * y * ra - mu * y * rb,
    ]


def ks10_rhs(s, nu=ld("0.127")):
    a = list(s)
    N = len(a)
    out = []
    for k in range(1, N + 1):
        e = LD(k * k) * (LD(1) - nu * LD(k * k)) * a[k - 1]
        for n in range(1, k):
            e = e - LD(k) * a[n - 1] * a[k - n - 1]
        for n in range(1, N - k + 1):
            e = e + LD(2 * k) * a[n - 1] * a[n + k - 1]
        out.append(e)
    return out


def rossler_rhs(s, a=ld("5.7"), b=ld("0.2")):
    x, y, z = s
    return [LD(0) - y - z, x + b * y, b + z * (x - a)]


REFERENCE_FIELDS = {
    "lorenz": (lorenz_rhs, 3),
    "henon_heiles": (henon_heiles_rhs, 4),
    "pcr3bp": (pcr3bp_rhs, 4),
    "ks10": (ks10_rhs, 10),
    "rossler": (rossler_rhs, 3),
}


# ks10 has many small products; its stiff modes are tiny, so a lower order suffices
REFERENCE_ORDER = {"ks10": 14}


def reference(name: str, order: int | None = None) -> TaylorReference:
    rhs, n = REFERENCE_FIELDS[name]
    return TaylorReference(rhs, n, order or REFERENCE_ORDER.get(name, 24))


# --- finite-difference monodromy ------------------------------------------------


def fd_monodromy(ref: TaylorReference, x0, steps, delta: float = 1e-4, substeps: int = 4):
    """Derivative of the composed flow by Richardson-extrapolated central differences.

    Returns ``(states, D, err)`` with one entry per step: the reference
    states, the derivative estimates and an entrywise error estimate.  A
    single point ``x0`` of shape ``(n,)`` gives ``(n,)`` and ``(n, n)``
    arrays; a batch ``(n, B)`` gives ``(n, B)`` and ``(n, n, B)``.  All
    perturbed copies run in one batch.
    """
    n = ref.n
    x0 = np.asarray(x0, dtype=LD)
    single = x0.ndim == 1
    X0 = x0[:, None] if single else x0
    B = X0.shape[1]
    cols = [X0]
    for d in (LD(delta), LD(delta) / 2):
        for j in range(n):
            e = np.zeros((n, 1), dtype=LD)
            e[j] = d
            cols += [X0 + e, X0 - e]
    batch = np.concatenate(cols, axis=1)
    traj = ref.trajectory(batch, steps, substeps)

    def block(X, k):
        return X[:, k * B:(k + 1) * B]

    states, Ds, errs = [], [], []
    for X in traj:
        D = []
        for s, d in enumerate((LD(delta), LD(delta) / 2)):
            base = 1 + 2 * n * s
            D.append(np.stack([(block(X, base + 2 * j) - block(X, base + 2 * j + 1)) / (2 * d)
                               for j in range(n)], axis=1))
        rich = (4 * D[1] - D[0]) / 3
        # the extrapolation error is far below the change it made; rounding
        # in the differences is eps * |x| / delta
        centre = block(X, 0)
        noise = 8 * np.finfo(LD).eps * (np.max(np.abs(centre), axis=0) + 1) / LD(delta)
        err = np.abs(rich - D[1]) + noise
        if single:
            centre, rich, err = centre[:, 0], rich[..., 0], err[..., 0]
        states.append(centre)
        Ds.append(rich)
        errs.append(err)
    return states, Ds, errs


# --- exact and extended-precision scalars ---------------------------------------


def pade_exp(p: int, q: int, z) -> Fraction:
    """(p, q) Padé approximant of exp at ``z``: numerator degree p, denominator q."""
    z = Fraction(z)
    fact = math.factorial
    num = sum(Fraction(fact(p + q - j) * fact(p), fact(p + q) * fact(j) * fact(p - j)) * z**j for j in range(p + 1))
    den = sum(Fraction(fact(p + q - j) * fact(q), fact(p + q) * fact(j) * fact(q - j)) * (-z) ** j for j in range(q + 1))
    return num / den


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def exp_mp(x, dps: int = 40) -> mpmath.mpf:
    """``exp(x)`` for a float or an exact fraction."""
    with mpmath.workdps(dps):
        return mpmath.exp(_mpf(x))


def sqrt_mp(x, dps: int = 40) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return mpmath.sqrt(_mpf(x))


def ho_coefficient_oracle(q: int, p: int, i: int) -> Fraction:
    """c_i^{q,p} = q! (q+p-i)! / ((q+p)! (q-i)!), from the factorial definition."""
    fact = math.factorial
    return Fraction(fact(q) * fact(q + p - i), fact(q + p) * fact(q - i))

