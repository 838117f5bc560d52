"""Outward-rounded interval arithmetic on numpy arrays.

An :class:`Interval` holds two float64 arrays ``lo`` and ``hi`` of the same
shape.  Scalars, vectors and matrices are the 0-, 1- and 2-dimensional cases;
``IVector`` and ``IMatrix`` are aliases kept for readability of signatures.

Endpoints are computed by the compiled kernels in :mod:`._kernels`, which
recover the exact rounding error of each operation and step outward only when
the result is inexact.  Exact operations therefore stay exact.
"""

from __future__ import annotations

import numbers
import re
from fractions import Fraction

import numpy as np

from . import _kernels as _k
from ..errors import (
    DivisionByZeroInterval,
    DomainError,
    EmptyIntersection,
    IntervalOverflow,
    ParseError,
)

__all__ = [
    "Interval",
    "IVector",
    "IMatrix",
    "down",
    "up",
    "rsum",
    "interval",
    "ivector",
    "imatrix",
    "eye",
    "zeros",
    "hull",
    "intersect",
]

_INF = np.inf


def down(x):
    return np.nextafter(x, -_INF)


def up(x):
    return np.nextafter(x, _INF)


def _check(lo, hi):
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise IntervalOverflow("NaN bound produced")
        raise IntervalOverflow("bound left the finite range")


# --- raw endpoint kernels -------------------------------------------------


def _flat(*arrays):
    arrays = np.broadcast_arrays(*arrays)
    shape = arrays[0].shape
    return shape, [np.ascontiguousarray(a, dtype=float).ravel() for a in arrays]


def _elementwise(kernel, al, ah, bl, bh):
    shape, (al, ah, bl, bh) = _flat(al, ah, bl, bh)
    lo, hi = kernel(al, ah, bl, bh)
    return lo.reshape(shape), hi.reshape(shape)


def _add(al, ah, bl, bh):
    return _elementwise(_k.add_arrays, al, ah, bl, bh)


def _sub(al, ah, bl, bh):
    return _elementwise(_k.sub_arrays, al, ah, bl, bh)


def _mul(al, ah, bl, bh):
    return _elementwise(_k.mul_arrays, al, ah, bl, bh)


def _div(al, ah, bl, bh):
    if np.any((bl <= 0.0) & (bh >= 0.0)):
        raise DivisionByZeroInterval("divisor contains zero")
    return _elementwise(_k.div_arrays, al, ah, bl, bh)


def rsum(lo, hi, axis):
    """Outward-rounded sum of interval terms along ``axis``."""
    lo = np.moveaxis(np.asarray(lo, dtype=float), axis, 0)
    hi = np.moveaxis(np.asarray(hi, dtype=float), axis, 0)
    rest = lo.shape[1:]
    k = lo.shape[0]
    slo, shi = _k.sum_rows(
        np.ascontiguousarray(lo).reshape(k, -1), np.ascontiguousarray(hi).reshape(k, -1)
    )
    return slo.reshape(rest), shi.reshape(rest)


def _ipow_nonneg(al, ah, k):
    """[al, ah]**k for 0 <= al by binary powering of a nonnegative interval."""
    rl = np.ones_like(al)
    rh = np.ones_like(ah)
    bl, bh = al, ah
    while k:
        if k & 1:
            rl, rh = _mul(rl, rh, bl, bh)
        k >>= 1
        if k:
            bl, bh = _mul(bl, bh, bl, bh)
    return np.maximum(rl, 0.0), rh


def _ipow(al, ah, k):
    if k == 0:
        return np.ones_like(al), np.ones_like(ah)
    if k < 0:
        pl, ph = _ipow(al, ah, -k)
        return _div(np.ones_like(pl), np.ones_like(ph), pl, ph)
    if k % 2 == 0:
        mag = np.maximum(np.abs(al), np.abs(ah))
        mig = np.where((al <= 0) & (ah >= 0), 0.0, np.minimum(np.abs(al), np.abs(ah)))
        return _ipow_nonneg(mig, mag, k)
    # odd powers are monotone; bound each endpoint by its own power
    neg_l = al < 0
    neg_h = ah < 0
    ll, lh = _ipow_nonneg(np.abs(al), np.abs(al), k)
    hl, hh = _ipow_nonneg(np.abs(ah), np.abs(ah), k)
    lo = np.where(neg_l, -lh, ll)
    hi = np.where(neg_h, -hl, hh)
    return lo, hi


def _root_bounds(x, q):
    """Directed-rounded bounds of x**(1/q) for x >= 0 (arrays), verified by powering."""
    x = np.asarray(x, dtype=float)
    c = np.power(x, 1.0 / q)
    lo = c.copy()
    hi = c.copy()
    for _ in range(64):
        _, ph = _ipow_nonneg(lo, lo, q)
        bad = ph > x
        if not bad.any():
            break
        lo = np.where(bad, down(lo), lo)
    for _ in range(64):
        pl, _ = _ipow_nonneg(hi, hi, q)
        bad = pl < x
        if not bad.any():
            break
        hi = np.where(bad, up(hi), hi)
    return np.maximum(lo, 0.0), hi


def _frac_bounds(fr: Fraction):
    """Binary64 enclosure of a rational number."""
    f = float(fr)
    exact = Fraction(f)
    if exact == fr:
        return f, f
    if exact < fr:
        return f, float(up(f))
    return float(down(f)), f


_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _parse_number(text: str):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        try:
            fr = Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational {text!r}") from exc
        return _frac_bounds(fr)
    if not _DECIMAL.match(text):
        raise ParseError(f"bad decimal {text!r}")
    return _frac_bounds(Fraction(text))


# --- the interval type ----------------------------------------------------


class Interval:
    """Array of closed intervals ``[lo, hi]`` with outward rounding.

    Construction from floats treats them as exact binary64 values.  Use
    :meth:`from_string` for decimal literals such as ``"0.1"``.
    """

    __slots__ = ("lo", "hi")
    __array_priority__ = 1000

    def __init__(self, lo, hi=None):
        lo = np.array(lo, dtype=float)
        hi = lo.copy() if hi is None else np.array(hi, dtype=float)
        if lo.shape != hi.shape:
            lo, hi = np.broadcast_arrays(lo, hi)
            lo, hi = lo.copy(), hi.copy()
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise DomainError("NaN endpoint")
        if np.any(lo > hi):
            raise DomainError("lower bound exceeds upper bound")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo, hi):
        obj = object.__new__(cls)
        obj.lo = lo
        obj.hi = hi
        return obj

    @classmethod
    def _checked(cls, lo, hi):
        _check(lo, hi)
        return cls._raw(lo, hi)

    # constructors
    @classmethod
    def point(cls, x):
        x = np.array(x, dtype=float)
        return cls(x, x)

    @classmethod
    def from_string(cls, text: str) -> "Interval":
        """Parse ``"0.1"``, ``"1/3"`` or ``"[a, b]"`` with outward rounding."""
        text = text.strip()
        if text.startswith("["):
            if not text.endswith("]"):
                raise ParseError(f"unterminated interval {text!r}")
            parts = text[1:-1].split(",")
            if len(parts) != 2:
                raise ParseError(f"interval needs two endpoints: {text!r}")
            lo, _ = _parse_number(parts[0])
            _, hi = _parse_number(parts[1])
            return cls(lo, hi)
        lo, hi = _parse_number(text)
        return cls(lo, hi)

    @classmethod
    def from_rational(cls, value) -> "Interval":
        lo, hi = _frac_bounds(Fraction(value))
        return cls(lo, hi)

    # array protocol
    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    @property
    def size(self):
        return self.lo.size

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx):
        return Interval._raw(self.lo[idx], self.hi[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def T(self):
        return Interval._raw(self.lo.T, self.hi.T)

    def reshape(self, *shape):
        return Interval._raw(self.lo.reshape(*shape), self.hi.reshape(*shape))

    def copy(self):
        return Interval._raw(self.lo.copy(), self.hi.copy())

    def __repr__(self):
        if self.ndim == 0:
            return f"Interval([{self.lo!r}, {self.hi!r}])"
        return f"Interval(lo={self.lo!r}, hi={self.hi!r})"

    def __str__(self):
        if self.ndim == 0:
            return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"
        rows = np.array2string(
            np.stack([self.lo, self.hi], axis=-1), precision=17, separator=", "
        )
        return rows

    def __float__(self):
        if self.lo != self.hi:
            raise TypeError("only degenerate intervals convert to float")
        return float(self.lo)

    # set operations
    @property
    def mid(self):
        m = 0.5 * self.lo + 0.5 * self.hi
        return np.where(self.lo == self.hi, self.lo, m)

    @property
    def rad(self):
        m = self.mid
        return np.maximum(_sub(m, m, self.lo, self.lo)[1], _sub(self.hi, self.hi, m, m)[1])

    @property
    def width(self):
        # upward-rounded difference, exact whenever hi - lo is representable
        return _sub(self.hi, self.hi, self.lo, self.lo)[1]

    def diam(self) -> float:
        """Largest entrywise width."""
        if self.size == 0:
            return 0.0
        return float(np.max(self.width))

    @property
    def mag(self):
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    @property
    def mig(self):
        m = np.minimum(np.abs(self.lo), np.abs(self.hi))
        return np.where((self.lo <= 0) & (self.hi >= 0), 0.0, m)

    def is_point(self) -> bool:
        return bool(np.all(self.lo == self.hi))

    def contains(self, x) -> bool:
        """Every entry of x (point or interval) lies in the matching entry."""
        if isinstance(x, Interval):
            return bool(np.all((self.lo <= x.lo) & (x.hi <= self.hi)))
        x = np.asarray(x, dtype=float)
        return bool(np.all((self.lo <= x) & (x <= self.hi)))

    def subset(self, other: "Interval") -> bool:
        return other.contains(self)

    def interior_subset(self, other: "Interval") -> bool:
        """Strict inclusion in the interior of ``other``, entrywise."""
        return bool(np.all((other.lo < self.lo) & (self.hi < other.hi)))

    def contains_zero(self):
        return (self.lo <= 0.0) & (self.hi >= 0.0)

    def intersect(self, other) -> "Interval":
        other = _as_interval(other)
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            raise EmptyIntersection("empty intersection")
        return Interval._raw(lo, hi)

    def hull(self, other) -> "Interval":
        other = _as_interval(other)
        return Interval._raw(np.minimum(self.lo, other.lo), np.maximum(self.hi, other.hi))

    def centered(self):
        """Return (midpoint, self - midpoint)."""
        m = self.mid
        return m, self - m

    def symmetric(self) -> "Interval":
        """The interval [-mag, mag]."""
        m = self.mag
        return Interval._raw(-m, m)

    # arithmetic
    def __neg__(self):
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval._checked(*_add(self.lo, self.hi, other.lo, other.hi))
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return Interval._checked(*_add(self.lo, self.hi, b, b))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Interval):
            return Interval._checked(*_sub(self.lo, self.hi, other.lo, other.hi))
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return Interval._checked(*_sub(self.lo, self.hi, b, b))

    def __rsub__(self, other):
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return Interval._checked(*_sub(b, b, self.lo, self.hi))

    def __mul__(self, other):
        if isinstance(other, Interval):
            return Interval._checked(*_mul(self.lo, self.hi, other.lo, other.hi))
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return Interval._checked(*_mul(self.lo, self.hi, b, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Interval):
            return Interval._checked(*_div(self.lo, self.hi, other.lo, other.hi))
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return Interval._checked(*_div(self.lo, self.hi, b, b))

    def __rtruediv__(self, other):
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return Interval._checked(*_div(b, b, self.lo, self.hi))

    def __pow__(self, k):
        if isinstance(k, Fraction):
            return self.rpow(k)
        if not isinstance(k, numbers.Integral):
            raise TypeError("interval powers take integer or Fraction exponents")
        k = int(k)
        if k < 0 and np.any(self.contains_zero()):
            raise DivisionByZeroInterval("negative power of an interval containing zero")
        return Interval._checked(*_ipow(self.lo, self.hi, k))

    def rpow(self, exponent) -> "Interval":
        """x**(p/q) for a rational exponent; requires x >= 0 (x > 0 if p < 0)."""
        e = Fraction(exponent)
        if e.denominator == 1:
            return self ** int(e.numerator)
        if np.any(self.lo < 0):
            raise DomainError("rational power of a negative interval")
        rlo, _ = _root_bounds(self.lo, e.denominator)
        _, rhi = _root_bounds(self.hi, e.denominator)
        return Interval._raw(rlo, rhi) ** int(e.numerator)

    def sqrt(self) -> "Interval":
        if np.any(self.lo < 0):
            raise DomainError("sqrt of an interval with negative part")
        shape, (lo, hi) = _flat(self.lo, self.hi)
        lo, hi = _k.sqrt_arrays(lo, hi)
        return Interval._checked(lo.reshape(shape), hi.reshape(shape))

    def square(self) -> "Interval":
        return self**2

    def __matmul__(self, other):
        if isinstance(other, Interval):
            return _matmul(self.lo, self.hi, other.lo, other.hi)
        b = _as_point(other)
        if b is None:
            return NotImplemented
        return _matmul(self.lo, self.hi, b, b)

    def __rmatmul__(self, other):
        a = _as_point(other)
        if a is None:
            return NotImplemented
        return _matmul(a, a, self.lo, self.hi)

    def sum(self, axis=None) -> "Interval":
        if axis is None:
            return Interval._checked(*rsum(self.lo.ravel(), self.hi.ravel(), 0))
        return Interval._checked(*rsum(self.lo, self.hi, axis))

    def dot(self, other):
        return self @ other

    # comparisons are set predicates, not orderings
    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    __hash__ = None

    def certainly_lt(self, x) -> bool:
        return bool(np.all(self.hi < _point_or_lo(x)))

    def certainly_gt(self, x) -> bool:
        return bool(np.all(self.lo > _point_or_hi(x)))


IVector = Interval
IMatrix = Interval


def _point_or_lo(x):
    return x.lo if isinstance(x, Interval) else np.asarray(x, dtype=float)


def _point_or_hi(x):
    return x.hi if isinstance(x, Interval) else np.asarray(x, dtype=float)


def _as_point(x):
    if isinstance(x, (numbers.Real, np.ndarray, np.floating, np.integer)):
        return np.asarray(x, dtype=float)
    if isinstance(x, (list, tuple)):
        return np.asarray(x, dtype=float)
    return None


def _as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    p = _as_point(x)
    if p is None:
        raise TypeError(f"cannot interpret {type(x).__name__} as an interval")
    return Interval._raw(p, p)


def _matmul(al, ah, bl, bh):
    """Interval matrix product by the direct triple loop."""
    vec = bl.ndim == 1
    if vec:
        bl = bl[:, None]
        bh = bh[:, None]
    left_vec = al.ndim == 1
    if left_vec:
        al = al[None, :]
        ah = ah[None, :]
    if al.shape[1] != bl.shape[0]:
        raise ValueError(f"shape mismatch {al.shape} @ {bl.shape}")
    c = np.ascontiguousarray
    lo, hi = _k.matmul(c(al, dtype=float), c(ah, dtype=float), c(bl, dtype=float), c(bh, dtype=float))
    if vec:
        lo, hi = lo[:, 0], hi[:, 0]
    if left_vec:
        lo, hi = lo[0], hi[0]
    return Interval._checked(lo, hi)


# --- convenience constructors --------------------------------------------


def interval(lo, hi=None) -> Interval:
    if isinstance(lo, str):
        return Interval.from_string(lo)
    return Interval(lo, hi)


def ivector(entries) -> Interval:
    """Build an interval vector from floats, (lo, hi) pairs, strings or Intervals."""
    los, his = [], []
    for e in entries:
        if isinstance(e, Interval):
            los.append(float(e.lo))
            his.append(float(e.hi))
        elif isinstance(e, str):
            iv = Interval.from_string(e)
            los.append(float(iv.lo))
            his.append(float(iv.hi))
        elif isinstance(e, (tuple, list)):
            los.append(float(e[0]))
            his.append(float(e[1]))
        else:
            los.append(float(e))
            his.append(float(e))
    return Interval(np.array(los), np.array(his))


def imatrix(rows) -> Interval:
    rows = [ivector(r) for r in rows]
    return Interval(np.stack([r.lo for r in rows]), np.stack([r.hi for r in rows]))


def eye(n: int) -> Interval:
    e = np.eye(n)
    return Interval._raw(e, e.copy())


def zeros(shape) -> Interval:
    z = np.zeros(shape)
    return Interval._raw(z, z.copy())


def hull(a, b) -> Interval:
    return _as_interval(a).hull(b)


def intersect(a, b) -> Interval:
    return _as_interval(a).intersect(b)
