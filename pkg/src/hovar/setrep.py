"""Doubleton set representations with QR-based wrapping control.

A state set is ``x + C r + B s`` and a variational set is ``V + A R + Q S``:
point vectors and matrices with small interval parts ``r, s, R, S``.  Each
propagation keeps a point image of the main part and pushes every interval
error through a rigorously inverted orthogonal basis, which keeps the boxes
aligned with the flow instead of the coordinate axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMidpoint
from .interval import Interval, verified_inverse

REORGANIZE_RATIO = 10.0


def _pt(M) -> Interval:
    M = np.asarray(M, dtype=float)
    return Interval._raw(M, M)


def _pivoted_qr(M: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Orthogonal factor of ``M`` with columns ordered by decreasing norm * weight."""
    key = np.linalg.norm(M, axis=0) * weights
    order = np.argsort(-key, kind="stable")
    Q, Rf = np.linalg.qr(M[:, order])
    if not np.isfinite(Q).all():
        raise SingularMidpoint("QR factorization produced non-finite values")
    # fix signs so the basis varies continuously between steps
    signs = np.where(np.diag(Rf) < 0.0, -1.0, 1.0)
    return Q * signs


def _orth_inverse(Q: np.ndarray) -> Interval:
    return verified_inverse(Q, seed=Q.T)


@dataclass(frozen=True, eq=False)
class Doubleton:
    """The set ``x + C r + B s``."""

    x: np.ndarray
    C: np.ndarray
    r: Interval
    B: np.ndarray
    s: Interval

    @property
    def dimension(self) -> int:
        return self.x.shape[0]

    def hull(self) -> Interval:
        return _pt(self.x) + (_pt(self.C) @ self.r + _pt(self.B) @ self.s)

    def image(self, T: Interval) -> Interval:
        """Enclosure of ``T (C r + B s)`` evaluated factor-first."""
        return (T @ _pt(self.C)) @ self.r + (T @ _pt(self.B)) @ self.s


@dataclass(frozen=True, eq=False)
class MatrixDoubleton:
    """The set of matrices ``V + A R + Q S``."""

    V: np.ndarray
    A: np.ndarray
    R: Interval
    Q: np.ndarray
    S: Interval

    @property
    def dimension(self) -> int:
        return self.V.shape[0]

    def hull(self) -> Interval:
        return _pt(self.V) + (_pt(self.A) @ self.R + _pt(self.Q) @ self.S)


def from_box(b) -> Doubleton | MatrixDoubleton:
    """Doubleton of an interval vector or matrix: centre plus identity factors."""
    if not isinstance(b, Interval):
        b = Interval(np.asarray(b, dtype=float))
    c = b.mid
    off = b - c
    n = b.shape[0]
    eye = np.eye(n)
    if b.ndim == 1:
        return Doubleton(c, eye.copy(), off, eye.copy(), Interval(np.zeros(n)))
    if b.ndim == 2:
        return MatrixDoubleton(c, eye.copy(), off, eye.copy(), Interval(np.zeros(b.shape)))
    raise ValueError("from_box needs a vector or a matrix")


def hull(d: Doubleton | MatrixDoubleton) -> Interval:
    return d.hull()


def _split_point(v: Interval):
    """Point centre of ``v`` and the interval residual ``v - centre``."""
    c = v.mid
    return c, v - c


def propagate_state(
    d: Doubleton,
    T: Interval,
    shift,
    tail: Interval,
    reorganize: float | None = REORGANIZE_RATIO,
) -> Doubleton:
    """Doubleton enclosing ``shift + T (C r + B s) + tail``.

    ``T`` is an interval matrix enclosing the transfer, ``shift`` a point or
    thin interval vector and ``tail`` an interval vector.
    """
    T = T if isinstance(T, Interval) else _pt(T)
    shift = shift if isinstance(shift, Interval) else _pt(shift)
    Tm = T.mid
    # main part: the r-directions are moved by the point matrix mid(T)
    C_new = Tm @ d.C
    TC = T @ _pt(d.C)
    dTC = TC - _pt(C_new)
    x_new, resid = _split_point(shift + tail)
    TB = T @ _pt(d.B)
    # the new basis follows the propagated s-part, largest extent first
    B_new = _pivoted_qr(Tm @ d.B, d.s.width + np.finfo(float).tiny)
    Binv = _orth_inverse(B_new)
    s_new = (Binv @ TB) @ d.s + Binv @ (dTC @ d.r + resid)
    out = Doubleton(x_new, C_new, d.r, B_new, s_new)
    if reorganize is not None:
        out = _reorganize(out, reorganize)
    return out


def _reorganize(d: Doubleton, ratio: float) -> Doubleton:
    """Fold the s-part into r once it dominates, keeping the tighter hull."""
    rn = float(np.max(d.r.mag)) if d.r.size else 0.0
    sn = float(np.max(d.s.mag)) if d.s.size else 0.0
    if rn == 0.0 or sn <= ratio * rn:
        return d
    candidates = []
    try:
        # x + C r + B s ⊆ x + C (r + [C^-1 B] s)
        Cinv = verified_inverse(d.C)
        r_new = d.r + (Cinv @ _pt(d.B)) @ d.s
        candidates.append(Doubleton(d.x, d.C, r_new, d.B, Interval(np.zeros(d.dimension))))
    except SingularMidpoint:
        pass
    candidates.append(from_box(d.hull()))
    return min(candidates, key=lambda c: float(np.max(c.hull().width)))


def propagate_matrix(md: MatrixDoubleton, V_step: Interval) -> MatrixDoubleton:
    """Matrix doubleton enclosing ``V_step (V + A R + Q S)``; ``R`` is kept as is."""
    V_step = V_step if isinstance(V_step, Interval) else _pt(V_step)
    Vh = V_step.mid
    Vhp = _pt(Vh)
    VV = Vhp @ _pt(md.V)
    V_new = VV.mid
    AA = Vhp @ _pt(md.A)
    A_new = AA.mid
    dV = V_step - Vhp
    dA = dV @ (_pt(md.V) + _pt(md.A) @ md.R) + (VV - V_new) + (AA - A_new) @ md.R
    if not np.any(md.S.width) and not np.any(md.S.mag):
        # nothing carried in S yet: a rotated basis would only wrap dA
        Q_new = np.eye(md.dimension)
        Qinv = _pt(Q_new)
    else:
        weights = np.max(md.S.width, axis=1) + np.finfo(float).tiny
        Q_new = _pivoted_qr(Vh @ md.Q, weights)
        Qinv = _orth_inverse(Q_new)
    S_new = (Qinv @ (V_step @ _pt(md.Q))) @ md.S + Qinv @ dA
    return MatrixDoubleton(V_new, A_new, md.R, Q_new, S_new)
