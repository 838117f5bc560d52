"""Verified linear algebra: Krawczyk solve and rigorous inversion of point matrices."""

from __future__ import annotations

import numpy as np

from ..errors import SingularMidpoint
from .core import Interval, down, eye, rsum, up


def _approx_inverse(M: np.ndarray) -> np.ndarray:
    try:
        C = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularMidpoint("midpoint matrix is singular") from exc
    if not np.isfinite(C).all():
        raise SingularMidpoint("midpoint inverse is not finite")
    return C


def krawczyk_solve(A: Interval, b: Interval, x0: Interval, iterations: int = 1) -> Interval:
    """Enclose all solutions of A x = b (A in [A], b in [b]) that lie in ``x0``.

    One pass evaluates
    ``K = xm + C (b - A xm) + (Id - C A)(x0 - xm)`` with ``C ~ mid(A)^-1`` and
    returns ``K & x0``.  Further passes restart from the result.  ``b`` may be
    a vector or a matrix of right-hand sides.
    """
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("krawczyk_solve needs a square matrix")
    C = _approx_inverse(A.mid)
    n = A.shape[0]
    S = eye(n) - C @ A
    x = x0
    for _ in range(iterations):
        xm = x.mid
        K = xm + C @ (b - A @ xm) + S @ (x - xm)
        x = K.intersect(x)
    return x


def verified_inverse(A, seed=None) -> Interval:
    """Interval matrix containing the exact inverse of the point matrix ``A``.

    ``seed`` is an approximate inverse; pass ``A.T`` for nearly orthogonal
    matrices to skip the floating-point inversion.  With ``E = Id - seed A``
    and ``||E|| <= beta < 1`` the Neumann series gives the a-priori box
    ``seed +- beta ||seed|| / (1 - beta)``, which one Krawczyk pass
    ``seed + E X`` then tightens.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("verified_inverse needs a square matrix")
    R = _approx_inverse(A) if seed is None else np.asarray(seed, dtype=float)
    E = eye(n) - Interval._raw(R, R) @ A
    beta = float(np.max(rsum(E.mag, E.mag, 1)[1]))
    if not beta < 1.0:
        raise SingularMidpoint(f"inverse not verified (||Id - RA|| = {beta:.3g})")
    normR = float(np.max(rsum(np.abs(R), np.abs(R), 1)[1]))
    delta = up(up(beta * normR) / down(1.0 - beta))
    X = Interval._raw(down(R - delta), up(R + delta))
    K = R + E @ X
    return K.intersect(X)

