"""Outward-rounded interval arithmetic and verified linear algebra."""

from .core import (
    IMatrix,
    Interval,
    IVector,
    down,
    eye,
    hull,
    imatrix,
    intersect,
    interval,
    ivector,
    rsum,
    up,
    zeros,
)
from .linalg import krawczyk_solve, verified_inverse

__all__ = [
    "Interval",
    "IVector",
    "IMatrix",
    "interval",
    "ivector",
    "imatrix",
    "eye",
    "zeros",
    "hull",
    "intersect",
    "down",
    "up",
    "rsum",
    "krawczyk_solve",
    "verified_inverse",
]
