"""Vector fields, their evaluation over boxes and Taylor jets of the flow."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivisionByZeroInterval, DomainError, IntervalOverflow
from ..interval import Interval
from . import _jetkernel as K
from .expr import compile_program, parse_program


class VectorField:
    """Autonomous field ``x' = f(x)`` compiled from the text grammar in :mod:`.expr`.

    Instances are immutable.  ``with_params`` returns a recompiled copy.
    """

    def __init__(self, text: str, name: str | None = None, **params):
        names, values, equations = parse_program(text, params)
        tape, var_nodes, outs = compile_program(names, values, equations)
        self.text = text
        self.name = name
        self.names = tuple(names)
        self.params = dict(values)
        self.equations = dict(equations)
        self._tape = tape.arrays()
        self._var_nodes = np.array(var_nodes, dtype=np.int64)
        self._outs = np.array(outs, dtype=np.int64)

    @property
    def dimension(self) -> int:
        return len(self.names)

    def with_params(self, **params) -> "VectorField":
        merged = {**self.params, **params}
        return VectorField(self.text, name=self.name, **merged)

    def __repr__(self):
        label = self.name or "VectorField"
        ps = ", ".join(f"{k}={v.mid:g}" for k, v in self.params.items())
        return f"<{label} n={self.dimension}{' ' + ps if ps else ''}>"

    # -- raw coefficient arrays ----------------------------------------------

    def coefficients(self, xlo, xhi, order: int, variational: bool):
        """Arrays ``(lo, hi, mults)`` of shape ``(n, order + 1, ncol)``.

        ``ncol`` is ``n + 1`` when ``variational`` else 1; column 0 is the
        state coefficient, column ``1 + j`` its derivative in ``x_j``.
        """
        n = self.dimension
        xlo = np.ascontiguousarray(xlo, dtype=float).reshape(n)
        xhi = np.ascontiguousarray(xhi, dtype=float).reshape(n)
        ops, aa, bb, clo, chi = self._tape
        ncol = n + 1 if variational else 1
        lo, hi, mults, status = K.jet_kernel(
            ops, aa, bb, clo, chi, self._var_nodes, self._outs, xlo, xhi, int(order), ncol
        )
        if status == K.ZERO_DIVISOR:
            raise DivisionByZeroInterval(f"{self.name or 'field'}: divisor encloses zero")
        if status == K.NEG_RADICAND:
            raise DomainError(f"{self.name or 'field'}: square root of a negative interval")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise IntervalOverflow(f"{self.name or 'field'}: Taylor coefficient overflow")
        return lo, hi, mults


@dataclass(frozen=True, eq=False)
class Jet:
    """Normalized Taylor coefficients of the flow at a set.

    ``phi[i]`` encloses the i-th normalized time derivative of every solution
    through the input set.  ``psi[i]`` (C1 jets only) encloses the same
    coefficient of the variational solution started from the identity.
    """

    order: int
    lo: np.ndarray
    hi: np.ndarray
    mults: int

    @property
    def variational(self) -> bool:
        return self.lo.shape[2] > 1

    @property
    def dimension(self) -> int:
        return self.lo.shape[0]

    def coeff(self, i: int) -> Interval:
        return Interval._raw(self.lo[:, i, 0].copy(), self.hi[:, i, 0].copy())

    def dcoeff(self, i: int) -> Interval:
        if not self.variational:
            raise ValueError("jet carries no variational part")
        return Interval._raw(self.lo[:, i, 1:].copy(), self.hi[:, i, 1:].copy())

    def eval(self, t, upto: int | None = None, weights=None):
        """Series ``sum_{i<=upto} w_i t^i coeff(i)`` and, for C1 jets, its variational part.

        ``t`` is a float or an Interval scalar (``[0, h]`` for range
        enclosures).  ``weights`` are optional Interval scalars or exact
        floats, one per term.  Returns ``(state, matrix_or_None)``.
        """
        upto = self.order if upto is None else upto
        if not 0 <= upto <= self.order:
            raise ValueError(f"series degree {upto} exceeds jet order {self.order}")
        if isinstance(t, Interval):
            tlo, thi = float(t.lo), float(t.hi)
        else:
            tlo = thi = float(t)
        if weights is None:
            wlo = whi = np.ones(upto + 1)
        elif isinstance(weights, Interval):
            wlo, whi = weights.lo, weights.hi
        else:
            wlo = whi = np.asarray(weights, dtype=float)
        lo, hi = K.series_eval(
            self.lo, self.hi, upto, np.ascontiguousarray(wlo, dtype=float),
            np.ascontiguousarray(whi, dtype=float), tlo, thi,
        )
        state = Interval._raw(lo[:, 0].copy(), hi[:, 0].copy())
        matrix = Interval._raw(lo[:, 1:].copy(), hi[:, 1:].copy()) if self.variational else None
        return state, matrix

    @property
    def phi(self) -> list[Interval]:
        return [self.coeff(i) for i in range(self.order + 1)]

    @property
    def psi(self) -> list[Interval] | None:
        if not self.variational:
            return None
        return [self.dcoeff(i) for i in range(self.order + 1)]


def _box(F: VectorField, x) -> Interval:
    x = x if isinstance(x, Interval) else Interval(np.asarray(x, dtype=float))
    if x.shape != (F.dimension,):
        raise ValueError(f"expected a vector of length {F.dimension}, got shape {x.shape}")
    return x


def c0_jet(F: VectorField, x, m: int) -> Jet:
    """Coefficients ``phi[0..m]`` of the flow through the box ``x``."""
    if m < 0:
        raise ValueError("order must be nonnegative")
    x = _box(F, x)
    lo, hi, mults = F.coefficients(x.lo, x.hi, m, variational=False)
    return Jet(m, lo, hi, mults)


def c1_jet(F: VectorField, x, m: int) -> Jet:
    """Coefficients ``phi[0..m]`` and ``psi[0..m]`` through the box ``x``."""
    if m < 0:
        raise ValueError("order must be nonnegative")
    x = _box(F, x)
    lo, hi, mults = F.coefficients(x.lo, x.hi, m, variational=True)
    return Jet(m, lo, hi, mults)


def eval_field(F: VectorField, x) -> Interval:
    """Enclosure of ``{f(v) : v in x}``."""
    return c0_jet(F, x, 1).coeff(1)


def jacobian(F: VectorField, x) -> Interval:
    """Enclosure of ``{Df(v) : v in x}``."""
    return c1_jet(F, x, 1).dcoeff(1)


def divergence(F: VectorField, x) -> Interval:
    """Enclosure of the trace of ``Df`` over ``x``."""
    J = jacobian(F, x)
    n = F.dimension
    return Interval._raw(J.lo[np.arange(n), np.arange(n)], J.hi[np.arange(n), np.arange(n)]).sum()
