"""Taylor predictor, Hermite-Obreshkov corrector and the integrator that chains them.

One step from a set ``[x_k]`` goes: rough enclosure over ``[0, h]``, the
Taylor predictor (a C1-Lohner step), then optionally the implicit
Hermite-Obreshkov corrector, which solves the interpolation identity
``Psi_{p,q}(h, x_k) = Psi_{q,p}(-h, x_{k+1})`` for ``x_{k+1}`` by one
Krawczyk-type pass and intersects the result with the predictor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .enclosure import H_MIN, PAD, RoughEnclosure, rough_enclosure
from .errors import EmptyIntersection, HovarError, SingularMidpoint, StepError
from .interval import Interval, verified_inverse
from .setrep import Doubleton, MatrixDoubleton, from_box, propagate_matrix, propagate_state
from .vectorfield import Jet, VectorField, c0_jet, c1_jet

log = logging.getLogger(__name__)

ALGORITHMS = ("ho", "lohner")
# tolerance mode accepts remainders up to this multiple of tol
REMAINDER_SLACK = 10.0
REMAINDER_CUTS = 4


# --- coefficients and models -------------------------------------------------


@dataclass(frozen=True)
class MethodOrder:
    """Predictor order ``m`` and corrector split ``p + q = m``."""

    m: int
    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be at least 1")
        if self.p + self.q != self.m:
            raise ValueError(f"p + q must equal m (got {self.p} + {self.q} != {self.m})")

    @classmethod
    def split(cls, m: int, p: int | None = None, q: int | None = None) -> "MethodOrder":
        """Default split ``p = ceil(m/2)``, ``q = floor(m/2)``; either part may be given."""
        if p is None and q is None:
            p, q = (m + 1) // 2, m // 2
        elif p is None:
            p = m - q
        elif q is None:
            q = m - p
        return cls(m, p, q)


def ho_coefficient(q: int, p: int, i: int) -> Fraction:
    """``c_i^{q,p} = binom(q, i) / binom(p + q, i)`` as an exact rational."""
    if not 0 <= i <= q:
        raise ValueError("need 0 <= i <= q")
    return Fraction(math.comb(q, i), math.comb(p + q, i))


@lru_cache(maxsize=None)
def _weights(q: int, p: int, sign: int) -> tuple[np.ndarray, np.ndarray]:
    """Outward-rounded ``sign^i c_i^{q,p}`` for i = 0..q."""
    lo = np.empty(q + 1)
    hi = np.empty(q + 1)
    for i in range(q + 1):
        c = Interval.from_rational(ho_coefficient(q, p, i) * (sign**i))
        lo[i], hi[i] = float(c.lo), float(c.hi)
    lo.flags.writeable = False
    hi.flags.writeable = False
    return lo, hi


def ho_weights(q: int, p: int, sign: int = 1) -> Interval:
    lo, hi = _weights(q, p, sign)
    return Interval._raw(lo.copy(), hi.copy())


def psi_operator(jet: Jet, h: float, q: int, p: int, derivative: bool = False):
    """Enclosure of ``Psi_{q,p}(h, u) = sum_{i<=q} c_i^{q,p} h^i u[i]``.

    A negative ``h`` gives the backward operator.  With ``derivative`` the
    pair ``(value, D_x value)`` is returned, the latter assembled from the
    variational coefficients.
    """
    if jet.order < q:
        raise ValueError(f"jet order {jet.order} is below q = {q}")
    sign = -1 if h < 0 else 1
    w = ho_weights(q, p, sign)
    value, dvalue = jet.eval(abs(h), upto=q, weights=w)
    return (value, dvalue) if derivative else value


def step_ratio_g(m: int) -> float:
    """``g(m) = binom(m, ceil(m/2))^(1/(m+1))``, the ratio of HO to Taylor step sizes."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return math.comb(m, (m + 1) // 2) ** (1.0 / (m + 1))


def cost_model(n: int, m: int, c_f: float) -> tuple[float, float, float]:
    """Multiplication counts ``(C_LO, C_HO, C_HO / C_LO)`` of one step."""
    if n < 1 or m < 1 or c_f < 0:
        raise ValueError("need n, m >= 1 and c_f >= 0")
    c_lo = c_f * (2 * n + 1) * (m + 2) ** 2 + 17 * n**3
    c_ho = c_lo + 0.25 * c_f * (n + 1) * (m + 2) * (m + 4) + 6 * n**3
    return c_lo, c_ho, c_ho / c_lo


def predict_step(jet: Jet, tol: float, m: int, h_min: float = H_MIN, h_max: float = math.inf):
    """Step sizes ``(h_LO, h_HO)`` keeping the local truncation error near ``tol``.

    ``jet`` must have order at least ``m + 1``.
    """
    norm = float(np.max(jet.coeff(m + 1).mag))
    if norm == 0.0:
        return h_max, h_max
    h_lo = (tol / norm) ** (1.0 / (m + 1))
    h_ho = step_ratio_g(m) * h_lo
    clamp = lambda h: min(max(h, h_min), h_max)  # noqa: E731
    return clamp(h_lo), clamp(h_ho)


# --- predictor and corrector -------------------------------------------------


@dataclass(frozen=True, eq=False)
class PredictorResult:
    """Output of the Taylor predictor for one step of length ``h``.

    ``x_next0`` and ``V0`` enclose the flow and its derivative at time ``h``;
    ``A`` is the Taylor sum of the variational coefficients, ``y0`` the sum
    at the centre and ``r0``/``R0`` the Lagrange remainders.
    """

    h: float
    x_next0: Interval
    r0: Interval
    V0: Interval | None
    R0: Interval | None
    A: Interval
    y0: Interval
    y: Interval


def _as_doubleton(x) -> Doubleton:
    if isinstance(x, Doubleton):
        return x
    return from_box(x if isinstance(x, Interval) else Interval(np.asarray(x, dtype=float)))


def predictor(
    F: VectorField,
    x_k,
    enc: RoughEnclosure,
    m: int,
    jet_x: Jet | None = None,
    jet_c: Jet | None = None,
    box: Interval | None = None,
) -> PredictorResult:
    """Taylor step of order ``m`` over ``enc.h`` in mean-value form.

    ``x_k`` is a box or a :class:`Doubleton`; ``box`` optionally encloses it
    more tightly than its hull.
    """
    d = _as_doubleton(x_k)
    box = d.hull() if box is None else box
    h = enc.h
    if jet_x is None:
        jet_x = c1_jet(F, box, m)
    if jet_c is None:
        jet_c = c0_jet(F, d.x, m)
    y, A = jet_x.eval(h, upto=m)
    y0, _ = jet_c.eval(h, upto=m)
    x_next0 = (y0 + d.image(A)).intersect(y) + enc.rem
    if enc.Rem is not None:
        V0 = A + enc.Rem
    else:
        V0 = None
    return PredictorResult(h, x_next0, enc.rem, V0, enc.Rem, A, y0, y)


@dataclass(frozen=True, eq=False)
class CorrectorResult:
    x_next: Interval
    V: Interval | None
    transfer: Interval
    shift: np.ndarray
    tail: Interval
    mults: int = 0


def corrector(
    F: VectorField,
    x_k,
    pred: PredictorResult,
    p: int,
    q: int,
    h: float | None = None,
    jet_x: Jet | None = None,
    jet_c: Jet | None = None,
    box: Interval | None = None,
) -> CorrectorResult:
    """Hermite-Obreshkov correction of a predictor result.

    Raises :class:`SingularMidpoint` when the implicit Jacobian cannot be
    inverted; callers fall back to the predictor.
    """
    d = _as_doubleton(x_k)
    h = pred.h if h is None else h
    m = p + q
    box = d.hull() if box is None else box
    if jet_x is None:
        jet_x = c1_jet(F, box, m)
    if jet_c is None:
        jet_c = c0_jet(F, d.x, m)
    x0 = pred.x_next0
    xh0 = x0.mid
    jet_x0 = c1_jet(F, x0, q)
    jet_xh0 = c0_jet(F, xh0, q)
    mults = jet_x0.mults + jet_xh0.mults

    fwd = ho_weights(p, q, 1)
    bwd = ho_weights(q, p, -1)
    # delta = Psi_{p,q}(h, xhat) - Psi_{q,p}(-h, xhat0)
    delta = jet_c.eval(h, upto=p, weights=fwd)[0] - jet_xh0.eval(h, upto=q, weights=bwd)[0]
    cq = Interval.from_rational(ho_coefficient(q, p, q) * (-1) ** q)
    eps = cq * pred.r0
    _, Jp = jet_x.eval(h, upto=p, weights=fwd)
    _, Jm = jet_x0.eval(h, upto=q, weights=bwd)
    Jinv = verified_inverse(Jm.mid)
    n = F.dimension
    S = Interval(np.eye(n)) - Jinv @ Jm
    r = Jinv @ (delta + eps) + S @ (x0 - xh0)
    T = Jinv @ Jp
    x_next = (xh0 + d.image(T) + r).intersect(x0)
    V = None
    if pred.V0 is not None:
        R = Jinv @ (Jp + cq * pred.R0)
        V = (R + S @ pred.V0).intersect(pred.V0)
    return CorrectorResult(x_next, V, T, xh0, r, mults)


# --- one step and the integrator ---------------------------------------------


@dataclass(frozen=True)
class StepConfig:
    """Settings of one integration run.

    Exactly one of ``step`` (fixed step) and ``tol`` (per-step truncation
    tolerance) is used; ``step`` wins when both are set.
    """

    order: int = 20
    algorithm: str = "ho"
    p: int | None = None
    q: int | None = None
    step: float | None = None
    tol: float | None = 1e-12
    h_min: float = H_MIN
    h_max: float = math.inf
    pad: float = PAD
    reorganize: float | None = 10.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.step is None and self.tol is None:
            raise ValueError("give a fixed step or a tolerance")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if self.algorithm == "ho":
            self.method  # validates the split

    @property
    def method(self) -> MethodOrder:
        return MethodOrder.split(self.order, self.p, self.q)


@dataclass(frozen=True, eq=False)
class StepResult:
    """One accepted step: its length, tight bounds at its end and the enclosures used."""

    h: float
    x_next: Interval
    V: Interval | None
    enclosure: RoughEnclosure
    predictor: PredictorResult
    corrected: bool
    mults: int = 0


def advance(
    F: VectorField,
    state: Doubleton,
    vstate: MatrixDoubleton | None,
    cfg: StepConfig,
    h: float | None = None,
    h_cap: float = math.inf,
    box: Interval | None = None,
):
    """One step; returns ``(StepResult, new_state, new_vstate)``.

    ``h`` overrides the configured step and ``h_cap`` bounds it; the rough
    enclosure may shorten it further.  ``box`` is an optional enclosure of
    the state set tighter than its hull.
    """
    m = cfg.order
    box = state.hull() if box is None else box
    variational = vstate is not None
    need_predict = h is None and cfg.step is None
    jet_x = c1_jet(F, box, m + 1 if need_predict else m)
    jet_c = c0_jet(F, state.x, m)
    mults = jet_x.mults + jet_c.mults
    if h is None:
        if cfg.step is not None:
            h = cfg.step
        else:
            h_lo, h_ho = predict_step(jet_x, cfg.tol, m, cfg.h_min, cfg.h_max)
            h = h_ho if cfg.algorithm == "ho" else h_lo
    h = min(h, cfg.h_max, h_cap)
    if 0.0 < h_cap - h < 1e-6 * h:
        # absorb a sliver that would otherwise need its own tiny step
        h = h_cap
    enc = rough_enclosure(F, box, h, m, variational=variational, pad=cfg.pad, h_min=cfg.h_min, jet_x=jet_x)
    if cfg.step is None and cfg.tol is not None:
        # the remainder lives on the rough enclosure, where coefficients can be
        # far larger than at the set itself; shorten until it meets the tolerance
        for _ in range(REMAINDER_CUTS):
            excess = float(np.max(enc.rem.mag)) / cfg.tol
            if excess <= REMAINDER_SLACK:
                break
            h = enc.h * 0.9 * excess ** (-1.0 / (m + 1))
            enc = rough_enclosure(F, box, h, m, variational=variational, pad=cfg.pad, h_min=cfg.h_min, jet_x=jet_x)
    mults += enc.jet_y.mults
    pred = predictor(F, state, enc, m, jet_x=jet_x, jet_c=jet_c, box=box)
    x_next, V = pred.x_next0, pred.V0
    corrected = False
    if cfg.algorithm == "ho":
        mo = cfg.method
        try:
            corr = corrector(F, state, pred, mo.p, mo.q, jet_x=jet_x, jet_c=jet_c, box=box)
            x_next, V = corr.x_next, corr.V
            T, shift, tail = corr.transfer, corr.shift, corr.tail
            mults += corr.mults
            corrected = True
        except (SingularMidpoint, EmptyIntersection) as exc:
            log.warning("corrector skipped, predictor result kept: %s", exc)
    lo_shift = pred.y0.mid
    new_state = propagate_state(state, pred.A, lo_shift, pred.r0 + (pred.y0 - lo_shift), reorganize=cfg.reorganize)
    if corrected:
        # both updates are rigorous; when truncation is negligible the
        # predictor form can carry less rounding, so keep the tighter one
        ho_state = propagate_state(state, T, shift, tail, reorganize=cfg.reorganize)
        if _spread(ho_state) <= _spread(new_state):
            new_state = ho_state
    new_vstate = propagate_matrix(vstate, V) if variational else None
    result = StepResult(enc.h, x_next, V, enc, pred, corrected, mults)
    return result, new_state, new_vstate


def _spread(d: Doubleton) -> float:
    return float(np.sum(d.hull().width))


class Integrator:
    """Validated integration of ``x' = f(x)`` (and its variational equation) from a set.

    The state is carried as a :class:`Doubleton` and, when ``variational`` is
    set, the derivative of the flow as a :class:`MatrixDoubleton` starting at
    ``V0`` (default the identity).  ``time`` encloses the exact elapsed time.
    """

    def __init__(self, F: VectorField, x0, cfg: StepConfig | None = None, variational: bool = True, V0=None, **kw):
        self.F = F
        self.cfg = cfg if cfg is not None else StepConfig(**kw)
        if cfg is not None and kw:
            raise TypeError("pass either cfg or keyword settings")
        self.state = _as_doubleton(x0)
        if variational:
            V0 = np.eye(F.dimension) if V0 is None else V0
            self.vstate = V0 if isinstance(V0, MatrixDoubleton) else from_box(
                V0 if isinstance(V0, Interval) else Interval(np.asarray(V0, dtype=float))
            )
        else:
            self.vstate = None
        self.time = Interval(0.0)
        self.steps = 0
        self.last: StepResult | None = None
        self._box = self.state.hull()
        self._matrix = self.vstate.hull() if self.vstate is not None else None

    @property
    def t(self) -> float:
        return float(self.time.mid)

    def box(self) -> Interval:
        """Enclosure of the current state set."""
        return self._box

    def matrix(self) -> Interval | None:
        """Enclosure of the current derivative of the flow."""
        return self._matrix

    def restrict(self, box: Interval) -> None:
        """Intersect the current state enclosure with a known bound ``box``."""
        self._box = self._box.intersect(box)

    def copy(self) -> "Integrator":
        other = object.__new__(Integrator)
        other.__dict__.update(self.__dict__)
        return other

    def step(self, h: float | None = None, h_cap: float = math.inf) -> StepResult:
        try:
            res, state, vstate = advance(self.F, self.state, self.vstate, self.cfg, h, h_cap, self._box)
        except HovarError as exc:
            raise StepError(self.steps, exc) from exc
        self.state, self.vstate, self.last = state, vstate, res
        self.time = self.time + res.h
        self.steps += 1
        # both the doubleton hull and the corrector box enclose the new set
        self._box = state.hull().intersect(res.x_next)
        if vstate is not None:
            # the plain product of enclosures is also rigorous; it wins on
            # the first step from the identity
            self._matrix = vstate.hull().intersect(res.V @ self._matrix)
        return res

    def advance_to(self, t_end: float, callback=None):
        """Step until the elapsed time reaches ``t_end``, never stepping past it."""
        while True:
            remaining = t_end - self.t
            if remaining <= 1e-15 * max(1.0, abs(t_end)):
                return
            res = self.step(h_cap=remaining)
            if callback is not None:
                callback(self, res)
