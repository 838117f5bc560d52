"""Rough enclosures of the flow and the variational flow over a time step.

A candidate ``Y = sum_{i<=m} [0,h]^i phi[i](x) + eps`` is accepted when
``[0,h]^(m+1) phi[m+1](Y) ⊆ eps``.  The variational candidate
``W = sum_{i<=m} [0,h]^i psi[i](x) + E`` is accepted when
``[0,h]^(m+1) psi[m+1](Y) W ⊆ E``.  When a test fails the step is cut using
the ratio of padding to remainder, with the candidate kept unchanged, so no
jet has to be recomputed.  Only when the cut would be drastic (the initial
step was far too long) is a fresh candidate built on half the step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnclosureFailure, IntervalError
from .interval import Interval, up
from .vectorfield import Jet, VectorField, c0_jet, c1_jet, jacobian

H_MIN = 1e-12
MAX_RETRIES = 10
SHRINK_SAFETY = 0.95
# a cut below this factor discards the candidate and halves the step instead
REBUILD_BELOW = 0.25
PAD = 1.1
# padding never drops below this fraction of its largest component
_FLOOR_REL = 1e-6
_FLOOR_ABS = 2.0**-960


@dataclass(frozen=True, eq=False)
class RoughEnclosure:
    """Accepted step with enclosures over ``[0, h]``.

    ``rem`` encloses ``[0,h]^(m+1) phi[m+1](ytilde)`` and ``Rem`` encloses
    ``[0,h]^(m+1) psi[m+1](ytilde) vtilde``; the predictor reuses both.
    ``jet_y`` is the jet of order ``m + 1`` computed on the candidate.
    """

    h: float
    order: int
    ytilde: Interval
    epsilon: Interval
    rem: Interval
    jet_y: Jet
    vtilde: Interval | None = None
    E: Interval | None = None
    Rem: Interval | None = None
    retries: int = 0


def _time_power(h: float, k: int) -> float:
    """Upper bound of h**k."""
    return float(Interval(h).__pow__(k).hi)


def _remainder(coef: Interval, H: float) -> Interval:
    """[0, H] * coef."""
    return Interval(0.0, H) * coef


def _padding(mag: np.ndarray, pad: float) -> Interval:
    e = np.asarray(up(mag * (2.0 * pad)), dtype=float)
    floor = max(_FLOOR_REL * float(e.max(initial=0.0)), _FLOOR_ABS)
    e = np.maximum(e, floor)
    return Interval(-e, e)


def _shrink_factor(eps_mag: np.ndarray, rem_mag: np.ndarray, m: int) -> float:
    with np.errstate(divide="ignore"):
        ratio = np.where(rem_mag > 0.0, eps_mag / rem_mag, np.inf)
    r = float(ratio.min())
    if not np.isfinite(r):
        return 0.5
    return SHRINK_SAFETY * min(r, 1.0) ** (1.0 / (m + 1))


def c0_enclosure(
    F: VectorField,
    x: Interval,
    h_try: float,
    m: int,
    pad: float = PAD,
    h_min: float = H_MIN,
    jet_x: Jet | None = None,
    variational: bool = False,
) -> RoughEnclosure:
    """Validate ``phi([0,h], x) ⊆ ytilde`` for some ``h <= h_try``.

    ``jet_x`` (order >= m, on ``x``) is reused when supplied.  With
    ``variational`` the jet on the candidate also carries its ``psi`` part so
    that :func:`c1_enclosure` can run without recomputing it.
    """
    if not h_try > 0.0:
        raise ValueError("step must be positive")
    if jet_x is None:
        jet_x = c0_jet(F, x, m)
    h = float(h_try)
    retries = 0
    while True:
        if h < h_min:
            raise EnclosureFailure(f"step fell below {h_min:g} while enclosing the flow")
        H = _time_power(h, m + 1)
        poly, _ = jet_x.eval(Interval(0.0, h), upto=m)
        try:
            guess = c0_jet(F, poly, m + 1).coeff(m + 1)
            eps = _padding(_remainder(guess, H).mag, pad)
            Y = poly + eps
            jet_y = (c1_jet if variational else c0_jet)(F, Y, m + 1)
        except IntervalError:
            # the candidate left the field's domain; retry on a shorter step
            retries += 1
            if retries > MAX_RETRIES:
                raise EnclosureFailure("no candidate inside the field's domain") from None
            h *= 0.5
            continue
        coef = jet_y.coeff(m + 1)
        while True:
            rem = _remainder(coef, H)
            if rem.subset(eps):
                # a shorter step keeps the test valid on the smaller candidate
                Y_acc = (jet_x.eval(Interval(0.0, h), upto=m)[0] + eps).intersect(Y)
                return RoughEnclosure(h, m, Y_acc, eps, rem, jet_y, retries=retries)
            retries += 1
            if retries > MAX_RETRIES:
                raise EnclosureFailure(f"flow enclosure not validated after {MAX_RETRIES} cuts")
            factor = _shrink_factor(eps.hi, rem.mag, m)
            if factor < REBUILD_BELOW:
                # the candidate is far too wide to be worth keeping
                h *= 0.5
                break
            h *= factor
            if h < h_min:
                raise EnclosureFailure(f"step fell below {h_min:g} while enclosing the flow")
            H = _time_power(h, m + 1)


def c1_enclosure(
    F: VectorField,
    x: Interval,
    enc: RoughEnclosure,
    m: int,
    pad: float = PAD,
    h_min: float = H_MIN,
    jet_x: Jet | None = None,
) -> RoughEnclosure:
    """Add ``vtilde ⊇ psi([0,h], x, Id)`` to a C0 enclosure, cutting ``h`` if needed.

    A cut applies to both enclosures; the C0 test stays valid for any shorter
    step, so only its remainder is re-scaled.
    """
    if jet_x is None or not jet_x.variational:
        jet_x = c1_jet(F, x, m)
    jet_y = enc.jet_y if enc.jet_y.variational else c1_jet(F, enc.ytilde, m + 1)
    dcoef = jet_y.dcoeff(m + 1)
    h = enc.h
    H = _time_power(h, m + 1)
    _, Vpoly = jet_x.eval(Interval(0.0, h), upto=m)
    guess = _remainder(Interval(1.0), H) * (dcoef @ Vpoly)
    E = _padding(guess.mag, pad)
    W = Vpoly + E
    retries = enc.retries
    while True:
        Rem = _remainder(dcoef, H) @ W
        if Rem.subset(E):
            break
        retries += 1
        if retries > enc.retries + MAX_RETRIES:
            raise EnclosureFailure("variational enclosure not validated")
        mag = Rem.mag
        with np.errstate(divide="ignore"):
            ratio = np.where(mag > 0.0, E.hi / mag, np.inf)
        r = min(float(ratio.min()), 1.0)
        h *= SHRINK_SAFETY * r ** (1.0 / (m + 1))
        if h < h_min:
            raise EnclosureFailure(f"step fell below {h_min:g} while enclosing the variational flow")
        H = _time_power(h, m + 1)
    if h != enc.h:
        Y = (jet_x.eval(Interval(0.0, h), upto=m)[0] + enc.epsilon).intersect(enc.ytilde)
        rem = _remainder(jet_y.coeff(m + 1), H)
    else:
        Y, rem = enc.ytilde, enc.rem
    W = (jet_x.eval(Interval(0.0, h), upto=m)[1] + E).intersect(W)
    return RoughEnclosure(h, m, Y, enc.epsilon, rem, jet_y, vtilde=W, E=E, Rem=Rem, retries=retries)


def rough_enclosure(
    F: VectorField,
    x: Interval,
    h_try: float,
    m: int,
    variational: bool = True,
    pad: float = PAD,
    h_min: float = H_MIN,
    jet_x: Jet | None = None,
) -> RoughEnclosure:
    """C0 (and optionally C1) rough enclosure in one call."""
    enc = c0_enclosure(F, x, h_try, m, pad=pad, h_min=h_min, jet_x=jet_x, variational=variational)
    if not variational:
        return enc
    return c1_enclosure(F, x, enc, m, pad=pad, h_min=h_min, jet_x=jet_x)


def first_order_enclosure_test(F: VectorField, ytilde: Interval, candidate: Interval, h: float) -> bool:
    """Whether ``Id + [0,h] Df(ytilde) candidate ⊆ candidate``."""
    n = F.dimension
    candidate = candidate if isinstance(candidate, Interval) else Interval(np.asarray(candidate, dtype=float))
    image = Interval(np.eye(n)) + Interval(0.0, h) * (jacobian(F, ytilde) @ candidate)
    return image.subset(candidate)
