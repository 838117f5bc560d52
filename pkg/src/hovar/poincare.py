"""Rigorous first-return maps to affine coordinate sections and their derivatives.

A return is computed in three phases.  The trajectory set is advanced with
ordinary steps while every step provably contains no crossing (its rough
enclosure misses the hyperplane, or the field crosses it in the wrong
direction, or the signed distance is monotone and ends on the near side).
It is then moved up to just before the hyperplane and one enclosure over a
short time range carries every point across.  The image on the section is
the mean-value form ``P(x) in P(xhat) + L(Y) W (x - xhat)`` with
``L = Id - f e_j^T / f_j``, applied to the doubleton so the section set keeps
its wrapping control.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .enclosure import rough_enclosure
from .errors import EnclosureFailure, NoCrossing, StepError, TangencyError
from .interval import Interval
from .setrep import Doubleton, MatrixDoubleton, from_box, propagate_matrix, propagate_state
from .stepper import Integrator, StepConfig, StepResult
from .vectorfield import VectorField, c0_jet, c1_jet, eval_field

NEWTON_ITERATIONS = 3
# the crossing window is this multiple of the estimated spread of return times
WINDOW_SAFETY = 1.25
APPROACH_TRIES = 12
TANGENCY_CUTS = 8


@dataclass(frozen=True)
class Section:
    """The hyperplane ``x[coord] = level`` crossed in the direction ``sign``."""

    coord: int
    level: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.coord < 0:
            raise ValueError("coordinate index must be nonnegative")

    def signed(self, x: Interval) -> Interval:
        """``sign * (x[coord] - level)``; negative before the crossing, positive after."""
        d = x[self.coord] - self.level
        return d if self.sign > 0 else -d

    def speed(self, F: VectorField, box: Interval) -> Interval:
        """Enclosure of ``sign * f_coord`` over ``box``."""
        fj = eval_field(F, box)[self.coord]
        return fj if self.sign > 0 else -fj

    def others(self, n: int) -> list[int]:
        return [i for i in range(n) if i != self.coord]

    def project(self, x: Interval) -> Interval:
        """Drop the section coordinate of a vector, or its row and column of a matrix."""
        idx = self.others(x.shape[0])
        if x.ndim == 1:
            return x[idx]
        return x[np.ix_(idx, idx)]

    def embed(self, y) -> Interval:
        """Full-space point of the section with section coordinates ``y``."""
        y = y if isinstance(y, Interval) else Interval(np.asarray(y, dtype=float))
        n = y.shape[0] + 1
        lo = np.empty(n)
        hi = np.empty(n)
        idx = self.others(n)
        lo[idx], hi[idx] = y.lo, y.hi
        lo[self.coord] = hi[self.coord] = self.level
        return Interval(lo, hi)

    def pin(self, x: Interval) -> Interval:
        """``x`` with its section coordinate set to the level exactly."""
        lo, hi = x.lo.copy(), x.hi.copy()
        lo[self.coord] = hi[self.coord] = self.level
        return Interval._raw(lo, hi)


@dataclass(frozen=True, eq=False)
class Bracket:
    """An integrator state just before the section and the evidence that no return happened earlier."""

    integrator: Integrator
    steps: int
    signed: Interval


@dataclass(frozen=True, eq=False)
class CrossingResult:
    """First return of a set: time, image on the section and derivatives.

    ``y`` and ``DP`` use section coordinates only; ``state`` and ``vstate``
    are the full-space doubletons on the section, ready to be integrated
    again.  ``Dphi`` encloses the full-space derivative of the return map.
    """

    T: Interval
    y: Interval
    DP: Interval | None
    box: Interval
    Dphi: Interval | None
    state: Doubleton
    vstate: MatrixDoubleton | None
    steps: int


def _projector(F: VectorField, sec: Section, box: Interval) -> Interval:
    """``Id - f(box) e_j^T / f_j(box)`` with the exact zero row ``j``."""
    n = F.dimension
    f = eval_field(F, box)
    fj = f[sec.coord]
    if fj.contains_zero():
        raise TangencyError(f"f_{sec.coord} encloses zero on the crossing set")
    col = -(f / fj)
    lo, hi = np.eye(n), np.eye(n)
    lo[:, sec.coord], hi[:, sec.coord] = col.lo, col.hi
    lo[sec.coord, :] = hi[sec.coord, :] = 0.0
    return Interval._raw(lo, hi)


def map_derivative(F: VectorField, sec: Section, y: Interval, Dphi: Interval) -> Interval:
    """Derivative of the return map in section coordinates.

    ``y`` encloses the image on the section and ``Dphi`` the derivative of the
    flow at the return time; the return-time correction is ``L(y)``.
    """
    return sec.project(_projector(F, sec, y) @ Dphi)


class _Scan:
    """Tracks whether the true set is known to lie on the far side of the section."""

    def __init__(self, F: VectorField, sec: Section, past: bool):
        self.F = F
        self.sec = sec
        self.past = past

    def classify(self, start: Interval, res: StepResult, end: Interval) -> str:
        """``"clear"`` if the step provably holds no return, ``"cross"`` if one may
        occur and ``"tangent"`` if the field direction is undecided where the
        step meets the section."""
        sec = self.sec
        reach = sec.signed(res.enclosure.ytilde)
        if reach.lo > 0.0 or reach.hi < 0.0:
            return "clear"
        v = sec.speed(self.F, res.enclosure.ytilde)
        if v.hi < 0.0:
            return "clear"
        if v.lo > 0.0:
            # the signed distance increases, so it can reach zero from below only once
            if self.past or sec.signed(end).hi < 0.0:
                return "clear"
            return "cross"
        return "tangent"

    def update(self, res: StepResult, end: Interval) -> None:
        reach = self.sec.signed(res.enclosure.ytilde)
        s = self.sec.signed(end)
        if reach.lo > 0.0 or s.lo >= 0.0:
            self.past = True
        elif reach.hi < 0.0 or s.hi < 0.0:
            self.past = False
        elif self.sec.speed(self.F, res.enclosure.ytilde).hi < 0.0:
            self.past = False


def detect_crossing(
    integ: Integrator,
    sec: Section,
    max_time: float = 100.0,
    on_section: bool = False,
) -> Bracket:
    """Advance ``integ`` (in place) until its set lies just before its next return.

    ``on_section`` declares that the true initial set lies on the section, so
    the start itself is not taken for a return.  Raises :class:`NoCrossing`
    when no return is found before ``max_time``.
    """
    F = integ.F
    scan = _Scan(F, sec, past=on_section or sec.signed(integ.box()).lo >= 0.0)
    steps = 0
    while True:
        if integ.t > max_time:
            raise NoCrossing(f"no return to the section within time {max_time:g}")
        start = integ.box()
        h = None
        for _ in range(TANGENCY_CUTS):
            trial = integ.copy()
            res = trial.step(h=h)
            verdict = scan.classify(start, res, trial.box())
            if verdict != "tangent":
                break
            # a shorter step may separate the section from the fold of the flow
            h = 0.5 * res.h
        else:
            raise TangencyError(f"f_{sec.coord} changes sign where the set meets the section")
        if verdict == "clear":
            scan.update(res, trial.box())
            integ.__dict__.update(trial.__dict__)
            steps += 1
            continue
        steps += _approach(integ, sec, scan)
        return Bracket(integ, steps, sec.signed(integ.box()))


def _approach(integ: Integrator, sec: Section, scan: _Scan) -> int:
    """Move the set close to the section while staying strictly before it."""
    F = integ.F
    steps = 0
    for _ in range(APPROACH_TRIES):
        box = integ.box()
        s = sec.signed(box)
        v = float(sec.speed(F, Interval(box.mid)).mid)
        if not v > 0.0:
            raise TangencyError("the set approaches the section with nonpositive speed")
        lead = -float(s.hi)
        spread = float(s.hi - s.lo)
        if lead <= spread + 1e-9 * max(1.0, abs(sec.level)):
            return steps
        h = (lead - 0.5 * spread) / v
        while True:
            trial = integ.copy()
            try:
                res = trial.step(h=h, h_cap=h)
            except StepError:
                h *= 0.5
                if h < integ.cfg.h_min:
                    raise
                continue
            if scan.classify(box, res, trial.box()) == "clear" and sec.signed(trial.box()).hi < 0.0:
                break
            h *= 0.5
            if h < integ.cfg.h_min:
                raise TangencyError("could not approach the section without touching it")
        integ.__dict__.update(trial.__dict__)
        steps += 1
    return steps


def _newton_time(sec, F, jet, rem, Y, T: Interval, h: float) -> Interval:
    """Interval Newton for the time at which ``jet`` (plus ``rem``) reaches the section."""
    for _ in range(NEWTON_ITERATIONS):
        tm = float(T.mid)
        g = sec.signed(jet.eval(tm)[0] + rem)
        over = (jet.eval(T)[0] + rem).intersect(Y)
        v = sec.speed(F, over)
        if v.lo <= 0.0:
            raise TangencyError("transversality lost on the crossing window")
        T = T.intersect(tm - g / v)
        if float(T.hi - T.lo) < 1e-6 * h:
            break
    return T


def cross(bracket: Bracket, sec: Section) -> CrossingResult:
    """Carry the bracketed set across the section and enclose its image there."""
    integ = bracket.integrator
    F = integ.F
    m = integ.cfg.order
    box = integ.box()
    state = integ.state
    s = sec.signed(box)
    if not s.hi < 0.0:
        raise TangencyError("bracketed set already touches the section")
    v_est = float(sec.speed(F, Interval(box.mid)).mid)
    window = WINDOW_SAFETY * (-float(s.lo)) / v_est + 1e-12
    jet_x = c1_jet(F, box, m)
    for _ in range(4):
        enc = rough_enclosure(F, box, window, m, variational=True, pad=integ.cfg.pad,
                              h_min=integ.cfg.h_min, jet_x=jet_x)
        if enc.h < window:
            raise EnclosureFailure("the spread of return times exceeds a single enclosure")
        Y = enc.ytilde
        v = sec.speed(F, Y)
        if not v.lo > 0.0:
            raise TangencyError(f"f_{sec.coord} is not bounded away from zero on the crossing window")
        reach = -s.lo / v.lo
        if reach < window:
            break
        window = 1.5 * float(Interval(reach).hi)
    else:
        raise EnclosureFailure("crossing window could not be validated")
    h = enc.h
    T_set = _newton_time(sec, F, jet_x, enc.rem, Y, (-s / v).intersect(Interval(0.0, h)), h)

    # the centre of the doubleton, integrated as a point
    xc = Interval(state.x)
    jet_c = c0_jet(F, xc, m)
    T_c = _newton_time(sec, F, jet_c, enc.rem, Y, T_set, h)
    y_c = sec.pin(jet_c.eval(T_c)[0] + enc.rem)

    # every point of the box lands in ``reach`` at a time in ``T_set``, so the
    # mean-value factors only need f there and the flow derivative at those times
    state_T, jac_T = jet_x.eval(T_set)
    reach = sec.pin((state_T + enc.rem).intersect(Y))
    W = (jac_T + enc.Rem).intersect(enc.vtilde)
    transfer = _projector(F, sec, reach) @ W
    new_state = propagate_state(state, transfer, y_c, Interval(np.zeros(F.dimension)),
                                reorganize=integ.cfg.reorganize)
    y_box = sec.pin(new_state.hull().intersect(reach))

    vstate = None
    Dphi = None
    DP = None
    if integ.vstate is not None:
        L_y = _projector(F, sec, y_box)
        step_D = L_y @ W
        vstate = propagate_matrix(integ.vstate, step_D)
        Dphi = vstate.hull().intersect(step_D @ integ.matrix())
        DP = sec.project(Dphi)
    return CrossingResult(
        T=integ.time + T_set,
        y=sec.project(y_box),
        DP=DP,
        box=y_box,
        Dphi=Dphi,
        state=new_state,
        vstate=vstate,
        steps=bracket.steps + 1,
    )


def first_return(
    F: VectorField,
    x0,
    sec: Section,
    cfg: StepConfig | None = None,
    variational: bool = True,
    V0=None,
    on_section: bool = True,
    max_time: float = 100.0,
    **kw,
) -> CrossingResult:
    """First return of the set ``x0`` (box or doubleton) to ``sec``."""
    integ = Integrator(F, x0, cfg, variational=variational, V0=V0, **kw)
    if on_section:
        integ.restrict(sec.pin(integ.box()))
    bracket = detect_crossing(integ, sec, max_time=max_time, on_section=on_section)
    return cross(bracket, sec)


class PoincareMap:
    """Return map of ``F`` to ``sec`` in section coordinates.

    Calling with a box of section coordinates returns the :class:`CrossingResult`
    of ``iterates`` successive returns; the derivative composes through the
    full-space variational doubleton, so ``DP`` of two returns encloses
    ``DP(P(x)) DP(x)``.
    """

    def __init__(self, F: VectorField, sec: Section, cfg: StepConfig | None = None,
                 max_time: float = 100.0, **kw):
        self.F = F
        self.sec = sec
        self.cfg = cfg if cfg is not None else StepConfig(**kw)
        self.max_time = max_time

    def __call__(self, y, iterates: int = 1, variational: bool = True) -> CrossingResult:
        if iterates < 1:
            raise ValueError("iterates must be at least 1")
        x0 = self.sec.embed(y)
        state = from_box(x0)
        vstate = None
        total = Interval(0.0)
        steps = 0
        res = None
        for _ in range(iterates):
            integ = Integrator(self.F, state, self.cfg, variational=variational,
                               V0=vstate if vstate is not None else None)
            integ.restrict(self.sec.pin(integ.box()))
            bracket = detect_crossing(integ, self.sec, self.max_time, on_section=True)
            res = cross(bracket, self.sec)
            total = total + res.T
            steps += res.steps
            state, vstate = res.state, res.vstate
        return replace(res, T=total, steps=steps)
