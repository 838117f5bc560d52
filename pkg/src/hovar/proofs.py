"""Computer-assisted checks for the Rössler return map on the section ``x = 0, x' > 0``.

Three checks are provided, each over uniform slabs in the ``y`` coordinate:

* trapping: ``P(B_i)`` lies strictly inside ``B`` for every slab ``B_i``;
* covering: the four sign conditions on ``pi_y P^2`` over the vertical edges
  of ``M`` and ``N``;
* cones: ``DP^2(v)^T Q DP^2(v) - Q`` is positive definite on ``M`` and ``N``
  (Sylvester criterion on the 2x2 interval matrix).

A slab that fails is bisected in ``y`` up to ``max_depth`` times before the
check is declared failed.  Slabs are independent, so the driver can farm them
out to worker processes; results are collected in slab order and do not
depend on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable

import numpy as np

from .errors import HovarError
from .interval import Interval
from .poincare import PoincareMap, Section
from .stepper import StepConfig
from .vectorfield import VectorField, rossler

# sets of the Rössler proof, in section coordinates (y, z), as decimal strings
L_B, R_B = "-10.7", "-2.3"
L_M, R_M = "-8.4", "-7.6"
L_N, R_N = "-5.7", "-4.6"
Z_RANGE = ("0.028", "0.034")

TRAPPING_PIECES = 160
CONE_PIECES_M = 32
CONE_PIECES_N = 48
MAX_DEPTH = 3


@dataclass(frozen=True)
class PlanarBox:
    """Rectangle ``y x z`` on the section."""

    y: Interval
    z: Interval

    def __post_init__(self):
        for part in (self.y, self.z):
            if not isinstance(part, Interval) or part.shape != ():
                raise TypeError("PlanarBox sides must be scalar Intervals")

    @classmethod
    def from_bounds(cls, y_lo, y_hi, z_lo, z_hi, inner: bool = False) -> "PlanarBox":
        """Box from decimal bounds, rounded outward (or inward with ``inner``)."""
        def side(lo, hi):
            a, b = Interval.from_string(str(lo)), Interval.from_string(str(hi))
            return Interval(float(a.hi), float(b.lo)) if inner else Interval(float(a.lo), float(b.hi))
        return cls(side(y_lo, y_hi), side(z_lo, z_hi))

    def box(self) -> Interval:
        return Interval(np.array([self.y.lo, self.z.lo]), np.array([self.y.hi, self.z.hi]))

    def split(self, pieces: int) -> list["PlanarBox"]:
        """Uniform slabs in ``y``; neighbours share their endpoint exactly."""
        if pieces < 1:
            raise ValueError("pieces must be at least 1")
        lo, hi = float(self.y.lo), float(self.y.hi)
        cuts = [lo + i * (hi - lo) / pieces for i in range(pieces)] + [hi]
        return [PlanarBox(Interval(cuts[i], cuts[i + 1]), self.z) for i in range(pieces)]

    def split_z(self, pieces: int) -> list["PlanarBox"]:
        """Uniform pieces in ``z``, used for edges."""
        flipped = PlanarBox(self.z, self.y).split(pieces)
        return [PlanarBox(self.y, p.y) for p in flipped]

    def left_edge(self) -> "PlanarBox":
        return PlanarBox(Interval(float(self.y.lo)), self.z)

    def right_edge(self) -> "PlanarBox":
        return PlanarBox(Interval(float(self.y.hi)), self.z)

    def __str__(self):
        return f"[{float(self.y.lo)!r}, {float(self.y.hi)!r}] x [{float(self.z.lo)!r}, {float(self.z.hi)!r}]"


def rossler_sets(inner: bool = False) -> dict[str, PlanarBox]:
    """The sets ``B``, ``M`` and ``N`` of the Rössler proof.

    Decimal bounds are rounded outward, so the boxes contain the exact sets;
    ``inner`` rounds inward instead, for use as targets.
    """
    return {
        name: PlanarBox.from_bounds(lo, hi, *Z_RANGE, inner=inner)
        for name, (lo, hi) in {"B": (L_B, R_B), "M": (L_M, R_M), "N": (L_N, R_N)}.items()
    }


@dataclass(frozen=True)
class ConeMatrix:
    """``Q = diag(lam, mu)`` with ``lam > 0 > mu``."""

    lam: float = 1.0
    mu: float = -1000.0

    def __post_init__(self):
        if not (self.lam > 0.0 and self.mu < 0.0):
            raise ValueError("cone matrix needs lam > 0 and mu < 0")

    def form(self, D: Interval) -> tuple[Interval, Interval]:
        """Leading minor and determinant of ``D^T Q D - Q`` for a 2x2 interval ``D``."""
        lam, mu = self.lam, self.mu
        a, b, c, d = D[0, 0], D[0, 1], D[1, 0], D[1, 1]
        m11 = lam * a.square() + mu * c.square() - lam
        m22 = lam * b.square() + mu * d.square() - mu
        m12 = lam * (a * b) + mu * (c * d)
        return m11, m11 * m22 - m12.square()


@dataclass(frozen=True)
class PieceReport:
    """Outcome of one slab (after any bisection)."""

    index: int
    piece: PlanarBox
    verified: bool
    depth: int
    leaves: int
    steps: int
    detail: str
    bounds: tuple = ()

    def line(self) -> str:
        mark = "ok  " if self.verified else "FAIL"
        extra = " ".join(f"{k}={v}" for k, v in self.bounds)
        return (f"{mark} piece {self.index:4d} y={self.piece} depth={self.depth} "
                f"leaves={self.leaves} steps={self.steps} {extra} {self.detail}").rstrip()


@dataclass
class Certificate:
    """Aggregated result of a check; ``verified`` only if every piece passed."""

    kind: str
    targets: dict
    subdivision: dict
    pieces: list[PieceReport] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return bool(self.pieces) and all(p.verified for p in self.pieces)

    @property
    def leaves(self) -> int:
        return sum(p.leaves for p in self.pieces)

    @property
    def steps(self) -> int:
        return sum(p.steps for p in self.pieces)

    def first_failure(self) -> PieceReport | None:
        return next((p for p in self.pieces if not p.verified), None)

    def report(self) -> str:
        lines = [f"# {self.kind} check: {'VERIFIED' if self.verified else 'NOT VERIFIED'}"]
        for k, v in self.targets.items():
            lines.append(f"# target {k} = {v}")
        for k, v in self.subdivision.items():
            lines.append(f"# subdivision {k} = {v}")
        for k, v in self.config.items():
            lines.append(f"# config {k} = {v}")
        lines.append(f"# pieces after bisection = {self.leaves}, steps = {self.steps}")
        lines.extend(p.line() for p in self.pieces)
        return "\n".join(lines) + "\n"


# --- per-piece checks ----------------------------------------------------------------
#
# A check returns (passed, steps, detail, bounds).  They are module level so the
# process pool can pickle them.


def _solver(cfg: StepConfig, F: VectorField | None = None) -> PoincareMap:
    return PoincareMap(F if F is not None else rossler(), Section(0, 0.0, 1), cfg)


def _fmt(x: Interval) -> str:
    return f"[{float(x.lo):.17g},{float(x.hi):.17g}]"


def trapping_piece(piece: PlanarBox, target: PlanarBox, cfg: StepConfig):
    """``P(piece)`` strictly inside ``target``."""
    res = _solver(cfg)(piece.box(), 1, variational=False)
    y, z = res.y[0], res.y[1]
    ok = y.interior_subset(target.y) and z.interior_subset(target.z)
    return ok, res.steps, "" if ok else "image leaves B", (("Py", _fmt(y)), ("Pz", _fmt(z)))


def covering_piece(piece: PlanarBox, threshold: Interval, side: str, cfg: StepConfig):
    """``pi_y P^2(piece) < threshold`` (side ``"<"``) or ``> threshold`` (side ``">"``).

    ``threshold`` may be a thin interval around a decimal; the comparison
    must hold against all of it.
    """
    res = _solver(cfg)(piece.box(), 2, variational=False)
    y = res.y[0]
    ok = float(y.hi) < float(threshold.lo) if side == "<" else float(y.lo) > float(threshold.hi)
    return ok, res.steps, "" if ok else "bound not strictly on the required side", (("P2y", _fmt(y)),)


def cone_piece(piece: PlanarBox, Q: ConeMatrix, cfg: StepConfig):
    """Sylvester criterion for ``DP^2^T Q DP^2 - Q`` over the piece."""
    res = _solver(cfg)(piece.box(), 2, variational=True)
    m11, det = Q.form(res.DP)
    ok = float(m11.lo) > 0.0 and float(det.lo) > 0.0
    return ok, res.steps, "" if ok else "not positive definite", (("m11", f"{float(m11.lo):.6g}"), ("det", f"{float(det.lo):.6g}"))


def _run_piece(op: Callable, max_depth: int, item):
    index, piece = item
    return _bisect(op, index, piece, 0, max_depth)


def _bisect(op: Callable, index: int, piece: PlanarBox, depth: int, max_depth: int) -> PieceReport:
    try:
        ok, steps, detail, bounds = op(piece)
    except HovarError as exc:
        ok, steps, detail, bounds = False, 0, f"{type(exc).__name__}: {exc}", ()
    if ok or depth >= max_depth:
        return PieceReport(index, piece, ok, depth, 1, steps, detail, bounds)
    halves = piece.split(2)
    subs = [_bisect(op, index, h, depth + 1, max_depth) for h in halves]
    failed = next((s for s in subs if not s.verified), None)
    return PieceReport(
        index, piece, failed is None,
        max(s.depth for s in subs),
        sum(s.leaves for s in subs),
        steps + sum(s.steps for s in subs),
        "" if failed is None else f"sub-piece {failed.piece}: {failed.detail}",
    )


def subdivision_driver(
    box: PlanarBox,
    op: Callable,
    pieces: int,
    workers: int = 1,
    max_depth: int = MAX_DEPTH,
) -> list[PieceReport]:
    """Run ``op`` on uniform ``y``-slabs of ``box``, bisecting failures.

    ``op(piece)`` returns ``(passed, steps, detail, bounds)``.  Reports come
    back in slab order whatever the number of workers.
    """
    if pieces < 1:
        raise ValueError("pieces must be at least 1")
    items = list(enumerate(box.split(pieces)))
    job = partial(_run_piece, op, max_depth)
    if workers <= 1 or len(items) == 1:
        return [job(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, items, chunksize=max(1, len(items) // (4 * workers))))


def _config_dict(cfg: StepConfig) -> dict:
    return {"order": cfg.order, "algorithm": cfg.algorithm, "tol": cfg.tol, "step": cfg.step}


def check_trapping(
    B: PlanarBox | None = None,
    pieces: int = TRAPPING_PIECES,
    cfg: StepConfig | None = None,
    workers: int = 1,
    max_depth: int = MAX_DEPTH,
) -> Certificate:
    """``P(B_i)`` strictly inside ``B`` for each of ``pieces`` uniform slabs ``B_i``.

    The default ``B`` is integrated from its outward rounding and compared
    with its inward rounding.
    """
    target = B if B is not None else rossler_sets(inner=True)["B"]
    B = B if B is not None else rossler_sets()["B"]
    cfg = cfg if cfg is not None else StepConfig(order=25, tol=1e-12)
    reports = subdivision_driver(B, partial(trapping_piece, target=target, cfg=cfg), pieces, workers, max_depth)
    return Certificate("trapping", {"B": str(B)}, {"B": pieces, "max_depth": max_depth}, reports, _config_dict(cfg))


def check_covering(
    M: PlanarBox | None = None,
    N: PlanarBox | None = None,
    cfg: StepConfig | None = None,
    edge_pieces: int = 1,
    workers: int = 1,
    max_depth: int = 0,
    thresholds: tuple | None = None,
) -> Certificate:
    """The four covering inequalities on the vertical edges of ``M`` and ``N``.

    ``thresholds`` overrides ``(l_M, r_N)``, the two values the images are
    compared with; numbers and decimal strings are enclosed exactly.
    """
    sets = rossler_sets()
    if M is None and N is None:
        # decimal edges, each enclosed by a thin interval
        z = sets["M"].z
        lm, rm, ln, rn = (PlanarBox(Interval.from_string(v), z) for v in (L_M, R_M, L_N, R_N))
    else:
        M = M if M is not None else sets["M"]
        N = N if N is not None else sets["N"]
        lm, rm, ln, rn = M.left_edge(), M.right_edge(), N.left_edge(), N.right_edge()
    M = M if M is not None else sets["M"]
    N = N if N is not None else sets["N"]
    cfg = cfg if cfg is not None else StepConfig(order=20, tol=1e-12)
    if thresholds is None:
        low, high = lm.y, rn.y
    else:
        low, high = (t if isinstance(t, Interval) else Interval.from_string(str(t)) for t in thresholds)
    edges = [
        ("l_M", lm, low, "<"),
        ("r_M", rm, high, ">"),
        ("r_N", rn, low, "<"),
        ("l_N", ln, high, ">"),
    ]
    reports = []
    for k, (name, edge, thr, side) in enumerate(edges):
        # an edge is split along z, the only direction it has
        op = partial(covering_piece, threshold=thr, side=side, cfg=cfg)
        subs = [_bisect(op, k, piece, 0, max_depth) for piece in edge.split_z(edge_pieces)]
        ok = all(s.verified for s in subs)
        detail = f"{name}: pi_y P^2 {side} {_fmt(thr)}"
        bounds = tuple(b for s in subs for b in s.bounds)
        reports.append(PieceReport(k, edge, ok, 0, len(subs), sum(s.steps for s in subs),
                                   detail if ok else detail + " FAILED", bounds))
    targets = {"M": str(M), "N": str(N), "l_M": _fmt(low), "r_N": _fmt(high)}
    return Certificate("covering", targets, {"edge_pieces": edge_pieces}, reports, _config_dict(cfg))


def check_cone(
    M: PlanarBox | None = None,
    N: PlanarBox | None = None,
    Q: ConeMatrix | None = None,
    g_M: int = CONE_PIECES_M,
    g_N: int = CONE_PIECES_N,
    cfg: StepConfig | None = None,
    workers: int = 1,
    max_depth: int = MAX_DEPTH,
) -> Certificate:
    """Positive definiteness of ``DP^2^T Q DP^2 - Q`` on every slab of ``M`` and ``N``."""
    sets = rossler_sets()
    M = M if M is not None else sets["M"]
    N = N if N is not None else sets["N"]
    Q = Q if Q is not None else ConeMatrix()
    cfg = cfg if cfg is not None else StepConfig(order=14, tol=1e-12)
    op = partial(cone_piece, Q=Q, cfg=cfg)
    rep_M = subdivision_driver(M, op, g_M, workers, max_depth)
    rep_N = subdivision_driver(N, op, g_N, workers, max_depth)
    offset = len(rep_M)
    rep_N = [replace(r, index=r.index + offset) for r in rep_N]
    cert = Certificate(
        "cone",
        {"M": str(M), "N": str(N), "Q": f"diag({Q.lam:g}, {Q.mu:g})"},
        {"g_M": g_M, "g_N": g_N, "max_depth": max_depth},
        rep_M + rep_N,
        _config_dict(cfg),
    )
    cert.subdivision["leaves_M"] = sum(r.leaves for r in rep_M)
    cert.subdivision["leaves_N"] = sum(r.leaves for r in rep_N)
    return cert
