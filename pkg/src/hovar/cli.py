"""Command-line front end: single integrations, LO/HO benchmarks, the Rössler proofs
and the cost/step-ratio tables.

Exit status: 0 verified or done, 1 not verified, 2 usage error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from .errors import HovarError
from .interval import Interval, ivector
from .stepper import ALGORITHMS, Integrator, StepConfig, cost_model, step_ratio_g
from .vectorfield import SYSTEMS, default_ic, system

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
CSV_VERSION = "# hovar-benchmark v1"

# Fixed steps (order 10) whose LO/HO gap is clear of the rounding regime,
# with the horizon: roughly one period of the periodic orbit, 0.5 for ks10.
BENCHMARK_DEFAULTS = {
    "lorenz": {"order": 10, "steps": (0.01, 0.02, 0.05), "time": 1.5587},
    "henon_heiles": {"order": 10, "steps": (0.1, 0.15, 0.2), "time": 5.7239},
    "pcr3bp": {"order": 10, "steps": (0.03, 0.05, 0.07), "time": 3.0821},
    "ks10": {"order": 10, "steps": (0.00075, 0.001, 0.0015), "time": 0.5},
    "rossler": {"order": 10, "steps": (0.04, 0.05, 0.075), "time": 6.0},
}

PROOF_ORDERS = {"trapping": 25, "covering": 20, "cones": 14}
PARTS = ("trapping", "covering", "cones")


class UsageError(Exception):
    pass


# --- input helpers -------------------------------------------------------------


def parse_ic(text: str) -> Interval:
    """Comma-separated components; each a decimal, a fraction or ``[lo, hi]``."""
    parts = [p for p in re.split(r",(?![^\[]*\])", text) if p.strip()]
    if not parts:
        raise UsageError(f"empty initial condition {text!r}")
    try:
        return ivector([p.strip() for p in parts])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_params(items) -> dict:
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"parameter must look like name=value, got {item!r}")
        params[key.strip()] = value.strip()
    return params


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys use flag names."""
    conf = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{num}: expected key=value")
        conf[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return conf


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def step_config(args, order=None, step=None) -> StepConfig:
    order = order if order is not None else args.order
    step = step if step is not None else args.step
    tol = args.tol if step is None else None
    kw = {}
    if args.min_step is not None:
        kw["h_min"] = args.min_step
    try:
        return StepConfig(order=order, algorithm=args.algorithm, p=args.p, q=args.q, step=step,
                          tol=tol if tol is not None else (None if step else 1e-12), **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def field_and_ic(args):
    try:
        F = system(args.system, **parse_params(args.param))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad system or parameter: {exc}") from exc
    x0 = parse_ic(args.ic) if args.ic else default_ic(args.system)
    if len(x0) != F.dimension:
        raise UsageError(f"{args.system} needs {F.dimension} initial values, got {len(x0)}")
    return F, x0


@contextmanager
def output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _log_width(M: Interval) -> float:
    w = float(np.max(M.width))
    return math.log10(w) if w > 0 else -math.inf


def _fmt(v: float) -> str:
    return repr(float(v))


# --- subcommands ---------------------------------------------------------------


def run_integrate(args) -> int:
    F, x0 = field_and_ic(args)
    cfg = step_config(args)
    integ = Integrator(F, x0, cfg, variational=not args.no_variational)
    n = F.dimension
    head = ["t", "h"] + [f"x{i}_{e}" for i in range(n) for e in ("lo", "hi")]
    if integ.vstate is not None:
        head.append("S")
    status = EXIT_OK
    with output(args.out) as out:
        out.write(",".join(head) + "\n")

        def row(it, res):
            box = it.box()
            cells = [_fmt(it.t), _fmt(res.h)]
            for i in range(n):
                cells += [_fmt(box.lo[i]), _fmt(box.hi[i])]
            if it.vstate is not None:
                cells.append(_fmt(_log_width(it.matrix())))
            out.write(",".join(cells) + "\n")

        try:
            if args.time > 0:
                integ.advance_to(args.time, row)
        except HovarError as exc:
            out.write(f"# error at t={integ.t!r}: {exc}\n")
            print(f"solver failure: {exc}", file=sys.stderr)
            status = EXIT_SOLVER
    return status


def benchmark_rows(F, x0, order, step, tol, T, p=None, q=None, h_min=None, sample=None):
    """Yield ``(t, S_LO, S_HO, h)`` from two integrations run side by side.

    With a fixed step the rows fall on every step; in tolerance mode on a
    grid of spacing ``sample`` and ``h`` is the last HO step.
    """
    kw = {"h_min": h_min} if h_min is not None else {}
    runs = [
        Integrator(F, x0, StepConfig(order=order, algorithm=alg, p=p if alg == "ho" else None,
                                     q=q if alg == "ho" else None, step=step,
                                     tol=None if step else tol, **kw))
        for alg in ("lohner", "ho")
    ]
    dt = step if step else (sample if sample else T / 100)
    k = 1
    # the last row lands on T even when the grid does not
    while T > 0 and (k - 1) * dt < T * (1 - 1e-12):
        t = min(k * dt, T)
        for r in runs:
            r.advance_to(t)
        lo, ho = runs
        yield t, _log_width(lo.matrix()), _log_width(ho.matrix()), ho.last.h
        k += 1


def run_benchmark(args) -> int:
    F, x0 = field_and_ic(args)
    defaults = BENCHMARK_DEFAULTS.get(args.system, BENCHMARK_DEFAULTS["lorenz"])
    order = args.order if args.order is not None else defaults["order"]
    T = args.time if args.time is not None else defaults["time"]
    step = args.step
    if step is None and args.tol is None:
        step = defaults["steps"][0]
    cfg = step_config(args, order=order, step=step)  # validates the split
    status = EXIT_OK
    with output(args.out) as out:
        out.write(f"{CSV_VERSION} system={args.system} order={order} "
                  f"{'step=' + repr(step) if step else 'tol=' + repr(cfg.tol)} time={T!r}\n")
        out.write("t,S_LO,S_HO,h\n")
        try:
            for row in benchmark_rows(F, x0, order, step, cfg.tol, T, args.p, args.q,
                                      args.min_step, args.sample):
                out.write(",".join(_fmt(v) for v in row) + "\n")
                out.flush()
        except HovarError as exc:
            out.write(f"error,,,{str(exc).replace(',', ';')}\n")
            print(f"solver failure: {exc}", file=sys.stderr)
            status = EXIT_SOLVER
    return status


def run_prove(args) -> int:
    from . import proofs

    parts = PARTS if args.part == "all" else (args.part,)
    verified = True
    with output(args.out) as out:
        for part in parts:
            order = args.order if args.order is not None else PROOF_ORDERS[part]
            cfg = step_config(args, order=order)
            start = time.perf_counter()
            try:
                if part == "trapping":
                    cert = proofs.check_trapping(pieces=args.subdiv_B, cfg=cfg, workers=args.threads,
                                                 max_depth=args.max_depth)
                elif part == "covering":
                    cert = proofs.check_covering(cfg=cfg, edge_pieces=args.subdiv, workers=args.threads)
                else:
                    cert = proofs.check_cone(g_M=args.subdiv_M, g_N=args.subdiv_N, cfg=cfg,
                                             workers=args.threads, max_depth=args.max_depth)
            except HovarError as exc:
                print(f"solver failure in {part}: {exc}", file=sys.stderr)
                return EXIT_SOLVER
            wall = time.perf_counter() - start
            out.write(cert.report())
            out.write(f"# wall time = {wall:.1f} s\n\n")
            out.flush()
            if not cert.verified:
                verified = False
                bad = cert.first_failure()
                print(f"{part}: first failing piece {bad.index} y={bad.piece} {bad.detail}", file=sys.stderr)
            print(f"{part}: {'verified' if cert.verified else 'NOT verified'} "
                  f"(pieces {cert.leaves}, steps {cert.steps}, {wall:.1f} s)", file=sys.stderr)
    return EXIT_OK if verified else EXIT_FALSIFIED


def run_models(args) -> int:
    orders = _orders(args.orders)
    with output(args.out) as out:
        out.write(f"# n = {args.n}, c_f = {args.cf:g}\n")
        out.write("m,g,C_LO,C_HO,ratio\n")
        for m in orders:
            c_lo, c_ho, ratio = cost_model(args.n, m, args.cf)
            out.write(f"{m},{step_ratio_g(m):.6f},{c_lo:.6g},{c_ho:.6g},{ratio:.6f}\n")
        limit = Fraction(23, 17)
        out.write(f"# ratio for c_f = 0 (any n, m): {limit} = {float(limit):.6f}\n")
    return EXIT_OK


def _orders(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        a, sep, b = part.partition("-")
        try:
            out.extend(range(int(a), int(b) + 1) if sep else [int(a)])
        except ValueError as exc:
            raise UsageError(f"bad order list {text!r}") from exc
    if not out or min(out) < 1:
        raise UsageError("orders must be positive")
    return out


# --- parser --------------------------------------------------------------------


def _solver_flags(p, order_default):
    p.add_argument("--algorithm", choices=ALGORITHMS, default="ho")
    p.add_argument("--order", type=int, default=order_default, help="order m = p + q")
    p.add_argument("--p", type=int, default=None, help="HO split, defaults to the balanced one")
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--step", type=float, default=None, help="fixed step")
    p.add_argument("--tol", type=float, default=None, help="per-step tolerance (default 1e-12)")
    p.add_argument("--min-step", type=float, default=None)
    p.add_argument("--out", default=None, help="output file, default stdout")


def _system_flags(p):
    p.add_argument("--system", choices=sorted(SYSTEMS), default="lorenz")
    p.add_argument("--ic", default=None, help="initial condition, e.g. '1,0.5,[0,1e-6]'")
    p.add_argument("--param", action="append", default=[], help="field parameter name=value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hovar", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="key=value file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="integrate one system and print the enclosures")
    _system_flags(p)
    _solver_flags(p, 20)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--no-variational", action="store_true")

    p = sub.add_parser("benchmark", help="LO against HO: S(t) = log10 of the widest entry of V")
    _system_flags(p)
    _solver_flags(p, None)
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--sample", type=float, default=None, help="output spacing in tolerance mode")

    p = sub.add_parser("prove", help="Rössler trapping, covering and cone checks")
    _solver_flags(p, None)
    p.add_argument("--part", choices=PARTS + ("all",), default="all")
    p.add_argument("--subdiv-B", dest="subdiv_B", type=int, default=160)
    p.add_argument("--subdiv-M", dest="subdiv_M", type=int, default=32)
    p.add_argument("--subdiv-N", dest="subdiv_N", type=int, default=48)
    p.add_argument("--subdiv", type=int, default=1, help="pieces per covering edge")
    p.add_argument("--max-depth", type=int, default=3, help="bisection depth for failing slabs")
    p.add_argument("--threads", type=int, default=1, help="worker processes")

    p = sub.add_parser("models", help="cost model and step-size ratio table")
    p.add_argument("--n", type=int, default=3, help="dimension")
    p.add_argument("--orders", default="1-40", help="e.g. 1-40 or 6,16")
    p.add_argument("--cf", type=float, default=0.0, help="multiplications per field evaluation")
    p.add_argument("--out", default=None)
    return parser


def _apply_config(parser, argv):
    pre, _ = parser.parse_known_args(argv)
    if pre.config is None:
        return
    conf = read_config(pre.config)
    subparser = parser._subparsers._group_actions[0].choices[pre.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in conf.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for {pre.command}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [v.strip() for v in value.split(";") if v.strip()]
        else:
            try:
                defaults[key] = action.type(value) if action.type else value
            except ValueError as exc:
                raise UsageError(f"config {key}: {exc}") from exc
            if action.choices is not None and defaults[key] not in action.choices:
                raise UsageError(f"config {key}: {value!r} not one of {list(action.choices)}")
    subparser.set_defaults(**defaults)


COMMANDS = {"integrate": run_integrate, "benchmark": run_benchmark, "prove": run_prove, "models": run_models}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hovar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
