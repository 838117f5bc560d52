"""Text grammar for autonomous vector fields and its compilation to a tape.

A field is written one statement per line::

    program    = { line } ;
    line       = [ statement ] [ "#" comment ] NEWLINE ;
    statement  = "var" name { name }
               | "param" name "=" number
               | name "'" "=" expr ;
    expr       = term { ( "+" | "-" ) term } ;
    term       = factor { ( "*" | "/" ) factor } ;
    factor     = ( "+" | "-" ) factor | power ;
    power      = atom [ ( "^" | "**" ) exponent ] ;
    exponent   = [ "-" ] integer | "(" [ "-" ] integer "/" "2" ")" ;
    atom       = number | name | "sqrt" "(" expr ")" | "(" expr ")" ;
    number     = decimal literal, or a quotient of literals such as 8/3 ;

Every variable named in ``var`` needs exactly one equation.  Decimal
literals and parameter values are enclosed with outward rounding, so ``0.1``
means the real number one tenth.  Half-integer exponents are rewritten as
powers of ``sqrt``.

Expressions are read with Python's :mod:`ast` module and lowered to a DAG
with common subexpressions shared and constant subtrees folded into interval
constants.  The DAG is emitted in topological order as a flat tape.
"""

from __future__ import annotations

import ast
import re
from fractions import Fraction

import numpy as np

from ..errors import ParseError
from ..interval import Interval
from . import _jetkernel as K

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED = {"var", "param", "sqrt"}


class Tape:
    """Flat node list ready for the jet kernel."""

    def __init__(self):
        self.ops: list[int] = []
        self.a: list[int] = []
        self.b: list[int] = []
        self.consts: list[Interval] = []
        self._const_of: dict[int, Interval] = {}
        self._memo: dict[tuple, int] = {}

    def _emit(self, op, a, b):
        key = (op, a, b)
        if key in self._memo:
            return self._memo[key]
        self.ops.append(op)
        self.a.append(a)
        self.b.append(b)
        idx = len(self.ops) - 1
        self._memo[key] = idx
        return idx

    def const(self, value: Interval) -> int:
        key = ("c", float(value.lo), float(value.hi))
        if key in self._memo:
            return self._memo[key]
        self.consts.append(value)
        idx = self._emit(K.CONST, len(self.consts) - 1, -1)
        self._const_of[idx] = value
        self._memo[key] = idx
        return idx

    def var(self, j: int) -> int:
        return self._emit(K.VAR, j, -1)

    def value(self, node: int):
        return self._const_of.get(node)

    def add(self, x, y):
        cx, cy = self.value(x), self.value(y)
        if cx is not None and cy is not None:
            return self.const(cx + cy)
        if _is_zero(cx):
            return y
        if _is_zero(cy):
            return x
        return self._emit(K.ADD, *sorted((x, y)))

    def sub(self, x, y):
        cx, cy = self.value(x), self.value(y)
        if cx is not None and cy is not None:
            return self.const(cx - cy)
        if _is_zero(cy):
            return x
        if _is_zero(cx):
            return self.neg(y)
        return self._emit(K.SUB, x, y)

    def neg(self, x):
        cx = self.value(x)
        if cx is not None:
            return self.const(-cx)
        return self._emit(K.NEG, x, -1)

    def mul(self, x, y):
        cx, cy = self.value(x), self.value(y)
        if cx is not None and cy is not None:
            return self.const(cx * cy)
        if cx is not None:
            x, y, cx, cy = y, x, cy, cx
        if cy is not None:
            if _is_zero(cy):
                return self.const(Interval(0.0))
            if _is_one(cy):
                return x
            return self._emit(K.MULC, x, y)
        return self._emit(K.MUL, *sorted((x, y)))

    def div(self, x, y):
        cx, cy = self.value(x), self.value(y)
        if cx is not None and cy is not None:
            return self.const(cx / cy)
        if cy is not None:
            if _is_one(cy):
                return x
            return self._emit(K.DIVC, x, y)
        return self._emit(K.DIV, x, y)

    def sqrt(self, x):
        cx = self.value(x)
        if cx is not None:
            return self.const(cx.sqrt())
        return self._emit(K.SQRT, x, -1)

    def power(self, x, k: int):
        if k == 0:
            return self.const(Interval(1.0))
        if k < 0:
            return self.div(self.const(Interval(1.0)), self.power(x, -k))
        result = None
        base = x
        while k:
            if k & 1:
                result = base if result is None else self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def arrays(self):
        clo = np.array([float(c.lo) for c in self.consts] or [0.0])
        chi = np.array([float(c.hi) for c in self.consts] or [0.0])
        return (
            np.array(self.ops, dtype=np.int64),
            np.array(self.a, dtype=np.int64),
            np.array(self.b, dtype=np.int64),
            clo,
            chi,
        )


def _is_zero(c):
    return c is not None and float(c.lo) == 0.0 and float(c.hi) == 0.0


def _is_one(c):
    return c is not None and float(c.lo) == 1.0 and float(c.hi) == 1.0


def _literal(text: str) -> Interval:
    try:
        return Interval.from_string(text)
    except ParseError:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise ParseError(f"bad number {text!r}") from exc


def _exponent(node: ast.AST) -> Fraction:
    """Read an exponent that is an integer or a half-integer."""
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_exponent(node.operand)
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return Fraction(node.value)
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Div):
        num = _exponent(node.left)
        den = _exponent(node.right)
        if den == 0:
            raise ParseError("zero denominator in exponent")
        return num / den
    raise ParseError("exponents must be integers or half-integers")


class _Lowering:
    def __init__(self, tape: Tape, source: str, names: dict[str, int]):
        self.tape = tape
        self.source = source
        self.names = names

    def __call__(self, node: ast.AST) -> int:
        t = self.tape
        if isinstance(node, ast.Expression):
            return self(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ParseError(f"unsupported literal {node.value!r}")
            return t.const(_literal(ast.get_source_segment(self.source, node)))
        if isinstance(node, ast.Name):
            if node.id not in self.names:
                raise ParseError(f"unknown name {node.id!r}")
            return self.names[node.id]
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return t.neg(self(node.operand))
            if isinstance(node.op, ast.UAdd):
                return self(node.operand)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                e = _exponent(node.right)
                base = self(node.left)
                if e.denominator == 1:
                    return t.power(base, e.numerator)
                if e.denominator == 2:
                    return t.power(t.sqrt(base), e.numerator)
                raise ParseError(f"unsupported exponent {e}")
            ops = {ast.Add: t.add, ast.Sub: t.sub, ast.Mult: t.mul, ast.Div: t.div}
            fn = ops.get(type(node.op))
            if fn is not None:
                return fn(self(node.left), self(node.right))
        if isinstance(node, ast.Call):
            if isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1 and not node.keywords:
                return t.sqrt(self(node.args[0]))
            raise ParseError("the only function is sqrt(expr)")
        raise ParseError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _param_value(value) -> Interval:
    if isinstance(value, Interval):
        return value
    if isinstance(value, str):
        return Interval.from_string(value)
    if isinstance(value, Fraction):
        return Interval.from_rational(value)
    return Interval(float(value))


def parse_program(text: str, overrides: dict | None = None):
    """Parse field text into ``(names, params, equations)``.

    ``params`` maps each declared parameter to its Interval value (after
    overrides); ``equations`` maps each variable name to its expression
    source.
    """
    overrides = dict(overrides or {})
    names: list[str] = []
    params: dict[str, Interval] = {}
    equations: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}"
        if line.startswith("var ") or line == "var":
            for name in line.split()[1:]:
                if not _NAME.match(name) or name in _RESERVED:
                    raise ParseError(f"{where}: bad variable name {name!r}")
                if name in names:
                    raise ParseError(f"{where}: variable {name!r} declared twice")
                names.append(name)
            continue
        if line.startswith("param "):
            body = line[len("param "):]
            if "=" not in body:
                raise ParseError(f"{where}: param needs a value")
            name, value = (s.strip() for s in body.split("=", 1))
            if not _NAME.match(name) or name in _RESERVED:
                raise ParseError(f"{where}: bad parameter name {name!r}")
            if name in params:
                raise ParseError(f"{where}: parameter {name!r} declared twice")
            params[name] = _param_value(overrides.pop(name, value))
            continue
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*'\s*=(.*)$", line)
        if not m:
            raise ParseError(f"{where}: cannot parse {raw.strip()!r}")
        name, rhs = m.group(1), m.group(2).strip()
        if name not in names:
            raise ParseError(f"{where}: equation for undeclared variable {name!r}")
        if name in equations:
            raise ParseError(f"{where}: second equation for {name!r}")
        if not rhs:
            raise ParseError(f"{where}: empty right-hand side")
        equations[name] = rhs
    if overrides:
        raise ParseError(f"unknown parameter(s): {', '.join(sorted(overrides))}")
    if not names:
        raise ParseError("no variables declared")
    missing = [v for v in names if v not in equations]
    if missing:
        raise ParseError(f"no equation for {', '.join(missing)}")
    clash = set(names) & set(params)
    if clash:
        raise ParseError(f"names used as both variable and parameter: {sorted(clash)}")
    return names, params, equations


def compile_program(names, params, equations) -> tuple[Tape, list[int], list[int]]:
    """Lower parsed equations to a tape; returns (tape, var_nodes, out_nodes)."""
    tape = Tape()
    table: dict[str, int] = {}
    var_nodes = []
    for j, v in enumerate(names):
        table[v] = tape.var(j)
        var_nodes.append(table[v])
    for p, val in params.items():
        table[p] = tape.const(val)
    outs = []
    for v in names:
        src = equations[v].replace("^", "**")
        try:
            tree = ast.parse(src, mode="eval")
        except SyntaxError as exc:
            raise ParseError(f"equation for {v}: {exc.msg}") from exc
        outs.append(_Lowering(tape, src, table)(tree))
    return tape, var_nodes, outs
