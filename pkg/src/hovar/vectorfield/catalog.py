"""Built-in benchmark fields, their default initial conditions and first integrals."""

from __future__ import annotations

from ..interval import Interval, ivector
from .field import VectorField

LORENZ = """\
var x y z
x' = 10*(y - x)
y' = x*(28 - z) - y
z' = x*y - 8/3*z
"""

HENON_HEILES = """\
# coordinates (x, y, x', y')
var x y u v
x' = u
y' = v
u' = -x*(1 + 2*y)
v' = x^2 - y*(1 + y)
"""

PCR3BP = """\
# coordinates (x, y, x', y') in the rotating frame
var x y u v
param mu = 0.0009537
x' = u
y' = v
u' = 2*v + x - (1 - mu)*(x + mu)/((x + mu)^2 + y^2)^(3/2) - mu*(x - 1 + mu)/((x - 1 + mu)^2 + y^2)^(3/2)
v' = -2*u + y - (1 - mu)*y/((x + mu)^2 + y^2)^(3/2) - mu*y/((x - 1 + mu)^2 + y^2)^(3/2)
"""

ROSSLER = """\
var x y z
param a = 5.7
param b = 0.2
x' = -y - z
y' = x + b*y
z' = b + z*(x - a)
"""


def _ks_text(modes: int = 10) -> str:
    names = [f"a{k}" for k in range(1, modes + 1)]
    lines = [f"# Galerkin projection onto {modes} odd Fourier modes", "var " + " ".join(names), "param nu = 0.127"]
    for k in range(1, modes + 1):
        terms = [f"{k * k}*(1 - nu*{k * k})*a{k}"]
        conv = [f"a{n}*a{k - n}" for n in range(1, k)]
        if conv:
            terms.append(f"- {k}*({' + '.join(conv)})")
        tail = [f"a{n}*a{n + k}" for n in range(1, modes - k + 1)]
        if tail:
            terms.append(f"+ {2 * k}*({' + '.join(tail)})")
        lines.append(f"a{k}' = " + " ".join(terms))
    return "\n".join(lines) + "\n"


KS10 = _ks_text(10)


def lorenz() -> VectorField:
    return VectorField(LORENZ, name="lorenz")


def henon_heiles() -> VectorField:
    return VectorField(HENON_HEILES, name="henon_heiles")


def pcr3bp(mu="0.0009537") -> VectorField:
    return VectorField(PCR3BP, name="pcr3bp", mu=mu)


def ks10(nu="0.127") -> VectorField:
    return VectorField(KS10, name="ks10", nu=nu)


def rossler(a="5.7", b="0.2") -> VectorField:
    return VectorField(ROSSLER, name="rossler", a=a, b=b)


SYSTEMS = {
    "lorenz": lorenz,
    "henon_heiles": henon_heiles,
    "pcr3bp": pcr3bp,
    "ks10": ks10,
    "rossler": rossler,
}

# Points close to periodic orbits, as binary64 values of the published decimals.
DEFAULT_IC = {
    "lorenz": (-2.1473681756955529387, 2.078047612582596404, 27.0),
    "henon_heiles": (0.0, 0.10903, 0.5677233993382853, 0.0),
    "pcr3bp": (0.92080349132074, 0.0, 0.0, 0.1044476727069111),
    "ks10": (
        0.2012106,
        1.2899797585174486,
        0.2012106,
        -0.37786628185377774,
        -0.042309451521292417,
        0.043161614695331821,
        0.0069402112803455653,
        -0.0041564870501656455,
        -0.00079448972725675504,
        0.00033160609117820303,
    ),
    "rossler": (0.0, -5.0, 0.03),
}

# Approximate periods of the orbits through DEFAULT_IC (nonvalidated).
APPROX_PERIOD = {
    "lorenz": 1.5587,
    "henon_heiles": 5.7239,
    "pcr3bp": 3.0821,
    "ks10": 2.2443,
}


def system(name: str, **params) -> VectorField:
    try:
        factory = SYSTEMS[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; choose from {', '.join(SYSTEMS)}") from None
    F = factory()
    return F.with_params(**params) if params else F


def default_ic(name: str) -> Interval:
    return ivector(list(DEFAULT_IC[name]))


def henon_heiles_energy(x: Interval) -> Interval:
    """First integral of the built-in field over a box (x, y, u, v).

    E = (u^2 - v^2)/2 + (x^2 - y^2)/2 + x^2 y - y^3/3.  The y equation
    x^2 - y(1 + y) makes the field a gradient only for the indefinite
    kinetic term, so the usual (u^2 + v^2)/2 energy is not conserved.
    """
    px, py, u, v = x[0], x[1], x[2], x[3]
    half = Interval(0.5)
    return half * (u.square() - v.square()) + half * (px.square() - py.square()) + px.square() * py - py**3 / 3.0


def jacobi_constant(x: Interval, mu="0.0009537") -> Interval:
    """C = 2 Omega(x, y) - (u^2 + v^2) over a box (x, y, u, v)."""
    mu = mu if isinstance(mu, Interval) else Interval.from_string(str(mu))
    px, py, u, v = x[0], x[1], x[2], x[3]
    r1 = ((px + mu).square() + py.square()).sqrt()
    r2 = ((px - 1.0 + mu).square() + py.square()).sqrt()
    omega = 0.5 * (px.square() + py.square()) + (1.0 - mu) / r1 + mu / r2
    return 2.0 * omega - (u.square() + v.square())
