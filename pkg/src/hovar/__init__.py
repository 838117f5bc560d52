"""Validated integration of ODEs and their first-order variational equations."""

from .interval import Interval
from .poincare import PoincareMap, Section, first_return
from .stepper import Integrator, StepConfig
from .vectorfield import VectorField, default_ic, system

__version__ = "0.1.0"

__all__ = [
    "Integrator",
    "Interval",
    "PoincareMap",
    "Section",
    "StepConfig",
    "VectorField",
    "default_ic",
    "first_return",
    "system",
]
