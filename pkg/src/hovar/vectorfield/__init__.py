"""Polynomial and rational vector fields with Taylor jets of the flow and its derivative."""

from .catalog import (
    APPROX_PERIOD,
    DEFAULT_IC,
    SYSTEMS,
    default_ic,
    henon_heiles,
    henon_heiles_energy,
    jacobi_constant,
    ks10,
    lorenz,
    pcr3bp,
    rossler,
    system,
)
from .field import Jet, VectorField, c0_jet, c1_jet, divergence, eval_field, jacobian

__all__ = [
    "VectorField",
    "Jet",
    "c0_jet",
    "c1_jet",
    "eval_field",
    "jacobian",
    "divergence",
    "system",
    "SYSTEMS",
    "DEFAULT_IC",
    "APPROX_PERIOD",
    "default_ic",
    "lorenz",
    "henon_heiles",
    "pcr3bp",
    "ks10",
    "rossler",
    "henon_heiles_energy",
    "jacobi_constant",
]
