"""Evaluatable potentials: built-in catalog plus the expression DSL."""

from .base import (
    PotentialModel,
    TiltedModel,
    eval_gradient,
    eval_hessian,
    eval_potential,
)
from .builtin import (
    ALIASES,
    BUILTIN_KINDS,
    Harmonic,
    LatticePhi4,
    QuadraticForm,
    UncoupledDoubleWell,
    XYChain,
    make_model,
    model_from_spec,
)
from .dsl import DslPotential, eval_ast, parse_potential_dsl, serialize

__all__ = [
    "ALIASES",
    "BUILTIN_KINDS",
    "DslPotential",
    "Harmonic",
    "LatticePhi4",
    "PotentialModel",
    "QuadraticForm",
    "TiltedModel",
    "UncoupledDoubleWell",
    "XYChain",
    "eval_ast",
    "eval_gradient",
    "eval_hessian",
    "eval_potential",
    "make_model",
    "model_from_spec",
    "parse_potential_dsl",
    "serialize",
]
