"""Conformal Hessians, Kelvin transforms and moving spheres, checked numerically."""

__version__ = "0.1.0"

from .cones import ConeSpec, Verdict, classify, sigma_k
from .conformal import a_w, conformal_hessian, invariance_residual, trace_identity_residual
from .fields import (
    Bubble,
    Constant,
    FundamentalSolution,
    GridField,
    HarmonicPolynomial,
    QuadraticField,
    kelvin_transform,
    load_grid,
    pushforward,
    save_grid,
    w_substitution,
)
from .kernels import BACKEND
from .mobius import MobiusMap, compose, inversion, kelvin_map, scaling, translation
from .spheres import Censored, SphereSweepConfig, critical_lambda, start_lambda

__all__ = [
    "BACKEND", "Bubble", "Censored", "ConeSpec", "Constant", "FundamentalSolution", "GridField",
    "HarmonicPolynomial", "MobiusMap", "QuadraticField", "SphereSweepConfig", "Verdict", "a_w",
    "classify", "compose", "conformal_hessian", "critical_lambda", "invariance_residual",
    "inversion", "kelvin_map", "kelvin_transform", "load_grid", "pushforward", "save_grid",
    "scaling", "sigma_k", "start_lambda", "trace_identity_residual", "translation",
    "w_substitution",
]
