"""Numerics for generalized Orlicz (Musielak-Orlicz) spaces on masked grids."""

from .domain_field import (DiscreteMeasure, FieldExpr, GridDomain, SampledField, build_grid, ess_sup,
                           gradient, integrate, measure, sample)
from .modular_norm import HypothesisError, NormResult, luxemburg_norm, lp_norm, modular
from .phi_functions import PhiFunction, make_family

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure", "FieldExpr", "GridDomain", "SampledField", "build_grid", "ess_sup", "gradient",
    "integrate", "measure", "sample", "HypothesisError", "NormResult", "luxemburg_norm", "lp_norm", "modular",
    "PhiFunction", "make_family",
]
