"""Exact Jeffrey-Kirwan and equivariant residues, with quotient-integration drivers."""

from .eqres import eq_res
from .fracform import Frac, FracSum, Polynomial
from .jkres import ResidueValue, closed_form_simple, jk_res, limit_at_zero, res_plus
from .ratline import OrderedBasis, PerturbedCovector

__all__ = [
    "Frac",
    "FracSum",
    "OrderedBasis",
    "PerturbedCovector",
    "Polynomial",
    "ResidueValue",
    "closed_form_simple",
    "eq_res",
    "jk_res",
    "limit_at_zero",
    "res_plus",
]
