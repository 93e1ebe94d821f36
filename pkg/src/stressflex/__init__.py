"""Numerical experiments on coned polytope frameworks: stresses, flexes, stability."""

__version__ = "0.1.0"

from .analysis import (
    analyze_framework,
    affine_flex_test,
    check_lemma_psd,
    conic_at_infinity,
    prestress_energy,
    projection_check,
    stability_test,
    stress_flex_residual,
    sweep_strong_conjecture,
)
from .polytope import (
    ConedFramework,
    Framework,
    Polytope,
    cone,
    make_named,
    parse_off,
    random_simple_polytope,
    serialize_off,
    slide,
)
from .rigidity import flex_space, numerical_rank, rigidity_matrix, stress_space, trivial_flex_basis
from .stress import izmestiev_stress, strictly_proper_check, translate_to_apex_origin, wachspress
