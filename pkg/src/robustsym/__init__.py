"""Robust symmetries of perturbed Hamiltonians: KAM block-diagonalisation, wandering ranges and certified bounds."""

from .bounds import BoundSet, catalan, catalan_gen, evaluate_bounds, solve_alpha
from .commutant import bicommutant_basis, classify, commutant_basis
from .errors import (
    BoundViolation,
    ContractionError,
    GapError,
    NonHermitianError,
    NumericalError,
    PairingError,
)
from .homological import solve_homological
from .kam import assemble, conjugation_residual, eternal_deviation, kam_expand
from .kato import kato_unitary, lipschitz_constants, perturbed_spectral
from .linalg import operator_norm, spectral_decompose
from .models import build_model
from .wandering import fragility_probe, scaling_fit, wandering_norm, wandering_state

__version__ = "0.1.0"
