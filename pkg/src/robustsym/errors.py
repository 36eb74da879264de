"""Exception hierarchy.

Input problems derive from ``ValueError``; numerical breakdowns (vanishing
gaps, ambiguous pairings, failed eigensolvers) derive from
``NumericalError``.  The CLI maps the two families to distinct exit codes.
"""

from __future__ import annotations


class NumericalError(RuntimeError):
    """A well-posed input on which the numerics cannot proceed."""


class EigensolverError(NumericalError):
    pass


class GapError(NumericalError):
    pass


class PairingError(NumericalError):
    """Perturbed clusters cannot be matched to their ε → 0 limits."""


class ContractionError(NumericalError):
    """‖(P_n(ε) − P_n(0))²‖ ≥ 1, so the Kato square root does not exist."""


class NonHermitianError(ValueError):
    def __init__(self, asymmetry: float, tol: float):
        self.asymmetry = asymmetry
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: max|A - A^H| = {asymmetry:.3e} > tol {tol:.3e}"
        )


class DimensionError(ValueError):
    pass


class RefinementRequired(ValueError):
    """Robustness was requested without the ε → 0 limit projections."""


class SupportError(ValueError):
    """A state or operator is not supported on the clusters it claims."""


class BoundViolation(AssertionError):
    """A measured quantity exceeded a certified bound in verification mode."""
