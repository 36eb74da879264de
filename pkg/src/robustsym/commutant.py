"""Commutant and bicommutant of a Hermitian matrix, and symmetry verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, RefinementRequired
from .linalg import SpectralData, as_matrix, commutator, operator_norm


def commutant_basis(S: SpectralData) -> list[np.ndarray]:
    """Hilbert–Schmidt orthonormal basis of {H}′.

    The commutant is spanned by the matrix units |u_i⟩⟨u_j| with both vectors
    in the same eigenspace, so its dimension is Σ_k rank(P_k)².
    """
    basis = []
    for c in S.clusters:
        U = c.vectors
        for i in range(c.rank):
            for j in range(c.rank):
                basis.append(np.outer(U[:, i], U[:, j].conj()))
    return basis


def bicommutant_basis(S: SpectralData) -> list[np.ndarray]:
    """{H}″ = span{P_k} in finite dimension."""
    return [c.projector.copy() for c in S.clusters]


def bicommutant_projection(A, S: SpectralData) -> np.ndarray:
    """Σ_k (tr(P_k A)/rank P_k) P_k, the closest element of span{P_k}."""
    A = as_matrix(A)
    out = np.zeros_like(A)
    for c in S.clusters:
        out += (np.trace(c.projector @ A) / c.rank) * c.projector
    return out


@dataclass
class SymmetryClassification:
    is_symmetry: bool
    is_robust: bool | None
    is_completely_robust: bool
    residuals: dict[str, float] = field(default_factory=dict)
    tol: float = 0.0

    def to_dict(self) -> dict:
        return {
            "checks": dict(self.residuals),
            "verdicts": {
                "is_symmetry": self.is_symmetry,
                "is_robust": self.is_robust,
                "is_completely_robust": self.is_completely_robust,
            },
            "tol": self.tol,
        }


def _max_comm(A: np.ndarray, projectors: Sequence[np.ndarray]) -> float:
    return max((operator_norm(commutator(A, P)) for P in projectors), default=0.0)


def classify(
    A,
    S0: SpectralData,
    refinement: Sequence[np.ndarray] | None = None,
    tol: float | None = None,
    check_robust: bool | None = None,
) -> SymmetryClassification:
    """Classify ``A`` as a symmetry, robust symmetry, completely robust symmetry.

    ``refinement`` is the list of ε → 0 limit projections P_n(0) of a specific
    perturbation (see :func:`robustsym.kato.perturbed_spectral`).  Robustness
    is only decided when it is supplied; asking for it without one raises
    :class:`RefinementRequired`.
    """
    A = as_matrix(A)
    if A.shape[0] != S0.source_dim:
        raise DimensionError("operator and spectral data dimensions differ")
    if check_robust is None:
        check_robust = refinement is not None
    if check_robust and refinement is None:
        raise RefinementRequired("robustness needs the limit projections P_n(0); pass refinement=")
    if refinement is not None and hasattr(refinement, "limit_projectors"):
        refinement = refinement.limit_projectors
    if tol is None:
        tol = 1e-8 * operator_norm(A)

    res = {"symmetry": _max_comm(A, S0.projectors)}
    res["completely_robust"] = operator_norm(A - bicommutant_projection(A, S0))
    is_sym = res["symmetry"] <= tol
    is_cr = is_sym and res["completely_robust"] <= tol

    is_rob = None
    if check_robust:
        res["robust"] = _max_comm(A, refinement)
        # bicommutant elements commute with every subprojection of the P_k
        is_rob = is_sym and (is_cr or res["robust"] <= tol)
    return SymmetryClassification(is_sym, is_rob, is_cr, res, tol)
