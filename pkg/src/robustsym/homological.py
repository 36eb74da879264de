"""Closed-form solution of the homological equation i[X, H] = {B} with [X] = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GapError
from .linalg import SpectralData, as_matrix, commutator, off_diagonal_part, operator_norm

#: π/√3, the constant in ‖X‖ ≤ (π/√3)‖B‖/η
HOMOLOGICAL_CONSTANT = math.pi / math.sqrt(3.0)


@dataclass(frozen=True)
class HomologicalSolution:
    X: np.ndarray
    norm_X: float
    bound_X: float
    residual: float


def _check_ordering(values: np.ndarray, gap: float) -> None:
    # |h_k − h_l| ≥ η|k − l| for increasingly ordered distinct eigenvalues
    k = np.arange(len(values))
    lhs = np.abs(values[:, None] - values[None, :])
    rhs = gap * np.abs(k[:, None] - k[None, :])
    assert np.all(lhs >= rhs * (1 - 1e-12)), "cluster values are not increasingly ordered"


def homological_operator(S: SpectralData, B: np.ndarray) -> np.ndarray:
    """X = i Σ_{k≠l} P_k B P_l / (h_k − h_l), evaluated in the cluster eigenbasis."""
    Q = S.basis
    h = S.values[S.labels]
    diff = h[:, None] - h[None, :]
    off = S.labels[:, None] != S.labels[None, :]
    Bt = Q.conj().T @ B @ Q
    Xt = np.zeros_like(Bt)
    Xt[off] = 1j * Bt[off] / diff[off]
    return Q @ Xt @ Q.conj().T


def solve_homological(S: SpectralData, B) -> HomologicalSolution:
    """Solve i[X, H] = {B} for the unique X with vanishing block-diagonal part.

    Raises :class:`GapError` when the spectral data has no usable gap: a single
    cluster with nonzero {B}, or a zero gap.
    """
    B = as_matrix(B)
    if B.shape[0] != S.source_dim:
        raise DimensionError("B and spectral data dimensions differ")
    H = S.matrix
    norm_B = operator_norm(B)
    offB = off_diagonal_part(B, S)

    if len(S) < 2:
        if operator_norm(offB) > 1e-12 * max(1.0, norm_B):
            raise GapError("no off-diagonal sector: H has a single distinct eigenvalue")
        X = np.zeros_like(B)
        return HomologicalSolution(X, 0.0, 0.0, operator_norm(offB))
    if not S.gap > 0:
        raise GapError(f"minimal spectral gap is {S.gap}")
    _check_ordering(S.values, S.gap)

    X = homological_operator(S, B)
    residual = operator_norm(1j * commutator(X, H) - offB)
    return HomologicalSolution(X, operator_norm(X), HOMOLOGICAL_CONSTANT * norm_B / S.gap, residual)
