"""Degenerate perturbation data for linear families H + εV.

The ε → 0 limits P_n(0) of the perturbed eigenprojections are obtained by
diagonalising V inside each degenerate eigenspace of H (first order, with an
optional second-order pass).  Perturbed eigenclusters are matched to those
limits by overlap, never by eigenvalue order, and the Kato unitary
U(ε) = Σ_n (I − R_n)^{−1/2} P_n(ε) P_n(0) intertwines the two families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractionError, PairingError, SupportError
from .linalg import (
    SpectralData,
    as_matrix,
    check_hermitian,
    eigh,
    operator_norm,
    spectral_decompose,
)

AMBIGUITY_RATIO = 0.9


@dataclass(frozen=True)
class Branch:
    """One analytic eigenvalue branch: h_n(ε), P_n(ε) and its limit P_n(0)."""

    value: float
    projector: np.ndarray
    limit_projector: np.ndarray
    parent: int  # index of the unperturbed cluster containing Range P_n(0)
    rank: int


@dataclass(frozen=True)
class PerturbedSpectral:
    eps: float
    clusters_eps: tuple[tuple[float, np.ndarray], ...]
    pairing: dict[int, int]  # perturbed cluster index -> unperturbed cluster index
    branches: tuple[Branch, ...]
    unperturbed: SpectralData = field(repr=False)

    @property
    def limit_projectors(self) -> list[np.ndarray]:
        return [b.limit_projector for b in self.branches]

    def branches_of(self, k: int) -> list[Branch]:
        return [b for b in self.branches if b.parent == k]


def _subclusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return np.split(np.arange(len(values)), breaks)


def _split_block(U: np.ndarray, M: np.ndarray, tol: float) -> list[np.ndarray]:
    """Split span(U) into eigenspaces of U† M U; returns orthonormal bases."""
    w, Y = eigh(0.5 * (U.conj().T @ M @ U + (U.conj().T @ M @ U).conj().T))
    return [U @ Y[:, idx] for idx in _subclusters(w, tol)]


def limit_projections(
    S0: SpectralData, V, second_order: bool = False, split_tol: float | None = None
) -> list[tuple[int, np.ndarray]]:
    """(parent cluster, orthonormal basis of Range P_n(0)) for every branch."""
    V = check_hermitian(V)
    if split_tol is None:
        split_tol = 1e-8 * max(1.0, operator_norm(V))
    pieces = []
    for k, c in enumerate(S0.clusters):
        if c.rank == 1:
            pieces.append((k, c.vectors))
            continue
        for U in _split_block(c.vectors, V, split_tol):
            if second_order and U.shape[1] > 1 and len(S0) > 1:
                # V (h_k − H)^+ V restricted to the first-order degenerate subspace
                M = np.zeros_like(V)
                for m, d in enumerate(S0.clusters):
                    if m != k:
                        M += V @ d.projector @ V / (c.value - d.value)
                pieces.extend((k, W) for W in _split_block(U, M, split_tol))
            else:
                pieces.append((k, U))
    return pieces


def perturbed_spectral(
    H,
    V,
    eps: float,
    cluster_tol: float | None = None,
    second_order: bool = False,
    S0: SpectralData | None = None,
) -> PerturbedSpectral:
    """Eigenclusters of H + εV matched to the limits P_n(0) and to the clusters of H."""
    H = check_hermitian(H)
    V = check_hermitian(V)
    if S0 is None:
        S0 = spectral_decompose(H, cluster_tol)
    pieces = limit_projections(S0, V, second_order=second_order)
    limits = [U @ U.conj().T for _, U in pieces]

    if eps == 0 or not np.any(V):
        # H + εV = H: reuse the unperturbed data rather than re-diagonalising
        clusters = tuple((c.value, c.projector) for c in S0.clusters)
        branches = tuple(
            Branch(S0.clusters[k].value, P, P, k, U.shape[1]) for (k, U), P in zip(pieces, limits)
        )
        return PerturbedSpectral(float(eps), clusters, {k: k for k in range(len(S0))}, branches, S0)

    Se = spectral_decompose(H + eps * V, cluster_tol)
    assigned: dict[int, int] = {}
    for n, c in enumerate(Se.clusters):
        overlaps = np.array([np.trace(c.projector @ P).real for P in limits]) / c.rank
        order = np.argsort(overlaps)[::-1]
        best = order[0]
        if len(order) > 1 and overlaps[order[1]] >= AMBIGUITY_RATIO * overlaps[best]:
            raise PairingError(
                f"crossing suspected at eps={eps:g}: cluster {n} overlaps two limits "
                f"({overlaps[best]:.3f}, {overlaps[order[1]]:.3f}); reduce eps"
            )
        if best in assigned:
            raise PairingError(
                f"limit projection {best} receives several perturbed clusters at eps={eps:g}: "
                "splitting beyond the computed order (try second_order=True)"
            )
        if c.rank != pieces[best][1].shape[1]:
            raise PairingError(
                f"rank mismatch between perturbed cluster {n} (rank {c.rank}) and its limit "
                f"(rank {pieces[best][1].shape[1]}) at eps={eps:g}"
            )
        assigned[best] = n

    if len(assigned) != len(limits):
        raise PairingError("some limit projections have no perturbed partner; reduce eps")

    branches = []
    for m, (k, U) in enumerate(pieces):
        c = Se.clusters[assigned[m]]
        branches.append(Branch(c.value, c.projector, limits[m], k, c.rank))

    pairing = {}
    for n, c in enumerate(Se.clusters):
        ov = [np.trace(c.projector @ d.projector).real for d in S0.clusters]
        pairing[n] = int(np.argmax(ov))
    clusters = tuple((c.value, c.projector) for c in Se.clusters)
    return PerturbedSpectral(float(eps), clusters, pairing, tuple(branches), S0)


@dataclass(frozen=True)
class KatoUnitary:
    eps: float
    U: np.ndarray
    U_minus_I: np.ndarray
    unitarity_residual: float
    projector_distance: tuple[float, ...]  # ‖P_n(ε) − P_n(0)‖ per branch
    R_norm: tuple[float, ...]  # ‖R_n(ε)‖ per branch
    sqrt_deviation: tuple[float, ...]  # ‖(I − R_n)^{−1/2} − I‖ per branch


def kato_unitary(ps: PerturbedSpectral) -> KatoUnitary:
    """U(ε) = Σ_n (I − R_n)^{−1/2} P_n(ε) P_n(0) with R_n = (P_n(ε) − P_n(0))²."""
    dim = ps.unperturbed.source_dim
    I = np.eye(dim)
    U = np.zeros((dim, dim), dtype=complex)
    # U − I = Σ_n [(S_n − I)P_n(ε) + (P_n(ε) − P_n(0))]P_n(0), S_n = (I − R_n)^{−1/2};
    # summed this way it vanishes exactly when nothing moves
    UmI = np.zeros((dim, dim), dtype=complex)
    dists, rnorms, sqdevs = [], [], []
    for b in ps.branches:
        D = b.projector - b.limit_projector
        R = D @ D
        r, Q = eigh(0.5 * (R + R.conj().T))
        r_norm = float(np.max(np.abs(r)))
        if r_norm >= 1.0:
            raise ContractionError(f"||R_n|| = {r_norm:.3f} >= 1 at eps={ps.eps:g}; reduce eps")
        rc = np.clip(r, 0.0, None)
        S_minus_I = (Q * (rc / (np.sqrt(1.0 - rc) * (1.0 + np.sqrt(1.0 - rc))))) @ Q.conj().T
        U += (S_minus_I + I) @ b.projector @ b.limit_projector
        UmI += (S_minus_I @ b.projector + D) @ b.limit_projector
        dists.append(operator_norm(D))
        rnorms.append(r_norm)
        sqdevs.append(operator_norm(S_minus_I))
    residual = operator_norm(U.conj().T @ U - I)
    return KatoUnitary(ps.eps, U, UmI, residual, tuple(dists), tuple(rnorms), tuple(sqdevs))


@dataclass(frozen=True)
class LipschitzEstimate:
    k: int
    c_k: float
    eps_grid: tuple[float, ...]
    ratios: tuple[float, ...]  # ‖(U(ε) − I)P_k‖/ε
    spread: float  # (max − min)/max of the ratios
    flat: bool


def lipschitz_constants(H, V, k: int, eps_grid: Sequence[float], flat_tol: float = 0.2, **kw) -> LipschitzEstimate:
    """c_k = max over the grid of ‖(U(ε) − I)P_k‖/ε."""
    H = check_hermitian(H)
    V = check_hermitian(V)
    S0 = kw.pop("S0", None) or spectral_decompose(H, kw.get("cluster_tol"))
    Pk = S0.clusters[k].projector
    eps_grid = [float(e) for e in eps_grid]
    if any(e <= 0 for e in eps_grid):
        raise ValueError("eps grid must be strictly positive")
    ratios = []
    for e in eps_grid:
        UmI = kato_unitary(perturbed_spectral(H, V, e, S0=S0, **kw)).U_minus_I
        ratios.append(operator_norm(UmI @ Pk) / e)
    hi = max(ratios)
    spread = (hi - min(ratios)) / hi if hi > 0 else 0.0
    return LipschitzEstimate(k, hi, tuple(eps_grid), tuple(ratios), spread, spread < flat_tol)


def _support_residual(x: np.ndarray, S0: SpectralData, support: Sequence[int]) -> np.ndarray:
    P = sum(S0.clusters[k].projector for k in support)
    return x - P @ x


def wandering_bound_eigenstate(S, psi, S0: SpectralData, support: Sequence[int], c: Sequence[float]) -> float:
    """C_ψ = 4‖S‖‖ψ‖ Σ_j c_{k_j} for ψ in the span of the listed eigenspaces."""
    psi = np.asarray(psi, dtype=complex)
    if len(c) != len(support):
        raise ValueError("one Lipschitz constant per supporting cluster is required")
    if np.linalg.norm(_support_residual(psi, S0, support)) > 1e-10 * max(1.0, np.linalg.norm(psi)):
        raise SupportError("psi is not supported on the listed clusters")
    return 4.0 * operator_norm(as_matrix(S)) * float(np.linalg.norm(psi)) * math.fsum(c)


def wandering_bound_finite_rank(S, S0: SpectralData, support: Sequence[int], c: Sequence[float]) -> float:
    """C = 4‖S‖ Σ_m c_{k_m} for S = Σ_m P_{k_m} S P_{k_m}."""
    S = as_matrix(S)
    if len(c) != len(support):
        raise ValueError("one Lipschitz constant per supporting cluster is required")
    compressed = sum(S0.clusters[k].projector @ S @ S0.clusters[k].projector for k in support)
    if np.max(np.abs(S - compressed)) > 1e-10 * max(1.0, float(np.max(np.abs(S)))):
        raise SupportError("S is not block-supported on the listed clusters")
    return 4.0 * operator_norm(S) * math.fsum(c)


def kato_ledger_rows(ps: PerturbedSpectral, ku: KatoUnitary) -> list[tuple[float, int, float, float]]:
    """(ε, n, ‖P_n(ε) − P_n(0)‖, ‖(U(ε) − I)P_k‖) with k the parent of branch n."""
    rows = []
    for n, b in enumerate(ps.branches):
        Pk = ps.unperturbed.clusters[b.parent].projector
        rows.append((ps.eps, n, ku.projector_distance[n], operator_norm(ku.U_minus_I @ Pk)))
    return rows
