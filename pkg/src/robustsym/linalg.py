"""Dense Hermitian linear algebra shared by every other module.

Matrices are plain complex ``numpy`` arrays.  ``SpectralData`` groups the
eigenpairs of a Hermitian matrix into clusters of (numerically) equal
eigenvalues and carries the orthogonal projector onto each eigenspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, EigensolverError, NonHermitianError

ABS_CLUSTER_TOL = 1e-9
REL_CLUSTER_TOL = 1e-12


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return A


def hermiticity_tolerance(A: np.ndarray) -> float:
    return 1e-12 * max(1.0, float(np.max(np.abs(A), initial=0.0)))


def check_hermitian(A, tol: float | None = None) -> np.ndarray:
    """Return ``A`` as a complex array after checking ‖A − A†‖_max ≤ tol.

    The returned matrix is exactly Hermitian (the rounding-level asymmetry is
    averaged away) so that ``eigh`` sees a consistent input.
    """
    A = as_matrix(A)
    if tol is None:
        tol = hermiticity_tolerance(A)
    asym = float(np.max(np.abs(A - A.conj().T), initial=0.0))
    if asym > tol:
        raise NonHermitianError(asym, tol)
    return hermitize(A)


def hermitize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def eigh(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"Hermitian eigensolver failed: {exc}") from exc


def operator_norm(A, fast: bool = False, tol: float = 1e-12, maxiter: int = 10_000) -> float:
    """Largest singular value of ``A``.

    ``fast=True`` switches to power iteration on A†A for matrices larger than
    512; the result then approaches the norm from below.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if n == 0:
        return 0.0
    if not fast or n <= 512:
        return float(np.linalg.norm(A, 2))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(maxiter):
        y = A.conj().T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = float(np.sqrt(ny))
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    return sigma


@dataclass(frozen=True)
class Cluster:
    value: float
    projector: np.ndarray
    vectors: np.ndarray  # orthonormal columns spanning the eigenspace

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class SpectralData:
    clusters: tuple[Cluster, ...]
    gap: float
    source_dim: int
    matrix: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.clusters])

    @property
    def projectors(self) -> list[np.ndarray]:
        return [c.projector for c in self.clusters]

    @property
    def ranks(self) -> list[int]:
        return [c.rank for c in self.clusters]

    @cached_property
    def basis(self) -> np.ndarray:
        """Unitary whose columns are the cluster eigenvectors, cluster by cluster."""
        return np.hstack([c.vectors for c in self.clusters])

    @cached_property
    def labels(self) -> np.ndarray:
        """Cluster index of every column of :attr:`basis`."""
        return np.repeat(np.arange(len(self.clusters)), self.ranks)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.source_dim, self.source_dim), dtype=complex)
        for c in self.clusters:
            out += c.value * c.projector
        return out

    def invariant_residuals(self) -> dict[str, float]:
        n = self.source_dim
        idem = herm = orth = 0.0
        total = np.zeros((n, n), dtype=complex)
        for k, c in enumerate(self.clusters):
            P = c.projector
            idem = max(idem, float(np.max(np.abs(P @ P - P))))
            herm = max(herm, float(np.max(np.abs(P - P.conj().T))))
            for d in self.clusters[k + 1:]:
                orth = max(orth, float(np.max(np.abs(P @ d.projector))))
            total += P
        return {
            "idempotence": idem,
            "hermiticity": herm,
            "orthogonality": orth,
            "completeness": float(np.max(np.abs(total - np.eye(n)))),
            "reconstruction": float(np.max(np.abs(self.reconstruct() - self.matrix))),
        }


def default_cluster_tol(H: np.ndarray) -> float:
    return max(ABS_CLUSTER_TOL, REL_CLUSTER_TOL * operator_norm(H))


def spectral_decompose(H, cluster_tol: float | None = None) -> SpectralData:
    """Cluster the spectrum of a Hermitian matrix into distinct eigenvalues.

    Sorted eigenvalues are merged by single linkage: neighbours closer than
    ``cluster_tol`` share a cluster, whose value is the mean of its members.
    """
    H = check_hermitian(H)
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(H)
    if cluster_tol < 0:
        raise ValueError("cluster_tol must be nonnegative")
    w, Q = eigh(H)
    if not np.all(np.isfinite(w)):
        raise EigensolverError("eigensolver returned non-finite eigenvalues")

    breaks = np.flatnonzero(np.diff(w) > cluster_tol) + 1
    bounds = np.concatenate(([0], breaks, [len(w)]))
    clusters = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        U = Q[:, lo:hi]
        clusters.append(Cluster(float(np.mean(w[lo:hi])), U @ U.conj().T, U))
    values = np.array([c.value for c in clusters])
    gap = float(np.min(np.diff(values))) if len(values) > 1 else float("inf")
    return SpectralData(tuple(clusters), gap, H.shape[0], H)


def _check_dim(A: np.ndarray, S: SpectralData) -> np.ndarray:
    A = as_matrix(A)
    if A.shape[0] != S.source_dim:
        raise DimensionError(f"matrix of dim {A.shape[0]} vs spectral data of dim {S.source_dim}")
    return A


def block_diagonal_part(A, S: SpectralData) -> np.ndarray:
    """[A] = Σ_k P_k A P_k."""
    A = _check_dim(A, S)
    out = np.zeros_like(A)
    for c in S.clusters:
        U = c.vectors
        out += U @ (U.conj().T @ A @ U) @ U.conj().T
    return out


def off_diagonal_part(A, S: SpectralData) -> np.ndarray:
    """{A} = A − [A]."""
    A = _check_dim(A, S)
    return A - block_diagonal_part(A, S)


class Propagator:
    """e^{−itH} for many t from a single eigendecomposition."""

    def __init__(self, H):
        self.H = check_hermitian(H)
        self.w, self.Q = eigh(self.H)

    def __call__(self, t: float) -> np.ndarray:
        return (self.Q * np.exp(-1j * t * self.w)) @ self.Q.conj().T


def evolve(H, t: float) -> np.ndarray:
    """Exact unitary e^{−itH} via the eigendecomposition of ``H``."""
    return Propagator(H)(t)


def hermitian_function(H, f) -> np.ndarray:
    """f(H) for a Hermitian matrix and a vectorised scalar function ``f``."""
    w, Q = eigh(check_hermitian(H))
    return (Q * f(w)) @ Q.conj().T
