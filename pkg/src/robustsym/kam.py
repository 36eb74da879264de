"""Quantum KAM / Schrieffer–Wolff block-diagonalisation of H + εV.

Each order s produces B_s, the generator K_s solving i[K_s, H] = {B_s}, and
the block-diagonal correction V̂_{s−1} = [B_s].  B_s is read off from the
order-truncated conjugation e^{−iK}(H + εV)e^{iK} with K = Σ_{j<s} ε^j K_j,
which equals the nested-commutator multi-index sums without enumerating them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bounds import BoundSet
from .errors import DimensionError, GapError
from .grids import default_horizon, time_grid
from .homological import HOMOLOGICAL_CONSTANT, solve_homological
from .linalg import (
    Propagator,
    SpectralData,
    block_diagonal_part,
    check_hermitian,
    eigh,
    hermitize,
    operator_norm,
    spectral_decompose,
)

DEFAULT_ORDER = 8


class MatrixPolynomial:
    """Σ_s ε^s C_s with matrix coefficients, truncated at a fixed order."""

    def __init__(self, coefficients):
        c = np.asarray(coefficients, dtype=complex)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise DimensionError("coefficients must share one square shape")
        self.coefficients = c

    @classmethod
    def zeros(cls, order: int, dim: int) -> "MatrixPolynomial":
        return cls(np.zeros((order + 1, dim, dim), dtype=complex))

    @classmethod
    def from_terms(cls, terms: dict[int, np.ndarray], order: int, dim: int) -> "MatrixPolynomial":
        p = cls.zeros(order, dim)
        for s, C in terms.items():
            if s <= order:
                p.coefficients[s] = C
        return p

    @property
    def order(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    def __getitem__(self, s: int) -> np.ndarray:
        return self.coefficients[s]

    def __add__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        return MatrixPolynomial(self.coefficients + other.coefficients)

    def __mul__(self, scalar) -> "MatrixPolynomial":
        return MatrixPolynomial(self.coefficients * scalar)

    __rmul__ = __mul__

    def nonzero_orders(self) -> list[int]:
        return [s for s in range(self.order + 1) if np.any(self.coefficients[s])]

    def lowest_order(self) -> int:
        nz = self.nonzero_orders()
        return nz[0] if nz else self.order + 1

    def commutator(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        """[self, other] truncated at ``other.order``."""
        out = MatrixPolynomial.zeros(other.order, other.dim)
        mine = self.nonzero_orders()
        theirs = other.nonzero_orders()
        for j in mine:
            A = self.coefficients[j]
            for m in theirs:
                if j + m > out.order:
                    break
                B = other.coefficients[m]
                out.coefficients[j + m] += A @ B - B @ A
        return out

    def evaluate(self, eps: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for C in self.coefficients[::-1]:
            out = out * eps + C
        return out


def conjugate_truncated(K: MatrixPolynomial, A: MatrixPolynomial) -> MatrixPolynomial:
    """e^{−iK} A e^{iK} = Σ_n (−i)^n/n! ad_K^n(A), truncated at ``A.order``.

    K has no ε⁰ term, so the n-th nested commutator starts at order
    n + lowest_order(A) and the series terminates exactly.
    """
    if K.lowest_order() == 0:
        raise ValueError("generator must vanish at eps = 0")
    total = MatrixPolynomial(A.coefficients.copy())
    term = A
    n = 1
    while n + A.lowest_order() <= A.order:
        term = K.commutator(term) * (-1j / n)
        total = total + term
        n += 1
    return total


@dataclass
class KamExpansion:
    order: int
    B: list[np.ndarray]  # B_1..B_S
    K: list[np.ndarray]  # K_1..K_S
    Vhat: list[np.ndarray]  # V̂_0..V̂_{S-1}
    spectral: SpectralData
    V: np.ndarray = field(repr=False)

    @property
    def v(self) -> float:
        return operator_norm(self.V)

    @property
    def bounds(self) -> BoundSet:
        return BoundSet(self.v, self.spectral.gap)

    @property
    def norms(self) -> dict[str, list[float]]:
        return {
            "B": [operator_norm(B) for B in self.B],
            "K": [operator_norm(K) for K in self.K],
            "Vhat": [operator_norm(V) for V in self.Vhat],
        }

    def ledger_rows(self) -> list[tuple[int, float, float, float, float]]:
        """(s, ‖B_s‖, ‖K_s‖, ‖V̂_{s−1}‖, certified bound on ‖B_s‖)."""
        bs = self.bounds
        n = self.norms
        rows = []
        for s in range(1, self.order + 1):
            bound = bs.order_bound(s) / HOMOLOGICAL_CONSTANT * bs.eta
            rows.append((s, n["B"][s - 1], n["K"][s - 1], n["Vhat"][s - 1], bound))
        return rows

    def K_polynomial(self, upto: int | None = None) -> MatrixPolynomial:
        upto = self.order if upto is None else upto
        dim = self.spectral.source_dim
        return MatrixPolynomial.from_terms({s: self.K[s - 1] for s in range(1, upto + 1)}, self.order, dim)


def _order_coefficient(H: np.ndarray, V: np.ndarray, Ks: Sequence[np.ndarray], s: int) -> np.ndarray:
    dim = H.shape[0]
    K = MatrixPolynomial.from_terms({j: Kj for j, Kj in enumerate(Ks, start=1)}, s, dim)
    A = MatrixPolynomial.from_terms({0: H, 1: V}, s, dim)
    return conjugate_truncated(K, A)[s]


def kam_expand(S: SpectralData, V, order: int = DEFAULT_ORDER) -> KamExpansion:
    """Expansion coefficients B_s, K_s, V̂_{s−1} for s = 1..order."""
    if order < 1:
        raise ValueError("order must be at least 1")
    V = check_hermitian(V)
    if V.shape[0] != S.source_dim:
        raise DimensionError("V and spectral data dimensions differ")
    if len(S) > 1 and not S.gap > 0:
        raise GapError(f"minimal spectral gap is {S.gap}")
    H = S.matrix
    Bs, Ks, Vhats = [], [], []
    for s in range(1, order + 1):
        # B_s is Hermitian by construction; symmetrise away rounding drift
        B = V.copy() if s == 1 else hermitize(_order_coefficient(H, V, Ks, s))
        Bs.append(B)
        Ks.append(hermitize(solve_homological(S, B).X))
        Vhats.append(block_diagonal_part(B, S))
    return KamExpansion(order, Bs, Ks, Vhats, S, V)


@dataclass(frozen=True)
class Assembly:
    eps: float
    K: np.ndarray
    W: np.ndarray
    W_minus_I: np.ndarray
    Vhat: np.ndarray


def assemble(exp: KamExpansion, eps: float, warn: bool = True) -> Assembly:
    """K(ε), W(ε) = e^{iK(ε)} and V̂(ε) from the truncated series."""
    if warn and eps > exp.bounds.eps_threshold:
        warnings.warn(
            f"eps={eps:g} exceeds the convergence threshold {exp.bounds.eps_threshold:g}",
            RuntimeWarning,
            stacklevel=2,
        )
    dim = exp.spectral.source_dim
    K = np.zeros((dim, dim), dtype=complex)
    for s in range(exp.order, 0, -1):
        K = (K + exp.K[s - 1]) * eps
    K = hermitize(K)
    Vhat = np.zeros((dim, dim), dtype=complex)
    for Vs in exp.Vhat[::-1]:
        Vhat = Vhat * eps + Vs
    Vhat = hermitize(Vhat)
    # W − I = Q diag(e^{iλ} − 1) Q†, with e^{iλ} − 1 = −2 sin²(λ/2) + i sin λ
    lam, Q = eigh(K)
    phase_m1 = -2.0 * np.sin(lam / 2.0) ** 2 + 1j * np.sin(lam)
    W_minus_I = (Q * phase_m1) @ Q.conj().T
    return Assembly(eps, K, np.eye(dim) + W_minus_I, W_minus_I, Vhat)


def conjugation_residual(S: SpectralData, V, eps: float, assembly: Assembly) -> float:
    """‖W†(H + εV)W − (H + εV̂)‖.

    Evaluated as ‖W†[H + εV, W − I] + ε(V − V̂)‖, which is the same operator
    with no O(‖H‖) cancellation.
    """
    V = np.asarray(V, dtype=complex)
    A = S.matrix + eps * V
    D = assembly.W_minus_I
    R = assembly.W.conj().T @ (A @ D - D @ A) + eps * (V - assembly.Vhat)
    return operator_norm(R)


def eternal_deviation(H, V, eps: float, Vhat, t_grid=None, chunk: int = 256) -> float:
    """max_t ‖e^{−it(H+εV)} − e^{−it(H+εV̂)}‖ over ``t_grid``."""
    H = np.asarray(H, dtype=complex)
    full = Propagator(H + eps * np.asarray(V, dtype=complex))
    block = Propagator(H + eps * np.asarray(Vhat, dtype=complex))
    if t_grid is None:
        t_grid = time_grid(default_horizon(spectral_decompose(H).gap))
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0:
        raise ValueError("t_grid is empty")
    best = 0.0
    for lo in range(0, t.size, chunk):
        ts = t[lo:lo + chunk]
        U1 = np.einsum("ij,tj,kj->tik", full.Q, np.exp(-1j * np.outer(ts, full.w)), full.Q.conj())
        U2 = np.einsum("ij,tj,kj->tik", block.Q, np.exp(-1j * np.outer(ts, block.w)), block.Q.conj())
        best = max(best, float(np.max(np.linalg.norm(U1 - U2, ord=2, axis=(1, 2)))))
    return best


PerturbationFamily = Callable[[float], np.ndarray]


class TabulatedFamily:
    """V(ξ) known only at sampled ξ; no interpolation, no continuity assumed."""

    def __init__(self, samples: dict[float, np.ndarray]):
        self.samples = {float(k): check_hermitian(v) for k, v in samples.items()}

    def __call__(self, xi: float) -> np.ndarray:
        try:
            return self.samples[float(xi)]
        except KeyError:
            raise KeyError(f"V(xi) is not tabulated at xi={xi!r}") from None

    @property
    def sup_norm(self) -> float:
        return max(operator_norm(v) for v in self.samples.values())


def kam_diagonal(S: SpectralData, family: PerturbationFamily, eps: float, order: int = DEFAULT_ORDER):
    """Diagonal evaluation for ε-dependent perturbations.

    The coefficients are recomputed with V(ξ) frozen at ξ = ε and the series
    is then summed at the same ε.  Returns ``(expansion, assembly)``.
    """
    exp = kam_expand(S, family(eps), order)
    return exp, assemble(exp, eps, warn=False)
