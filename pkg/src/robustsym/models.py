"""Built-in Hamiltonian / perturbation / symmetry instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import solve_alpha
from .linalg import hermitian_function, hermitize, operator_norm, spectral_decompose


@dataclass
class ModelInstance:
    name: str
    H: np.ndarray
    V: np.ndarray
    eta: float
    symmetries: dict[str, np.ndarray] = field(default_factory=dict)
    fragile: frozenset[str] = frozenset()  # symmetry candidates expected to wander
    metadata: dict = field(default_factory=dict)
    applicability: dict | None = None

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def summary(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "eta": self.eta,
            "v": operator_norm(self.V),
            "symmetries": sorted(self.symmetries),
            "fragile": sorted(self.fragile),
            "metadata": self.metadata,
            "applicability": self.applicability,
        }


def _ladder(N: int) -> np.ndarray:
    """Truncated annihilation operator a in the number basis."""
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1).astype(complex)


def harmonic_oscillator(N: int = 16) -> ModelInstance:
    """H = diag(k + 1/2) with parity Π and momentum p = i(a† − a)/√2 as the perturbation."""
    if N < 4:
        raise ValueError("harmonic oscillator needs N >= 4")
    k = np.arange(N)
    H = np.diag(k + 0.5).astype(complex)
    a = _ladder(N)
    p = 1j * (a.conj().T - a) / math.sqrt(2.0)
    Pi = np.diag((-1.0) ** k).astype(complex)
    S = (np.eye(N) - Pi) / 2
    return ModelInstance(
        "harmonic_oscillator", H, p, 1.0,
        symmetries={"parity": Pi, "odd_projector": S},
        metadata={"N": N, "m": 1.0, "omega": 1.0},
    )


def _check_energies(**energies) -> None:
    for name, val in energies.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


def line_applicability(E_C: float, E_L: float, E_J: float) -> dict:
    lhs = (E_J / E_C) / math.sqrt(E_L / E_C)
    rhs = 2.0 * math.sqrt(2.0) / solve_alpha().rho
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}


def circle_applicability(E_C: float, E_L: float, E_J: float) -> dict:
    lhs = 0.5 * math.pi**2 * E_L / E_C + E_J / (4.0 * E_C)
    rhs = 1.0 / solve_alpha().rho
    return {"lhs": lhs, "rhs": rhs, "holds": lhs < rhs}


def _line_operators(N: int, E_C: float, E_L: float, E_J: float, phi_ext: float):
    omega = math.sqrt(8.0 * E_C * E_L)
    H = np.diag(omega * (np.arange(N) + 0.5)).astype(complex)
    a = _ladder(N)
    phi = (2.0 * E_C / E_L) ** 0.25 * (a + a.conj().T)
    V = -E_J * hermitian_function(phi - phi_ext * np.eye(N), np.cos)
    return omega, H, hermitize(V)


def josephson_line(N: int = 64, E_C: float = 0.125, E_L: float = 0.125, E_J: float = 1e-3,
                   phi_ext: float = 0.0) -> ModelInstance:
    """Oscillator part √(8E_CE_L)(n + 1/2) perturbed by −E_J cos(φ − φ_ext); ε = 1, εv = E_J."""
    if N < 8:
        raise ValueError("josephson_line needs N >= 8")
    _check_energies(E_C=E_C, E_L=E_L)
    if E_J < 0:
        raise ValueError(f"E_J must be nonnegative, got {E_J}")
    omega, H, V = _line_operators(N, E_C, E_L, E_J, phi_ext)
    params = dict(E_C=E_C, E_L=E_L, E_J=E_J, phi_ext=phi_ext)
    _, _, V_big = _line_operators(N + 8, E_C, E_L, E_J, phi_ext)
    return ModelInstance(
        "josephson_line", H, V, omega,
        symmetries={f"P{k}": np.diag(np.eye(N)[k]).astype(complex) for k in range(min(N, 4))},
        metadata={"N": N, **params, "omega": omega,
                  "truncation_health": _health(V, V_big)},
        applicability=line_applicability(E_C, E_L, E_J),
    )


def charge_numbers(N_charge: int) -> np.ndarray:
    if N_charge < 1 or N_charge % 2 == 0:
        raise ValueError(f"N_charge must be a positive odd integer, got {N_charge}")
    m = (N_charge - 1) // 2
    return np.arange(-m, m + 1)


def phase_grid(N_charge: int) -> np.ndarray:
    """φ_j = 2πj/N on [0, 2π); the branch fixes ‖φ‖ → 2π."""
    return 2.0 * math.pi * np.arange(N_charge) / N_charge


def charge_transform(N_charge: int) -> np.ndarray:
    """Unitary F with F[j, n] = e^{inφ_j}/√N: charge amplitudes → phase-grid amplitudes."""
    n = charge_numbers(N_charge)
    phi = phase_grid(N_charge)
    return np.exp(1j * np.outer(phi, n)) / math.sqrt(N_charge)


def _circle_operators(N_charge: int, E_C: float, E_L: float, E_J: float, phi_ext: float):
    n = charge_numbers(N_charge)
    H = np.diag(4.0 * E_C * n.astype(float) ** 2).astype(complex)
    phi = phase_grid(N_charge)
    diag = 0.5 * E_L * phi**2 - E_J * np.cos(phi - phi_ext)
    F = charge_transform(N_charge)
    V = F.conj().T @ (diag[:, None] * F)
    return H, hermitize(V)


def josephson_circle(N_charge: int = 65, E_C: float = 1.0, E_L: float = 0.002, E_J: float = 0.04,
                     phi_ext: float = 0.0) -> ModelInstance:
    """H = 4E_C n² in the charge basis; V = (E_L/2)φ² − E_J cos(φ − φ_ext) from the phase grid."""
    _check_energies(E_C=E_C)
    if E_L < 0 or E_J < 0:
        raise ValueError("E_L and E_J must be nonnegative")
    H, V = _circle_operators(N_charge, E_C, E_L, E_J, phi_ext)
    _, V_big = _circle_operators(N_charge + 8, E_C, E_L, E_J, phi_ext)
    n = charge_numbers(N_charge)
    syms = {"P_n0": np.diag((n == 0).astype(float)).astype(complex)}
    if N_charge >= 3:
        syms["P_n1"] = np.diag((np.abs(n) == 1).astype(float)).astype(complex)
        # charge conjugation n → −n commutes with H but is not in span{P_k}
        syms["charge_parity"] = np.eye(N_charge)[::-1].astype(complex)
    return ModelInstance(
        "josephson_circle", H, V, 4.0 * E_C,
        symmetries=syms,
        fragile=frozenset({"charge_parity"}) if N_charge >= 3 else frozenset(),
        metadata={"N_charge": N_charge, "E_C": E_C, "E_L": E_L, "E_J": E_J, "phi_ext": phi_ext,
                  "analytic_norm_bound": 2.0 * math.pi**2 * E_L + E_J,
                  "truncation_health": _health(V, V_big)},
        applicability=circle_applicability(E_C, E_L, E_J),
    )


def _health(V: np.ndarray, V_big: np.ndarray) -> float:
    """Relative change of ‖V‖ under N → N + 8."""
    a, b = operator_norm(V), operator_norm(V_big)
    return abs(b - a) / b if b > 0 else 0.0


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (Z + Z.conj().T) / 2


def random_gapped(dim: int = 8, cluster_ranks=None, min_gap: float = 1.0, seed: int = 0) -> ModelInstance:
    """Haar-rotated spectrum with prescribed degeneracies, gaps in [min_gap, 2·min_gap), ‖V‖ = 1."""
    if cluster_ranks is None:
        cluster_ranks = [1] * dim
    ranks = [int(r) for r in cluster_ranks]
    if any(r < 1 for r in ranks) or sum(ranks) != dim:
        raise ValueError(f"cluster ranks {ranks} do not partition dimension {dim}")
    if not min_gap > 0:
        raise ValueError("min_gap must be positive")
    rng = np.random.default_rng(seed)
    gaps = min_gap * (1.0 + rng.random(len(ranks) - 1))
    values = np.concatenate(([0.0], np.cumsum(gaps)))
    Q = haar_unitary(dim, rng)
    diag = np.repeat(values, ranks)
    H = hermitize((Q * diag) @ Q.conj().T)
    V = random_hermitian(dim, rng)
    V = hermitize(V / operator_norm(V))

    edges = np.concatenate(([0], np.cumsum(ranks)))
    syms = {}
    for k, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        U = Q[:, lo:hi]
        syms[f"P{k}"] = U @ U.conj().T
    fragile = set()
    if max(ranks) > 1:
        S = np.zeros((dim, dim), dtype=complex)
        for lo, hi in zip(edges[:-1], edges[1:]):
            U = Q[:, lo:hi]
            S += U @ random_hermitian(hi - lo, rng) @ U.conj().T
        syms["block_random"] = hermitize(S / operator_norm(S))
        fragile.add("block_random")
    eta = float(np.min(gaps)) if len(gaps) else math.inf
    return ModelInstance(
        "random_gapped", H, V, eta, symmetries=syms, fragile=frozenset(fragile),
        metadata={"dim": dim, "cluster_ranks": ranks, "min_gap": min_gap, "seed": seed,
                  "values": values.tolist()},
    )


def degenerate_demo(coupling: float = 0.5) -> ModelInstance:
    """H = diag(0, 0, 1) with σ_x on the degenerate block plus a symmetric coupling to level 3.

    diag(1, 1, 0) lies in span{P_k}; diag(1, −1, 0) commutes with H but not
    with the limit projections onto (1, ±1, 0)/√2, so it is fragile.
    """
    H = np.diag([0.0, 0.0, 1.0]).astype(complex)
    a = coupling
    V = np.array([[0, 1, a], [1, 0, a], [a, a, 0]], dtype=complex)
    return ModelInstance(
        "degenerate_demo", H, V, 1.0,
        symmetries={"robust": np.diag([1.0, 1.0, 0.0]).astype(complex),
                    "fragile": np.diag([1.0, -1.0, 0.0]).astype(complex)},
        fragile=frozenset({"fragile"}),
        metadata={"coupling": coupling},
    )


def two_level() -> ModelInstance:
    """H = diag(0, 1), V = σ_x, S = diag(1, 0)."""
    return ModelInstance(
        "two_level",
        np.diag([0.0, 1.0]).astype(complex),
        np.array([[0, 1], [1, 0]], dtype=complex),
        1.0,
        symmetries={"P0": np.diag([1.0, 0.0]).astype(complex)},
    )


MODELS: dict[str, Callable[..., ModelInstance]] = {
    "harmonic_oscillator": harmonic_oscillator,
    "josephson_line": josephson_line,
    "josephson_circle": josephson_circle,
    "random_gapped": random_gapped,
    "degenerate_demo": degenerate_demo,
    "two_level": two_level,
}

_SIZE_KEY = {"harmonic_oscillator": "N", "josephson_line": "N", "josephson_circle": "N_charge",
             "random_gapped": "dim"}


def build_model(spec: dict) -> ModelInstance:
    """Instantiate from {"model": name, "params": {...}, "N": size}."""
    name = spec.get("model")
    if name not in MODELS:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    params = dict(spec.get("params") or {})
    if "N" in spec and spec["N"] is not None:
        if name not in _SIZE_KEY:
            raise ValueError(f"model {name!r} has a fixed size")
        params[_SIZE_KEY[name]] = int(spec["N"])
    return MODELS[name](**params)


def measured_gap(model: ModelInstance) -> float:
    return spectral_decompose(model.H).gap
