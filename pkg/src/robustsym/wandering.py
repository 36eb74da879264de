"""Grid-sup wandering ranges of symmetries under perturbed dynamics, and scaling fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .bounds import evaluate_bounds
from .grids import default_horizon, time_grid
from .linalg import as_matrix, check_hermitian, eigh, operator_norm, spectral_decompose

GRID_CAVEAT = "grid supremum; a lower bound of the supremum over all t"


class _RotatedObservable:
    """e^{itH}Se^{−itH} − S in the eigenbasis of H, for many t at once.

    In that basis the deviation has entries S̃_ij (e^{it(λ_i − λ_j)} − 1),
    so one eigendecomposition serves the whole grid.
    """

    def __init__(self, H, S):
        w, Q = eigh(check_hermitian(H))
        self.w, self.Q = w, Q
        self.St = Q.conj().T @ as_matrix(S) @ Q
        self.dw = w[:, None] - w[None, :]

    def deviations(self, ts: np.ndarray) -> np.ndarray:
        phase = np.expm1(1j * ts[:, None, None] * self.dw[None])
        return phase * self.St[None]


def _grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("t_grid is empty")
    return t


def wandering_state(H_eps, S, psi, t_grid, chunk: int = 512) -> float:
    """max_t ‖(e^{itH}Se^{−itH} − S)ψ‖ over the grid."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if not np.linalg.norm(psi) > 0:
        raise ValueError("psi must be nonzero")
    t = _grid(t_grid)
    rot = _RotatedObservable(H_eps, S)
    # unitary change of basis preserves the vector norm
    pt = rot.Q.conj().T @ psi
    best = 0.0
    for lo in range(0, t.size, chunk):
        D = rot.deviations(t[lo:lo + chunk])
        best = max(best, float(np.max(np.linalg.norm(D @ pt, axis=1))))
    return best


def wandering_norm(H_eps, S, t_grid, chunk: int = 256) -> float:
    """max_t ‖e^{itH}Se^{−itH} − S‖ over the grid."""
    t = _grid(t_grid)
    rot = _RotatedObservable(H_eps, S)
    best = 0.0
    for lo in range(0, t.size, chunk):
        D = rot.deviations(t[lo:lo + chunk])
        best = max(best, float(np.max(np.linalg.norm(D, ord=2, axis=(1, 2)))))
    return best


@dataclass(frozen=True)
class ScalingFit:
    gamma: float
    intercept: float
    r2: float
    gamma_ci: tuple[float, float]  # 95% interval from the slope standard error
    n_points: int

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "intercept": self.intercept,
            "r2": self.r2,
            "gamma_ci": list(self.gamma_ci),
            "n_points": self.n_points,
        }


def scaling_fit(eps_grid: Sequence[float], delta_values: Sequence[float]) -> ScalingFit:
    """Least-squares line through (log ε, log δ); gamma is the slope."""
    eps = np.asarray(eps_grid, dtype=float)
    delta = np.asarray(delta_values, dtype=float)
    if eps.shape != delta.shape:
        raise ValueError("eps and delta must have the same length")
    keep = (eps > 0) & (delta > 0)
    if not np.all(keep):
        warnings.warn(f"dropping {int((~keep).sum())} nonpositive points from the fit", RuntimeWarning, stacklevel=2)
    eps, delta = eps[keep], delta[keep]
    if eps.size < 4:
        raise ValueError(f"scaling fit needs at least 4 positive points, got {eps.size}")
    res = stats.linregress(np.log(eps), np.log(delta))
    half = stats.t.ppf(0.975, eps.size - 2) * res.stderr
    return ScalingFit(float(res.slope), float(res.intercept), float(res.rvalue**2),
                      (float(res.slope - half), float(res.slope + half)), int(eps.size))


@dataclass
class WanderingRow:
    epsilon: float
    delta_state: float
    delta_norm: float
    bound: float
    in_regime: bool

    @property
    def passed(self) -> bool:
        # outside the regime the bound makes no claim
        return (not self.in_regime) or self.delta_norm <= self.bound


@dataclass
class WanderingReport:
    rows: list[WanderingRow]
    t_policy: dict
    fit: ScalingFit | None = None
    caveat: str = GRID_CAVEAT
    bound_name: str = "bicommutant"
    extra: dict = field(default_factory=dict)

    @property
    def eps_grid(self) -> list[float]:
        return [r.epsilon for r in self.rows]

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows)

    CSV_HEADER = ("epsilon", "delta_state", "delta_norm", "bound", "in_regime", "pass")

    def csv_rows(self) -> list[tuple]:
        return [(r.epsilon, r.delta_state, r.delta_norm, r.bound, r.in_regime, r.passed) for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "rows": [dict(zip(self.CSV_HEADER, row)) for row in self.csv_rows()],
            "t_grid": self.t_policy,
            "fit": None if self.fit is None else self.fit.to_dict(),
            "caveat": self.caveat,
            "bound": self.bound_name,
            "all_pass": self.all_pass,
            **self.extra,
        }


def wandering_sweep(
    H,
    V,
    S,
    eps_grid: Sequence[float],
    psi=None,
    horizon: float | None = None,
    n_uniform: int = 2048,
    n_golden: int = 256,
    fit: bool = True,
) -> WanderingReport:
    """δ_state and δ_norm for each ε, compared against β(v/η)‖S‖ε.

    The horizon defaults to max(200/η, 20/(εv)) per ε; ψ defaults to the
    normalised all-ones vector.
    """
    H = check_hermitian(H)
    V = check_hermitian(V)
    S = as_matrix(S)
    gap = spectral_decompose(H).gap
    eta = gap if math.isfinite(gap) else 1.0
    v = operator_norm(V)
    norm_S = operator_norm(S)
    if psi is None:
        psi = np.ones(H.shape[0], dtype=complex) / math.sqrt(H.shape[0])
    rows = []
    for e in eps_grid:
        e = float(e)
        T = horizon if horizon is not None else default_horizon(eta, e, v)
        t = time_grid(T, n_uniform, n_golden)
        He = H + e * V
        rec = evaluate_bounds(v, eta, norm_S, 1, e)
        rows.append(WanderingRow(e, wandering_state(He, S, psi, t), wandering_norm(He, S, t),
                                 rec.wandering, rec.in_regime))
    report = WanderingReport(rows, {"horizon": horizon if horizon is not None else "max(200/eta, 20/(eps*v))",
                                    "n_uniform": n_uniform, "n_golden": n_golden})
    if fit:
        pos = [(r.epsilon, r.delta_norm) for r in rows if r.epsilon > 0 and r.delta_norm > 0]
        if len(pos) >= 4:
            report.fit = scaling_fit(*zip(*pos))
    return report


@dataclass(frozen=True)
class FragilityReport:
    eps_grid: tuple[float, ...]
    delta_norm: tuple[float, ...]
    floor: float
    threshold: float
    fragile: bool
    caveat: str = GRID_CAVEAT


def fragility_probe(H, V, S, eps_grid: Sequence[float], t_grid=None, threshold: float = 0.5) -> FragilityReport:
    """δ_norm per ε with horizons ∝ 1/ε; fragile when the minimum stays above ``threshold``."""
    H = check_hermitian(H)
    V = check_hermitian(V)
    gap = spectral_decompose(H).gap
    eta = gap if math.isfinite(gap) else 1.0
    v = operator_norm(V)
    out = []
    for e in eps_grid:
        e = float(e)
        t = t_grid if t_grid is not None else time_grid(default_horizon(eta, e, v))
        out.append(wandering_norm(H + e * V, S, t))
    pos = [d for e, d in zip(eps_grid, out) if e > 0]
    floor = min(pos) if pos else 0.0
    return FragilityReport(tuple(float(e) for e in eps_grid), tuple(out), floor, threshold, floor >= threshold)
