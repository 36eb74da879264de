"""End-to-end checks of measured quantities against the certified bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import evaluate_bounds, solve_alpha
from .grids import time_grid
from .kam import DEFAULT_ORDER, assemble, conjugation_residual, eternal_deviation, kam_expand
from .linalg import check_hermitian, operator_norm, spectral_decompose
from .wandering import scaling_fit, wandering_norm


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    bound: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def bound_checks(H, V, eps: float, S=None, order: int = DEFAULT_ORDER, n_time: int = 2048) -> list[Check]:
    """Eternal, bicommutant-wandering and ‖W − I‖ checks for one instance at strength ε.

    ``S`` defaults to the normalised Σ_k c_k P_k with c_k = (−1)^k, an element
    of span{P_k} with ‖S‖ = 1.  The time grid has horizon 200/η and ``n_time``
    points, one eighth of them golden-ratio spaced.
    """
    H = check_hermitian(H)
    V = check_hermitian(V)
    spec = spectral_decompose(H)
    eta = spec.gap
    v = operator_norm(V)
    if S is None:
        S = sum((-1.0) ** k * c.projector for k, c in enumerate(spec.clusters))
    norm_S = operator_norm(S)
    exp = kam_expand(spec, V, order)
    asm = assemble(exp, eps, warn=False)
    rec = evaluate_bounds(v, eta, norm_S, len(spec), eps)
    n_golden = n_time // 8
    t = time_grid(200.0 / eta, n_time - n_golden, n_golden)

    checks = []
    ete = eternal_deviation(H, V, eps, asm.Vhat, t)
    checks.append(Check("eternal", ete, rec.eternal, ete <= rec.eternal))
    wn = wandering_norm(H + eps * V, S, t)
    checks.append(Check("wandering_bicommutant", wn, rec.wandering, wn <= rec.wandering))
    if all(r == 1 for r in spec.ranks):
        checks.append(Check("wandering_finite_dim", wn, rec.finite_dim, wn <= rec.finite_dim))
    wi = operator_norm(asm.W_minus_I)
    checks.append(Check("W_minus_I_exp", wi, rec.W_minus_I_exp, wi <= rec.W_minus_I_exp))
    checks.append(Check("exp_vs_linear", rec.W_minus_I_exp, rec.W_minus_I_linear,
                        rec.W_minus_I_exp <= rec.W_minus_I_linear))
    res = conjugation_residual(spec, V, eps, asm)
    # truncation sanity: the order-S remainder must not swamp the O(ε) bounds
    checks.append(Check("conjugation_residual", res, rec.eternal, res <= rec.eternal))
    return checks


def residual_slope(H, V, order: int, eps0: float | None = None, points: int = 4) -> tuple[float, list[tuple[float, float]]]:
    """Log-log slope of the conjugation residual on ε₀, ε₀/2, … (ε₀ = η/(2vρ) by default)."""
    spec = spectral_decompose(check_hermitian(H))
    exp = kam_expand(spec, V, order)
    if eps0 is None:
        eps0 = 0.5 * exp.bounds.eps_threshold
    rows = []
    for j in range(points):
        e = eps0 / 2.0**j
        rows.append((e, conjugation_residual(spec, V, e, assemble(exp, e, warn=False))))
    fit = scaling_fit(*zip(*rows))
    return fit.gamma, rows


def in_regime_eps(H, V, fraction: float = 0.5) -> float:
    spec = spectral_decompose(check_hermitian(H))
    v = operator_norm(V)
    return fraction * spec.gap / (v * solve_alpha().rho) if v > 0 else math.inf
