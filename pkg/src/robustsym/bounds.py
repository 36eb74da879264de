"""Certified constants, Catalan numbers and the closed-form bound evaluators."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

SQRT3 = math.sqrt(3.0)


def alpha_equation(alpha: float) -> float:
    """g(α) = (α + 1)(e^{2/α} − 1) − 3; strictly decreasing on (1, 100)."""
    return (alpha + 1.0) * math.expm1(2.0 / alpha) - 3.0


@dataclass(frozen=True)
class ConstantsSet:
    alpha: float
    beta: float
    rho: float
    alpha_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=None)
def solve_alpha(tol: float = 1e-15) -> ConstantsSet:
    """Root of g by bisection on (1, 100), then β and ρ derived from it."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = 1.0, 100.0
    g_lo, g_hi = alpha_equation(lo), alpha_equation(hi)
    if not (g_lo > 0 > g_hi):
        raise ArithmeticError("bisection bracket does not straddle the root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if alpha_equation(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * mid:
            break
    alpha = lo if abs(alpha_equation(lo)) <= abs(alpha_equation(hi)) else hi
    beta = 16.0 * math.pi * alpha / SQRT3 * math.expm1(0.5 / alpha)
    rho = 4.0 * math.pi * alpha / SQRT3
    return ConstantsSet(alpha, beta, rho, alpha_equation(alpha))


# -- Catalan numbers (indexed from 1: d_1 = d_2 = 1, d_3 = 2, ...) ----------

_catalan_table = [0, 1]


def catalan(s: int) -> int:
    """d_1 = 1, d_s = Σ_{l=1}^{s−1} d_l d_{s−l}, in exact integer arithmetic."""
    if isinstance(s, bool) or not isinstance(s, int) or s < 1:
        raise ValueError(f"Catalan index must be a positive integer, got {s!r}")
    while len(_catalan_table) <= s:
        m = len(_catalan_table)
        _catalan_table.append(sum(_catalan_table[l] * _catalan_table[m - l] for l in range(1, m)))
    return _catalan_table[s]


def catalan_gen(y: float) -> float:
    """D(y) = (1 − √(1 − 4y))/(2y) on [0, 1/4], with D(0) = 1.

    Evaluated as 2/(1 + √(1 − 4y)), which is the same function without the
    cancellation at small y.
    """
    if not 0.0 <= y <= 0.25:
        raise ValueError(f"D(y) is defined for 0 <= y <= 1/4, got {y}")
    return 2.0 / (1.0 + math.sqrt(1.0 - 4.0 * y))


def compositions(s: int, n: int):
    """All tuples of n positive integers summing to s."""
    for cuts in itertools.combinations(range(1, s), n - 1):
        edges = (0, *cuts, s)
        yield tuple(b - a for a, b in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class ConvolutionCheck:
    holds: bool
    min_slack: int
    worst: tuple[int, int]  # (s, n) attaining the minimum slack


def convolution_inequality_check(s_max: int) -> ConvolutionCheck:
    """Exhaustively verify Σ_{|l|=s} d_{l_1}···d_{l_n} ≤ d_s for s ≤ s_max, all n."""
    if not 1 <= s_max <= 14:
        raise ValueError("exhaustive enumeration is limited to 1 <= s_max <= 14")
    best = None
    for s in range(1, s_max + 1):
        for n in range(1, s + 1):
            total = sum(math.prod(catalan(l) for l in comp) for comp in compositions(s, n))
            slack = catalan(s) - total
            if best is None or slack < best[0]:
                best = (slack, (s, n))
    return ConvolutionCheck(best[0] >= 0, best[0], best[1])


# -- f_α and its linear / quadratic majorants --------------------------------


def f_alpha(x: float, alpha: float | None = None) -> float:
    """f_α(x) = exp((1 − √(1 − x))/(2α)) − 1 on [0, 1]."""
    if alpha is None:
        alpha = solve_alpha().alpha
    if not 0.0 <= x <= 1.0:
        raise ValueError("f_alpha is defined on [0, 1]")
    return math.expm1((1.0 - math.sqrt(1.0 - x)) / (2.0 * alpha))


def f_alpha_linear(x: float, alpha: float | None = None) -> float:
    if alpha is None:
        alpha = solve_alpha().alpha
    return math.expm1(0.5 / alpha) * x


def f_alpha_quadratic(x: float, alpha: float | None = None) -> float:
    if alpha is None:
        alpha = solve_alpha().alpha
    c = math.expm1(0.5 / alpha) - 0.25 / alpha
    return x / (4.0 * alpha) + c * x * x


def f_alpha_table(n_points: int) -> list[tuple[float, float, float, float]]:
    """Rows (x, f_α(x), linear(x), quadratic(x)) on a uniform grid of [0, 1]."""
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    alpha = solve_alpha().alpha
    rows = []
    for i in range(n_points):
        x = i / (n_points - 1)
        rows.append((x, f_alpha(x, alpha), f_alpha_linear(x, alpha), f_alpha_quadratic(x, alpha)))
    return rows


# -- bound evaluators ---------------------------------------------------------


@dataclass(frozen=True)
class BoundRecord:
    eps: float
    wandering: float
    eternal: float
    W_minus_I_linear: float
    W_minus_I_exp: float
    K_norm: float
    Vhat_norm: float
    finite_dim: float
    in_regime: bool
    exp_valid: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundSet:
    """Instance constants v = ‖V‖ and η, with everything derived from them."""

    v: float
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.v < 0:
            raise ValueError("v must be nonnegative")
        if self.v > 0:
            alpha = solve_alpha().alpha
            assert math.isclose(self.eps_threshold, 1.0 / (4.0 * alpha * self.b), rel_tol=1e-12)

    @property
    def b(self) -> float:
        return math.pi * self.v / (SQRT3 * self.eta)

    @property
    def eps_threshold(self) -> float:
        """η/(vρ); infinite for a vanishing perturbation."""
        if self.v == 0:
            return math.inf
        return self.eta / (self.v * solve_alpha().rho)

    def order_bound(self, s: int) -> float:
        """α^{s−1} b^s d_s, majorising (π/(√3η))‖B_s‖."""
        alpha = solve_alpha().alpha
        return alpha ** (s - 1) * self.b**s * catalan(s)

    def evaluate(self, eps: float, norm_S: float = 1.0, d_clusters: int = 1) -> BoundRecord:
        return evaluate_bounds(self.v, self.eta, norm_S, d_clusters, eps)


def evaluate_bounds(v: float, eta: float, norm_S: float, d_clusters: int, eps: float) -> BoundRecord:
    """Every closed-form bound at strength ε.

    Exponential-form bounds need αεb ≤ 1/4; outside that range they are
    reported as ``inf`` with ``exp_valid=False`` rather than raising.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    c = solve_alpha()
    b = math.pi * v / (SQRT3 * eta)
    ratio = v / eta
    y = c.alpha * eps * b
    if 0.25 < y <= 0.25 * (1 + 1e-12):
        y = 0.25  # ε sitting on the threshold up to rounding
    exp_valid = y <= 0.25
    if exp_valid:
        D = catalan_gen(y)
        K_norm = eps * b * D
        W_exp = math.expm1(K_norm)
        Vhat = v * D
    else:
        K_norm = W_exp = Vhat = math.inf
    in_regime = v == 0 or eps <= eta / (v * c.rho)
    return BoundRecord(
        eps=eps,
        wandering=c.beta * ratio * norm_S * eps,
        eternal=0.5 * c.beta * ratio * eps,
        W_minus_I_linear=0.25 * c.beta * ratio * eps,
        W_minus_I_exp=W_exp,
        K_norm=K_norm,
        Vhat_norm=Vhat,
        finite_dim=14.0 * math.sqrt(d_clusters) * v * eps * norm_S / eta,
        in_regime=in_regime,
        exp_valid=exp_valid,
    )
