"""Parameter grids: perturbation strengths and time samples."""

from __future__ import annotations

import math

import numpy as np

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def time_grid(horizon: float, n_uniform: int = 2048, n_golden: int = 256) -> np.ndarray:
    """Sorted samples of [0, horizon]: a uniform grid plus golden-ratio points.

    The golden-ratio sequence frac(k/φ) is incommensurate with the uniform
    spacing, which keeps quasi-periodic recurrences from aliasing away.
    """
    if not horizon >= 0 or not math.isfinite(horizon):
        raise ValueError(f"horizon must be finite and nonnegative, got {horizon}")
    uniform = np.linspace(0.0, horizon, n_uniform)
    k = np.arange(1, n_golden + 1)
    golden = horizon * np.mod(k / GOLDEN, 1.0)
    return np.unique(np.concatenate([uniform, golden]))


def default_horizon(eta: float, eps: float = 0.0, v: float = 0.0) -> float:
    """T = max(200/η, 20/(ε·v)); fragile drift builds up on the 1/ε scale."""
    T = 200.0 / eta
    if eps > 0:
        T = max(T, 20.0 / (eps * max(v, 1e-12)))
    return T


def parse_eps_spec(spec: str) -> np.ndarray:
    """Parse ``start:stop:points[:log]`` (``lin`` is the default spacing)."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"eps spec must be start:stop:points[:log], got {spec!r}")
    start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    mode = parts[3] if len(parts) == 4 else "lin"
    if points < 1:
        raise ValueError("eps grid needs at least one point")
    if mode == "log":
        if start <= 0 or stop <= 0:
            raise ValueError("log-spaced eps grid needs positive endpoints")
        return np.geomspace(start, stop, points)
    if mode != "lin":
        raise ValueError(f"unknown spacing {mode!r}")
    return np.linspace(start, stop, points)


def halving_grid(eps0: float, points: int = 4) -> np.ndarray:
    return eps0 / 2.0 ** np.arange(points)
