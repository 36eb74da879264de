import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian
from oracles import two_level_deviation
from robustsym.bounds import solve_alpha
from robustsym.grids import default_horizon, halving_grid, parse_eps_spec, time_grid
from robustsym.linalg import operator_norm, spectral_decompose
from robustsym.models import degenerate_demo, random_gapped, two_level
from robustsym.wandering import (
    fragility_probe,
    scaling_fit,
    wandering_norm,
    wandering_state,
    wandering_sweep,
)


def test_zero_at_unperturbed_symmetry():
    m = random_gapped(6, [2, 1, 3], seed=0)
    t = time_grid(100.0)
    for S in m.symmetries.values():
        assert wandering_norm(m.H, S, t) <= 1e-10
        assert wandering_state(m.H, S, np.ones(6), t) <= 1e-10


def test_two_level_matches_analytic_oracle():
    tl = two_level()
    e = 0.05
    t = time_grid(400.0, 4096, 128)
    S = tl.symmetries["P0"]
    He = tl.H + e * tl.V
    expect = float(np.max(two_level_deviation(e, t)))
    assert abs(wandering_norm(He, S, t) - expect) <= 1e-6
    psi = np.array([0.6, 0.8j])
    assert abs(wandering_state(He, S, psi, t) - expect * np.linalg.norm(psi)) <= 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_trivial_upper_bounds(n, seed):
    rng = np.random.default_rng(seed)
    H = random_hermitian(n, rng)
    S = random_hermitian(n, rng)
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    t = np.linspace(0, 30, 64)
    nS = operator_norm(S)
    assert 0 <= wandering_norm(H, S, t) <= 2 * nS * (1 + 1e-12)
    assert 0 <= wandering_state(H, S, psi, t) <= 2 * nS * np.linalg.norm(psi) * (1 + 1e-12)


def test_superset_grid_never_decreases():
    m = random_gapped(5, seed=2)
    He = m.H + 0.3 * m.V
    S = m.symmetries["P1"]
    small = np.linspace(0, 50, 100)
    big = np.union1d(small, np.linspace(0, 80, 333))
    assert wandering_norm(He, S, big) >= wandering_norm(He, S, small)
    assert wandering_state(He, S, np.ones(5), big) >= wandering_state(He, S, np.ones(5), small)


def test_errors():
    with pytest.raises(ValueError):
        wandering_norm(np.eye(2), np.eye(2), [])
    with pytest.raises(ValueError):
        wandering_state(np.eye(2), np.eye(2), np.zeros(2), [0.0])


def test_scaling_fit_exact_power_laws():
    eps = np.geomspace(1e-4, 1e-1, 8)
    f = scaling_fit(eps, 3 * eps)
    assert abs(f.gamma - 1.0) <= 1e-6 and f.r2 == pytest.approx(1.0)
    assert abs(scaling_fit(eps, np.sqrt(eps)).gamma - 0.5) <= 1e-6


def test_scaling_fit_drops_zeros_and_needs_four():
    eps = np.geomspace(1e-3, 1e-1, 5)
    d = 2 * eps
    d[0] = 0.0
    with pytest.warns(RuntimeWarning):
        f = scaling_fit(eps, d)
    assert f.n_points == 4
    d[1] = 0.0
    with pytest.raises(ValueError), pytest.warns(RuntimeWarning):
        scaling_fit(eps, d)


def test_completely_robust_linear_scaling():
    m = random_gapped(10, seed=17)
    S = spectral_decompose(m.H)
    X = sum(np.cos(k) * P for k, P in enumerate(S.projectors))
    X = X / operator_norm(X)
    eps0 = 0.5 * S.gap / (operator_norm(m.V) * solve_alpha().rho)
    rep = wandering_sweep(m.H, m.V, X, halving_grid(eps0, 5))
    assert 0.9 <= rep.fit.gamma <= 1.1
    assert rep.all_pass


def test_fragility_examples():
    dd = degenerate_demo()
    eps = np.geomspace(1e-3, 1e-1, 5)
    fr = fragility_probe(dd.H, dd.V, dd.symmetries["fragile"], eps)
    assert fr.fragile and all(d > 0.5 for d in fr.delta_norm)
    assert fragility_probe(dd.H, dd.V, dd.symmetries["fragile"], [0.0]).delta_norm[0] <= 1e-10
    c = solve_alpha()
    v = operator_norm(dd.V)
    rob = fragility_probe(dd.H, dd.V, dd.symmetries["robust"], halving_grid(1.0 / (v * c.rho), 4))
    for e, d in zip(rob.eps_grid, rob.delta_norm):
        assert d <= c.beta * v * e
    assert not rob.fragile


def test_finite_dim_bound_nondegenerate():
    c = solve_alpha()
    for seed in range(4):
        m = random_gapped(6, seed=seed)
        S = spectral_decompose(m.H)
        e = 0.5 * S.gap / (c.rho * operator_norm(m.V))
        P = m.symmetries["P2"]
        d = wandering_norm(m.H + e * m.V, P, time_grid(200 / S.gap))
        assert d <= 14 * math.sqrt(len(S)) * operator_norm(m.V) * e / S.gap


def test_report_serialisation():
    dd = degenerate_demo()
    rep = wandering_sweep(dd.H, dd.V, dd.symmetries["robust"], [0.0, 1e-3], fit=False)
    d = rep.to_dict()
    assert d["rows"][0]["delta_norm"] <= 1e-10
    assert "lower bound" in d["caveat"]
    assert rep.CSV_HEADER == ("epsilon", "delta_state", "delta_norm", "bound", "in_regime", "pass")


def test_grid_helpers():
    t = time_grid(10.0, 11, 5)
    assert t[0] == 0.0 and t[-1] == 10.0 and np.all(np.diff(t) > 0)
    assert default_horizon(1.0) == 200.0
    assert default_horizon(1.0, 1e-3, 1.0) == pytest.approx(2e4)
    assert np.allclose(parse_eps_spec("1e-3:1e-1:3:log"), [1e-3, 1e-2, 1e-1])
    assert np.allclose(parse_eps_spec("0:1:3"), [0, 0.5, 1])
    for bad in ("1:2", "0:1:3:log", "1:2:0", "1:2:3:cubic"):
        with pytest.raises(ValueError):
            parse_eps_spec(bad)
    with pytest.raises(ValueError):
        time_grid(-1.0)
