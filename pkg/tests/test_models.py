import math

import numpy as np
import pytest

from robustsym.bounds import solve_alpha
from robustsym.linalg import commutator, operator_norm, spectral_decompose
from robustsym.models import (
    MODELS,
    build_model,
    charge_transform,
    circle_applicability,
    harmonic_oscillator,
    josephson_circle,
    josephson_line,
    line_applicability,
    measured_gap,
    random_gapped,
)


def test_oscillator():
    m = harmonic_oscillator(4)
    assert spectral_decompose(m.H).values.tolist() == [0.5, 1.5, 2.5, 3.5]
    assert m.eta == 1.0 == measured_gap(m)
    assert np.all(commutator(m.symmetries["odd_projector"], m.H) == 0)
    m16 = harmonic_oscillator(16)
    assert operator_norm(commutator(m16.symmetries["odd_projector"], m16.V)) > 0.5
    assert np.max(np.abs(m16.V - m16.V.conj().T)) == 0
    with pytest.raises(ValueError):
        harmonic_oscillator(3)


def test_line_examples():
    # ω = √(8 E_C E_L): unit frequency needs E_C = E_L = 1/√8
    s8 = 1 / math.sqrt(8)
    m = josephson_line(16, E_C=s8, E_L=s8, E_J=0.01)
    assert m.eta == pytest.approx(1.0) and measured_gap(m) == pytest.approx(1.0, abs=1e-9)
    m = josephson_line(16, E_C=1 / 8, E_L=1 / 8, E_J=0.01)
    assert m.eta == pytest.approx(math.sqrt(1 / 8)) and measured_gap(m) == pytest.approx(m.eta, abs=1e-9)
    z = josephson_line(16, E_J=0.0)
    assert np.all(z.V == 0) and z.applicability["holds"]
    for N in (64, 96):
        V = josephson_line(N, E_J=1.0, phi_ext=0.3).V
        assert operator_norm(V) <= 1.05
    with pytest.raises(ValueError):
        josephson_line(7)
    with pytest.raises(ValueError):
        josephson_line(16, E_C=0.0)


def test_line_flag_flips_at_threshold():
    rho = solve_alpha().rho
    E_C, E_L = 1.0, 0.25
    crit = 2 * math.sqrt(2) / rho * math.sqrt(E_L / E_C) * E_C
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if line_applicability(E_C, E_L, mid)["holds"]:
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(crit, rel=1e-12)


def test_circle_examples():
    m = josephson_circle(3, E_C=1.0, E_L=0.01, E_J=0.01)
    assert np.allclose(np.diag(m.H).real, [4, 0, 4])
    S = spectral_decompose(m.H)
    assert S.values.tolist() == [0.0, 4.0] and S.ranks == [1, 2] and S.gap == 4.0
    z = josephson_circle(5, E_L=0.0, E_J=0.0)
    assert np.allclose(z.V, 0)
    with pytest.raises(ValueError):
        josephson_circle(64)


def test_circle_norm_statement():
    for N in (65, 97):
        for E_L, E_J in ((0.002, 0.04), (0.01, 0.0), (0.0, 0.3)):
            m = josephson_circle(N, E_L=E_L, E_J=E_J)
            assert operator_norm(m.V) <= 1.05 * (2 * math.pi**2 * E_L + E_J)


def test_circle_flag_flips_at_threshold():
    rho = solve_alpha().rho
    E_C, E_J = 1.0, 0.01
    crit = (1 / rho - E_J / (4 * E_C)) * 2 * E_C / math.pi**2
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if circle_applicability(E_C, mid, E_J)["holds"]:
            lo = mid
        else:
            hi = mid
    assert lo == pytest.approx(crit, rel=1e-12)


def test_charge_transform_round_trip():
    F = charge_transform(65)
    assert np.max(np.abs(F.conj().T @ F - np.eye(65))) <= 1e-10
    x = np.random.default_rng(0).standard_normal(65)
    assert np.max(np.abs(F.conj().T @ (F @ x) - x)) <= 1e-10


def test_random_gapped():
    m = random_gapped(3, [1, 1, 1], 1.0, seed=0)
    assert m.eta >= 1.0 and len(spectral_decompose(m.H)) == 3
    a = random_gapped(8, [2, 3, 1, 2], 0.7, seed=5)
    b = random_gapped(8, [2, 3, 1, 2], 0.7, seed=5)
    assert np.array_equal(a.H, b.H) and np.array_equal(a.V, b.V)
    assert all(np.array_equal(a.symmetries[k], b.symmetries[k]) for k in a.symmetries)
    assert abs(a.eta - measured_gap(a)) <= 1e-10
    assert operator_norm(a.V) == pytest.approx(1.0)
    assert "block_random" in a.fragile
    with pytest.raises(ValueError):
        random_gapped(4, [1, 2])


def test_declared_gap_and_symmetries_all_models():
    for name in MODELS:
        m = build_model({"model": name})
        H = m.H
        assert np.max(np.abs(H - H.conj().T)) <= 1e-12
        assert np.max(np.abs(m.V - m.V.conj().T)) <= 1e-12
        assert abs(m.eta - measured_gap(m)) <= 1e-9
        for S in m.symmetries.values():
            assert operator_norm(commutator(S, H)) <= 1e-8


def test_truncation_health_pinned_sizes():
    assert josephson_line(64, E_J=1.0).metadata["truncation_health"] <= 0.01
    assert josephson_circle(65).metadata["truncation_health"] <= 0.01


def test_build_model_errors():
    with pytest.raises(ValueError):
        build_model({"model": "nope"})
    with pytest.raises(ValueError):
        build_model({"model": "two_level", "N": 4})
    assert build_model({"model": "josephson_circle", "N": 33}).dim == 33
