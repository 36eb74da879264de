import math

import numpy as np
import pytest

from conftest import random_hermitian
from robustsym.errors import ContractionError, PairingError, SupportError
from robustsym.kato import (
    Branch,
    PerturbedSpectral,
    kato_ledger_rows,
    kato_unitary,
    limit_projections,
    lipschitz_constants,
    perturbed_spectral,
    wandering_bound_eigenstate,
    wandering_bound_finite_rank,
)
from robustsym.linalg import operator_norm, spectral_decompose
from robustsym.models import degenerate_demo, random_gapped

I3 = np.eye(3)


def block_sigma_x():
    H = np.diag([0.0, 0.0, 1.0]).astype(complex)
    V = np.zeros((3, 3), dtype=complex)
    V[0, 1] = V[1, 0] = 1.0
    return H, V


def test_eps_zero_is_unperturbed():
    m = random_gapped(6, [2, 1, 3], seed=0)
    S = spectral_decompose(m.H)
    ps = perturbed_spectral(m.H, m.V, 0.0)
    assert ps.pairing == {k: k for k in range(len(S))}
    for (h, P), c in zip(ps.clusters_eps, S.clusters):
        assert h == c.value and np.allclose(P, c.projector)
    ku = kato_unitary(ps)
    assert np.allclose(ku.U, np.eye(6), atol=1e-12)


def test_sigma_x_block_limits():
    H, V = block_sigma_x()
    ps = perturbed_spectral(H, V, 0.0)
    limits = [b.limit_projector for b in ps.branches if b.parent == 0]
    plus = np.array([1, 1, 0]) / math.sqrt(2)
    minus = np.array([1, -1, 0]) / math.sqrt(2)
    expected = [np.outer(minus, minus), np.outer(plus, plus)]
    assert len(limits) == 2
    for L, E in zip(limits, expected):
        assert np.allclose(L, E, atol=1e-12)


def test_nondegenerate_limits_equal_projectors():
    m = random_gapped(5, seed=4)
    S = spectral_decompose(m.H)
    ps = perturbed_spectral(m.H, m.V, 1e-3, S0=S)
    assert [b.parent for b in ps.branches] == list(range(5))
    for b, c in zip(ps.branches, S.clusters):
        assert np.array_equal(b.limit_projector, c.projector)


def test_perturbed_spectral_invariants():
    for seed in range(5):
        m = random_gapped(10, [2, 3, 1, 2, 2], seed=seed)
        S = spectral_decompose(m.H)
        ps = perturbed_spectral(m.H, m.V, 5e-3, S0=S)
        total = sum(P for _, P in ps.clusters_eps)
        assert np.max(np.abs(total - np.eye(10))) <= 1e-10
        assert set(ps.pairing) == set(range(len(ps.clusters_eps)))
        for b in ps.branches:
            Pk = S.clusters[b.parent].projector
            assert np.max(np.abs(Pk @ b.limit_projector - b.limit_projector)) <= 1e-8
        for k, c in enumerate(S.clusters):
            sub = sum(b.limit_projector for b in ps.branches_of(k))
            assert np.max(np.abs(sub - c.projector)) <= 1e-8


def test_kato_unitary_properties():
    for seed in range(10):
        m = random_gapped(10, [1, 2, 1, 3, 1, 2], seed=seed)
        ps = perturbed_spectral(m.H, m.V, 1e-2)
        ku = kato_unitary(ps)
        U = ku.U
        assert ku.unitarity_residual <= 1e-9
        assert np.max(np.abs(ku.U_minus_I - (U - np.eye(10)))) <= 1e-12
        for n, b in enumerate(ps.branches):
            assert np.max(np.abs(b.projector @ U - U @ b.limit_projector)) <= 1e-8
            assert np.max(np.abs(b.projector - U @ b.limit_projector @ U.conj().T)) <= 1e-8
            lhs = operator_norm((U - np.eye(10)) @ b.limit_projector)
            assert lhs <= ku.projector_distance[n] + ku.sqrt_deviation[n] + 1e-12
            r = ku.R_norm[n]
            assert ku.sqrt_deviation[n] <= (1 - math.sqrt(1 - r)) / math.sqrt(1 - r) + 1e-12


def test_U_tends_to_identity_monotonically():
    for seed in range(5):
        m = random_gapped(8, [2, 1, 2, 3], seed=seed)
        S = spectral_decompose(m.H)
        devs = [operator_norm(kato_unitary(perturbed_spectral(m.H, m.V, e, S0=S)).U - np.eye(8))
                for e in np.geomspace(1e-2, 1e-5, 8)]
        assert all(b <= a + 1e-6 for a, b in zip(devs, devs[1:]))


def test_crossing_detected():
    H = np.diag([0.0, 1.0]).astype(complex)
    V = np.array([[0, 1], [1, -2]], dtype=complex)
    with pytest.raises(PairingError, match="reduce eps"):
        perturbed_spectral(H, V, 0.5)


def test_exact_degeneracy_at_finite_eps_detected():
    H = np.diag([0.0, 1.0]).astype(complex)
    V = np.diag([0.0, -2.0]).astype(complex)
    with pytest.raises(PairingError):
        perturbed_spectral(H, V, 0.5)


def test_contraction_error():
    S = spectral_decompose(np.diag([0.0, 1.0]))
    P0, P1 = S.projectors
    bad = PerturbedSpectral(0.1, ((0.0, P1), (1.0, P0)), {0: 0, 1: 1},
                            (Branch(0.0, P1, P0, 0, 1), Branch(1.0, P0, P1, 1, 1)), S)
    with pytest.raises(ContractionError, match="reduce eps"):
        kato_unitary(bad)


def test_second_order_fallback():
    # first-order splitting vanishes on the degenerate block; second order separates it
    H = np.diag([0.0, 0.0, 1.0]).astype(complex)
    V = np.zeros((3, 3), dtype=complex)
    V[0, 2] = V[2, 0] = 1.0
    S = spectral_decompose(H)
    assert len(limit_projections(S, V)) == 2
    assert len(limit_projections(S, V, second_order=True)) == 3
    with pytest.raises(PairingError):
        perturbed_spectral(H, V, 1e-2)
    ps = perturbed_spectral(H, V, 1e-2, second_order=True)
    assert kato_unitary(ps).unitarity_residual <= 1e-9


def test_lipschitz_trivial_cases():
    m = random_gapped(6, [2, 2, 2], seed=1)
    S = spectral_decompose(m.H)
    grid = [1e-4, 1e-3, 1e-2]
    zero = lipschitz_constants(m.H, np.zeros((6, 6)), 0, grid)
    assert zero.c_k == 0.0
    Vc = sum((k + 1.0) * P for k, P in enumerate(S.projectors))
    for k in range(3):
        assert lipschitz_constants(m.H, Vc, k, grid).c_k <= 1e-10
    with pytest.raises(ValueError):
        lipschitz_constants(m.H, m.V, 0, [0.0, 1e-3])


def test_lipschitz_flatness_random():
    m = random_gapped(10, [2, 1, 3, 1, 3], seed=3)
    S = spectral_decompose(m.H)
    for k in range(len(S)):
        est = lipschitz_constants(m.H, m.V, k, np.geomspace(1e-4, 1e-2, 5), S0=S)
        assert est.flat and est.spread < 0.2


def test_eigenstate_bound_arithmetic():
    S0 = spectral_decompose(np.diag([0.0, 1.0, 2.0]))
    psi = np.array([0, 1.0, 0])
    assert wandering_bound_eigenstate(np.diag([1.0, 0, 0]), psi, S0, [1], [0.5]) == pytest.approx(2.0)
    assert wandering_bound_eigenstate(np.eye(3), psi, S0, [1], [0.0]) == 0.0
    with pytest.raises(SupportError):
        wandering_bound_eigenstate(np.eye(3), np.array([1.0, 1.0, 0]), S0, [1], [0.5])
    with pytest.raises(ValueError):
        wandering_bound_eigenstate(np.eye(3), psi, S0, [1], [0.5, 0.5])


def test_finite_rank_bound_arithmetic():
    S0 = spectral_decompose(np.diag([0.0, 1.0, 2.0]))
    S = np.diag([2.0, -1.0, 0.0])
    assert wandering_bound_finite_rank(S, S0, [0, 1], [0.25, 0.5]) == pytest.approx(4 * 2 * 0.75)
    assert wandering_bound_finite_rank(S, S0, [0, 1], [0.0, 0.0]) == 0.0
    with pytest.raises(SupportError):
        wandering_bound_finite_rank(np.ones((3, 3)), S0, [0, 1], [0.1, 0.1])


def test_ledger_rows():
    dd = degenerate_demo()
    ps = perturbed_spectral(dd.H, dd.V, 1e-3)
    rows = kato_ledger_rows(ps, kato_unitary(ps))
    assert len(rows) == 3 and all(r[0] == 1e-3 for r in rows)
