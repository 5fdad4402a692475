import math

import numpy as np
import pytest

from neqcoh import model as m
from neqcoh.dynamics import evolve
from neqcoh.flux import (SIGMA1_MINUS, SIGMA2_MINUS, CoupledTLSModel, ResonanceCollisionError,
                         _check_collisions, bath_flux, build_coupled_tls, coupled_tls_rates,
                         heat_currents, internal_flux, internal_flux_commutator, local_couplings)
from neqcoh.steady import steady_nullspace


def baths(TL, TR, gamma=0.01):
    return m.BathSpec("L", TL, m.Flat(gamma, gamma)), m.BathSpec("R", TR, m.Flat(gamma, gamma))


def test_eigensystem():
    model = CoupledTLSModel(1.05, 0.95, 0.05)
    V = model.eigenvectors
    assert np.abs(V.conj().T @ V - np.eye(4)).max() <= 1e-12
    assert np.abs(V.conj().T @ model.bare_hamiltonian() @ V - np.diag(model.energies)).max() <= 1e-14
    assert model.energies[2] - model.energies[1] == pytest.approx(0.1414213562373095, rel=1e-12)
    assert model.energies[0] == pytest.approx(-model.mean)
    assert model.energies[3] == pytest.approx(model.mean)
    assert math.tan(model.theta) == pytest.approx(2 * model.g / model.detuning)


def test_uncoupled_limit():
    model = CoupledTLSModel(1.2, 0.8, 0.0)
    assert model.theta == 0.0
    # E2 -> |e1 g2>, E1 -> |g1 e2> (up to sign)
    assert np.abs(np.abs(model.eigenvectors) - np.eye(4)[:, [0, 2, 1, 3]]).max() == 0
    c = local_couplings(model, coupled_tls_rates(model, *baths(0.5, 1.0)).transitions)
    # each eigenbasis transition is driven by exactly one qubit
    assert np.all(c[0] * c[1] == 0)
    _, L = build_coupled_tls(1.2, 0.8, 0.0, *baths(0.5, 1.0))
    assert internal_flux(model, steady_nullspace(L).rho) == 0.0


def test_resonant_mixing():
    model = CoupledTLSModel(1.0, 1.0, 0.05)
    assert model.theta == pytest.approx(math.pi / 2)
    s = 1 / math.sqrt(2)
    e1 = np.array([0, s, -s, 0])
    e2 = np.array([0, s, s, 0])
    assert abs(abs(model.eigenvectors[:, 1] @ e1) - 1) <= 1e-14
    assert abs(abs(model.eigenvectors[:, 2] @ e2) - 1) <= 1e-14


def test_invalid_model():
    with pytest.raises(m.SpecError):
        CoupledTLSModel(-1.0, 1.0, 0.1)
    with pytest.raises(m.SpecError):
        CoupledTLSModel(1.0, 1.0, 2.0)


def test_transition_structure():
    model = CoupledTLSModel(1.05, 0.95, 0.05)
    rates = coupled_tls_rates(model, *baths(0.5, 1.5))
    tr = rates.transitions
    assert [(t.lower, t.upper) for t in tr] == [("G", "E1"), ("G", "E2"), ("E1", "D"), ("E2", "D")]
    # E2 - G and D - E1 coincide, as do E1 - G and D - E2
    assert tr[1].epsilon == tr[2].epsilon
    assert tr[0].epsilon == tr[3].epsilon
    # sigma^- decomposes exactly over the eigenbasis transitions
    c = local_couplings(model, tr)
    for alpha, sm in enumerate((SIGMA1_MINUS, SIGMA2_MINUS)):
        rebuilt = sum(c[alpha, k] * t.lowering for k, t in enumerate(tr))
        assert np.abs(model.to_bare(rebuilt) - sm).max() <= 1e-14


def test_collision_reported():
    steep = lambda w: 0.01 if w < 1.0 + 2e-10 else 0.02
    with pytest.raises(ResonanceCollisionError):
        _check_collisions(np.array([1.0, 1.0 + 5e-10]), [steep])
    _check_collisions(np.array([1.0, 1.0 + 5e-10]), [lambda w: 0.01])


def test_flux_identity_along_trajectory():
    model, L = build_coupled_tls(1.05, 0.95, 0.05, *baths(0.5, 1.5))
    rng = np.random.default_rng(7)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho0 = A @ A.conj().T
    rho0 /= np.trace(rho0)
    traj = evolve(L, rho0, 300.0, 0.04, samples=150)
    for r in traj.states:
        assert abs(internal_flux(model, r) - internal_flux_commutator(model, r)) <= 1e-10


def test_steady_fluxes():
    bL, bR = baths(0.5, 1.5)
    model, L = build_coupled_tls(1.05, 0.95, 0.05, bL, bR)
    rho = steady_nullspace(L).rho
    j12 = internal_flux(model, rho)
    # heat runs from the hot qubit 2 into qubit 1
    assert j12 > 1e-4
    assert internal_flux_commutator(model, rho) == pytest.approx(j12, abs=1e-10)
    assert bath_flux(model, L, rho) + j12 == pytest.approx(0.0, abs=1e-10)
    qL, qR = heat_currents(model, bL, bR, rho)
    assert qL < 0 < qR
    assert qL + qR == pytest.approx(0.0, abs=1e-8)


def test_flux_vanishes_only_at_equal_temperatures():
    for TL in (0.3, 0.8, 1.5):
        for TR in (0.3, 0.8, 1.5):
            model, L = build_coupled_tls(1.05, 0.95, 0.05, *baths(TL, TR))
            j = internal_flux(model, steady_nullspace(L).rho)
            if TL == TR:
                assert abs(j) <= 1e-10
            else:
                assert abs(j) > 1e-6
                assert math.copysign(1, j) == math.copysign(1, TR - TL)


def test_initial_bath_flux_is_absorption():
    model, L = build_coupled_tls(1.05, 0.95, 0.05, *baths(2.0, 2.0))
    ground = np.zeros((4, 4), dtype=complex)
    ground[0, 0] = 1.0
    assert internal_flux(model, ground) == 0.0
    assert bath_flux(model, L, ground) > 0
