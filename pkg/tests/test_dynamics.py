import math

import numpy as np
import pytest

from neqcoh import model as m
from neqcoh.dynamics import (IntegrationError, PositivityWarning, convergence_time, default_dt,
                             evolve, generator_norm, rk4_propagator)
from neqcoh.generator import GeneratorKind, Superoperator, build_nonsecular
from neqcoh.rates import dissipation_rates
from neqcoh.steady import steady_nullspace

from conftest import lambda_reference


def equilibrium_lambda(T=0.6):
    system = m.build_system("Lambda", E_g1=0.0, E_g2=0.01, E_e=1.005)
    baths = [m.BathSpec("L", T, m.Flat(0.01, 0.02)), m.BathSpec("R", T, m.Flat(0.02, 0.01))]
    rates = dissipation_rates(baths, m.transitions_of(system))
    return system, rates, build_nonsecular(system, rates)


def test_null_generator_keeps_state():
    L = Superoperator(3, np.zeros((9, 9), dtype=complex), GeneratorKind.NON_SECULAR)
    rho0 = np.diag([0.2, 0.3, 0.5]).astype(complex)
    traj = evolve(L, rho0, 10.0, 0.1)
    assert all(np.array_equal(r, rho0) for r in traj.states)


def test_zero_time_gives_single_sample():
    _, _, L = equilibrium_lambda()
    rho0 = np.eye(3, dtype=complex) / 3
    traj = evolve(L, rho0, 0.0, 0.05)
    assert traj.times.tolist() == [0.0]
    assert np.array_equal(traj.states[0], rho0)


def test_stability_guard():
    _, _, L = equilibrium_lambda()
    dt = 0.2 / generator_norm(L)
    with pytest.raises(IntegrationError, match="dt="):
        evolve(L, np.eye(3) / 3, 1.0, dt)
    with pytest.raises(ValueError):
        evolve(L, np.eye(3) / 3, 1.0, 0.0)
    with pytest.raises(ValueError):
        evolve(L, np.eye(2) / 2, 1.0, 0.01)


def test_nan_aborts():
    M = np.zeros((9, 9), dtype=complex)
    M[0, 0] = np.nan
    L = Superoperator(3, M, GeneratorKind.NON_SECULAR)
    with pytest.raises(IntegrationError, match="non-finite"):
        evolve(L, np.eye(3) / 3, 1.0, 0.01)


def test_propagator_is_fourth_order_taylor_polynomial():
    _, _, L = equilibrium_lambda()
    h = 0.05
    hL = h * L.matrix
    taylor = sum(np.linalg.matrix_power(hL, k) / math.factorial(k) for k in range(5))
    assert np.abs(rk4_propagator(L, h) - taylor).max() <= 1e-15


def test_relaxes_to_gibbs_state():
    system, rates, L = equilibrium_lambda(0.6)
    E = m.system_energies(system)
    gibbs = np.diag(np.exp(-E / 0.6) / np.exp(-E / 0.6).sum())
    traj = evolve(L, np.eye(3, dtype=complex) / 3, 6000.0, 0.05, samples=50)
    assert np.abs(traj.final - gibbs).max() <= 1e-8
    assert np.linalg.norm(traj.final - gibbs) <= 1e-8


def test_reference_trajectory_reaches_steady_state():
    system, rates = lambda_reference(1.0, 1.0)
    L = build_nonsecular(system, rates)
    target = steady_nullspace(L).rho
    traj = evolve(L, np.diag([0, 0, 1.0]).astype(complex), 6000.0, 0.05, samples=100)
    assert np.abs(traj.final - target).max() <= 1e-7
    assert np.all(np.diff(traj.times) > 0)
    assert not traj.positivity_violated


def test_trace_drift_at_default_step_over_long_time():
    system, rates = lambda_reference(1.0, 1.0)
    L = build_nonsecular(system, rates)
    dt = default_dt(rates.transitions.frequencies)
    assert dt == pytest.approx(0.01 / 1.005)
    traj = evolve(L, np.eye(3, dtype=complex) / 3, 1e5, dt, samples=100)
    assert np.abs(traj.traces - 1).max() <= 1e-8
    herm = max(np.abs(r - r.conj().T).max() for r in traj.states)
    assert herm <= 1e-10


def test_linearity():
    system, rates = lambda_reference(0.5, 0.8, phase=0.4)
    L = build_nonsecular(system, rates)
    rng = np.random.default_rng(3)
    states = []
    for _ in range(2):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        r = A @ A.conj().T
        states.append(r / np.trace(r))
    a = 0.3
    mix = evolve(L, a * states[0] + (1 - a) * states[1], 50.0, 0.05).final
    sep = a * evolve(L, states[0], 50.0, 0.05).final + (1 - a) * evolve(L, states[1], 50.0, 0.05).final
    assert np.abs(mix - sep).max() <= 1e-13


def test_sampling_does_not_change_result():
    system, rates = lambda_reference()
    L = build_nonsecular(system, rates)
    rho0 = np.diag([0, 0, 1.0]).astype(complex)
    a = evolve(L, rho0, 30.0, 0.05, samples=None)
    b = evolve(L, rho0, 30.0, 0.05, samples=7)
    assert len(a.times) == 601
    assert np.abs(a.final - b.final).max() <= 1e-13
    assert b.times[-1] == pytest.approx(30.0)


def test_positivity_monitor_flags_unphysical_generator():
    # population leaks out of level 0 in proportion to level 1: trace kept, positivity lost
    M = np.zeros((4, 4), dtype=complex)
    M[0, 3] = -1.0
    M[3, 3] = 1.0
    L = Superoperator(2, M, GeneratorKind.NON_SECULAR)
    with pytest.warns(PositivityWarning):
        traj = evolve(L, np.eye(2, dtype=complex) / 2, 2.0, 0.01, samples=20)
    assert traj.positivity_violated
    assert traj.min_eigenvalues.min() < -1e-8


def test_convergence_time():
    _, rates, L = equilibrium_lambda(0.6)
    rho0 = np.eye(3, dtype=complex) / 3
    traj = evolve(L, rho0, 10000.0, 0.05, samples=2000)
    assert convergence_time(traj, rho0, 1.0) == 0.0
    target = steady_nullspace(L).rho
    assert convergence_time(traj, target, 0.0) is None
    t_conv = convergence_time(traj, target, 1e-6)
    # the slowest relaxation rate sets the time scale
    slowest = -sorted(np.linalg.eigvals(L.matrix).real)[-2]
    d0 = np.linalg.norm(rho0 - target)
    expected = math.log(d0 / 1e-6) / slowest
    assert 0.3 * expected <= t_conv <= 3 * expected
