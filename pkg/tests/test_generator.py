import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neqcoh import model as m
from neqcoh.generator import (GeneratorKind, apply, apply_matrix_free, build_hc, build_nonsecular,
                              build_secular, unvec, vec)
from neqcoh.rates import dissipation_rates

from conftest import lambda_reference


def random_state(rng, d=3):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def random_rates(seed):
    rng = np.random.default_rng(seed)
    kind = ["Lambda", "Vee", "Xi"][seed % 3]
    if kind == "Lambda":
        system = m.build_system(kind, E_g1=0.0, E_g2=rng.uniform(-0.2, 0.2), E_e=1.0)
    elif kind == "Vee":
        system = m.build_system(kind, E_g=0.0, E_e1=rng.uniform(0.8, 1.2), E_e2=rng.uniform(0.8, 1.2))
    else:
        system = m.build_system(kind, E_g=0.0, E_e1=1.0, E_e2=rng.uniform(1.5, 3.0))
    baths = [m.BathSpec(lab, rng.uniform(0.05, 4.0), m.Flat(*rng.uniform(0.001, 0.05, size=2)),
                        m.InterferenceSpec(m.Constant(rng.uniform()), rng.uniform(-3, 3)))
             for lab in ("L", "R")]
    return system, dissipation_rates(baths, m.transitions_of(system), check=False), rng


def test_vectorization_convention():
    rng = np.random.default_rng(0)
    A, X, B = (rng.normal(size=(3, 3)) for _ in range(3))
    assert np.allclose(vec(A @ X @ B), np.kron(B.T, A) @ vec(X))
    assert np.array_equal(unvec(vec(X), 3), X)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_matrix_and_matrix_free_agree(seed):
    system, rates, rng = random_rates(seed)
    L = build_nonsecular(system, rates)
    rho = random_state(rng)
    dense = apply(L, rho)
    assert np.abs(dense - apply_matrix_free(system, rates, rho, "commutator")).max() <= 1e-12
    assert np.abs(dense - apply_matrix_free(system, rates, rho, "lindblad")).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_trace_and_hermiticity_preserved(seed):
    system, rates, rng = random_rates(seed)
    for L in (build_nonsecular(system, rates), build_secular(system, rates)):
        assert np.abs(vec(np.eye(3)) @ L.matrix).max() <= 1e-12
        out = apply(L, random_state(rng))
        assert np.abs(out - out.conj().T).max() <= 1e-12


def test_lamb_shift_hermitian_and_vanishes_for_equal_gaps():
    _, rates = lambda_reference(0.5, 1.0, phase=0.4)
    hc = build_hc(rates).hc
    assert np.allclose(hc, hc.conj().T)
    assert np.abs(hc).max() > 0
    system = m.build_system("Lambda", E_g1=0.0, E_g2=0.0, E_e=1.0)
    baths = [m.BathSpec("L", 0.5, m.Flat(0.01, 0.02)), m.BathSpec("R", 1.5, m.Flat(0.02, 0.01))]
    assert np.abs(build_hc(dissipation_rates(baths, m.transitions_of(system))).hc).max() == 0


def test_secular_generator_drops_cross_terms():
    system, rates = lambda_reference()
    L = build_secular(system, rates)
    assert L.kind is GeneratorKind.SECULAR
    rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
    out = apply(L, rho)
    # populations alone cannot feed the ground-state coherence without interference
    assert out[0, 1] == 0
    assert apply(build_nonsecular(system, rates), rho)[0, 1] != 0


def test_zero_rates_leave_pure_precession():
    system = m.build_system("Lambda", E_g1=0.0, E_g2=0.1, E_e=1.0)
    rates = dissipation_rates([m.BathSpec("L", 0.0, m.Flat(1e-3, 1e-3))], m.transitions_of(system)).scaled(0.0)
    L = build_nonsecular(system, rates)
    rho = np.full((3, 3), 1 / 3, dtype=complex)
    H = m.system_hamiltonian(system)
    assert np.allclose(apply(L, rho), 1j * (rho @ H - H @ rho))


def test_apply_rejects_wrong_shape():
    system, rates = lambda_reference()
    L = build_nonsecular(system, rates)
    with pytest.raises(ValueError):
        apply(L, np.eye(4))
    with pytest.raises(ValueError):
        apply_matrix_free(system, rates, np.eye(3), form="other")


def test_hc_sign_only_matters_through_lamb_shift():
    system, rates = lambda_reference()
    a = build_nonsecular(system, rates).matrix
    b = build_nonsecular(system, rates, hc_sign=-1.0).matrix
    assert not np.allclose(a, b)
    assert np.allclose(0.5 * (a + b), build_nonsecular(system, rates, hc_sign=0.0).matrix)
