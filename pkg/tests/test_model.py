import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from neqcoh import model as m


def j0_series(x, terms=60):
    return sum((-1) ** k * (x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def test_level_orders_and_wiring():
    lam = m.build_system("Lambda", E_g1=0.0, E_g2=0.01, E_e=1.005)
    tr = m.transitions_of(lam)
    assert lam.levels == ("g1", "g2", "e")
    assert [(t.lower, t.upper) for t in tr] == [("g1", "e"), ("g2", "e")]
    assert tr.frequencies == pytest.approx([1.005, 0.995])
    assert tr.delta12 == pytest.approx(0.01)
    xi = m.build_system("Xi", E_g=0.0, E_e1=1.0, E_e2=2.5)
    assert [(t.lower, t.upper) for t in m.transitions_of(xi)] == [("g", "e1"), ("e1", "e2")]
    vee = m.build_system("Vee", E_g=0.0, E_e1=0.995, E_e2=1.005)
    assert m.transitions_of(vee).delta12 == pytest.approx(-0.01)


def test_lowering_operator_is_elementary():
    tr = m.transitions_of(m.build_system("Lambda", E_g1=0.0, E_g2=0.2, E_e=1.0))
    expected = np.zeros((3, 3))
    expected[1, 2] = 1.0
    assert np.array_equal(tr[1].lowering, expected)
    assert np.array_equal(tr[1].raising, expected.T)


@pytest.mark.parametrize("kind, params", [
    ("Lambda", dict(E_g1=0.0, E_g2=1.2, E_e=1.0)),
    ("Vee", dict(E_g=1.0, E_e1=0.5, E_e2=2.0)),
    ("Xi", dict(E_g=0.0, E_e1=2.0, E_e2=1.0)),
    ("Lambda", dict(E_g1=0.0, E_e=1.0)),
    ("Lambda", dict(E_g1=0.0, E_g2=0.0, E_e=1.0, E_x=3.0)),
])
def test_invalid_systems_rejected(kind, params):
    with pytest.raises(m.SpecError):
        m.build_system(kind, **params)


def test_coupled_tls_energies_match_exact_diagonalization():
    w1, w2, g = 1.05, 0.95, 0.05
    sz = np.diag([1.0, -1.0])
    sm = np.array([[0.0, 0.0], [1.0, 0.0]])  # basis (e, g): sigma^- maps e -> g
    I = np.eye(2)
    H = 0.5 * w1 * np.kron(sz, I) + 0.5 * w2 * np.kron(I, sz)
    hop = np.kron(sm.T, sm)
    H = H + g * (hop + hop.T)
    assert np.linalg.eigvalsh(H) == pytest.approx(sorted(m.coupled_tls_energies(w1, w2, g)), abs=1e-14)


def test_coupled_tls_too_strong_coupling_rejected():
    with pytest.raises(m.SpecError):
        m.build_system("CoupledTLS", omega1=1.0, omega2=1.0, g=1.5)


def test_weight_factor_models():
    assert m.weight_factor(m.Constant(0.3), 1.0) == 0.3
    assert m.weight_factor(m.Dimensional(1, 0.0), 2.0) == 1.0
    assert m.weight_factor(m.Dimensional(1, math.pi / 2), 1.0) == pytest.approx(0.0, abs=1e-30)
    assert m.weight_factor(m.Dimensional(3, 1.0), math.pi) == pytest.approx(0.0, abs=1e-30)
    # first zero of the Bessel function J0, cross-checked by an independent power series
    x_zero = 2.404825557695773
    assert abs(j0_series(x_zero)) < 1e-13
    assert m.weight_factor(m.Dimensional(2, 1.0), x_zero) < 1e-25
    assert m.weight_factor(m.Dimensional(2, 1.0), 1.3) == pytest.approx(j0_series(1.3) ** 2, rel=1e-12)


@pytest.mark.parametrize("bad", [lambda: m.Constant(1.5), lambda: m.Dimensional(4, 1.0),
                                 lambda: m.Dimensional(2, -1.0), lambda: m.Flat(0.0, 0.1),
                                 lambda: m.BathSpec("X", 1.0, m.Flat(0.1, 0.1)),
                                 lambda: m.BathSpec("L", -1.0, m.Flat(0.1, 0.1)),
                                 lambda: m.BathSpec("L", math.inf, m.Flat(0.1, 0.1))])
def test_invalid_parameters_rejected(bad):
    with pytest.raises(m.SpecError):
        bad()


@settings(max_examples=100, deadline=None)
@given(g11=st.floats(1e-4, 1.0), g22=st.floats(1e-4, 1.0), f=st.floats(0.0, 1.0),
       phase=st.floats(-math.pi, math.pi), omega=st.floats(0.01, 10.0))
def test_cross_spectrum_bound_and_conjugation(g11, g22, f, phase, omega):
    bath = m.BathSpec("L", 1.0, m.Flat(g11, g22), m.InterferenceSpec(m.Constant(f), phase))
    g12 = m.gamma(bath, 1, 2, omega)
    assert abs(g12) ** 2 == pytest.approx(f * g11 * g22, rel=1e-12, abs=1e-300)
    assert m.gamma(bath, 2, 1, omega) == pytest.approx(g12.conjugate())
    G = m.gamma_matrix(bath, omega)
    assert np.allclose(G, G.conj().T)
    assert np.linalg.eigvalsh(G).min() >= -1e-15


def test_spectrum_rejects_non_positive_frequency():
    bath = m.BathSpec("L", 1.0, m.Flat(0.1, 0.1))
    with pytest.raises(m.SpecError):
        m.gamma(bath, 1, 1, 0.0)


def test_tabulated_lookup():
    tab = m.Tabulated.from_dict({1: {1.005: 0.01}, 2: {0.995: 0.02}})
    assert tab.diagonal(1, 1.005 + 1e-12) == 0.01
    assert tab.diagonal(2, 0.995) == 0.02
    with pytest.raises(m.SpectrumLookupError):
        tab.diagonal(1, 0.995)


def test_logistic_step_limits():
    step = m.Step(0.01, 0.03, center=1.0, width=0.01)
    assert step(1.0) == pytest.approx(0.02)
    assert step(0.5) == pytest.approx(0.01)
    assert step(1.5) == pytest.approx(0.03)


def test_weak_coupling_warning():
    system = m.build_system("Lambda", E_g1=0.0, E_g2=0.01, E_e=1.0)
    bath = m.BathSpec("L", 1.0, m.Flat(0.5, 0.5))
    with pytest.warns(UserWarning):
        m.check_born_markov([bath], m.transitions_of(system).frequencies)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        m.check_born_markov([m.BathSpec("L", 1.0, m.Flat(0.01, 0.01))],
                            m.transitions_of(system).frequencies)
