import numpy as np
import pytest

from neqcoh import model as m
from neqcoh.rates import dissipation_rates

ACCEPTANCE_LINES: list[str] = []


def lambda_reference(T=1.0, dT=1.0, phase=0.0, f=1.0):
    system = m.build_system("Lambda", E_g1=0.0, E_g2=0.01, E_e=1.005)
    inter = m.InterferenceSpec(m.Constant(f), phase)
    baths = [m.BathSpec("L", T, m.Flat(0.01, 0.02), inter),
             m.BathSpec("R", T + dT, m.Flat(0.02, 0.01), inter)]
    return system, dissipation_rates(baths, m.transitions_of(system))


def vee_reference(T=1.0, dT=1.0):
    system = m.build_system("Vee", E_g=0.0, E_e1=0.995, E_e2=1.005)
    baths = [m.BathSpec("L", T, m.Flat(0.01, 0.02)), m.BathSpec("R", T + dT, m.Flat(0.02, 0.01))]
    return system, dissipation_rates(baths, m.transitions_of(system))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
