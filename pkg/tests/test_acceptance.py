"""Acceptance criteria, one test each, run at their stated tolerances."""

import pytest

from neqcoh.verify import CHECKS, Context, run_checks

from conftest import ACCEPTANCE_LINES


@pytest.fixture(scope="module")
def ctx():
    # shared so the generator check sees every generator built before it
    return Context(seed=0)


def _run(ctx, name):
    result = CHECKS[name](ctx)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line


def test_equilibrium_limit(ctx):
    _run(ctx, "equilibrium")


def test_secular_consistency(ctx):
    _run(ctx, "secular")


def test_reference_grid(ctx):
    _run(ctx, "reference_grid")


def test_determinant_formula(ctx):
    _run(ctx, "determinant")


def test_zero_coherence_conditions(ctx):
    _run(ctx, "zero_coherence")


def test_flux_coherence_identity(ctx):
    _run(ctx, "flux_identity")


def test_method_agreement(ctx):
    _run(ctx, "method_agreement")


def test_integrator_order(ctx):
    _run(ctx, "integrator_order")


def test_degeneracy_detection(ctx):
    _run(ctx, "degeneracy")


def test_generator_correctness(ctx):
    _run(ctx, "generator")


def test_lamb_shift_mutation_is_caught():
    results = {r.name: r for r in run_checks(["method_agreement", "equilibrium"], mutation="hc-sign")}
    assert not results["method_agreement"].passed
