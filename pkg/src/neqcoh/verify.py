"""Named acceptance checks with measured residuals.

Every check returns a :class:`CheckResult`. ``hc_sign=-1`` flips the Lamb
shift in every generator the checks build (mutation mode).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import model as m
from .dynamics import evolve
from .flux import build_coupled_tls, internal_flux, internal_flux_commutator
from .generator import Superoperator, apply, apply_matrix_free, build_nonsecular, build_secular, vec
from .rates import dissipation_rates
from .runner import random_density_matrix
from .steady import (DegenerateSteadyStateWarning, build_bloch_lambda, det_formula_real,
                     secular_reference, steady_bloch, steady_nullspace, zero_coherence_condition)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: dict[str, float]
    detail: str = ""

    def line(self) -> str:
        vals = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {vals}" + (
            f" ({self.detail})" if self.detail else "")


@dataclass
class Context:
    seed: int = 0
    hc_sign: float = 1.0
    generators: list[Superoperator] = field(default_factory=list)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def nonsecular(self, system, rates) -> Superoperator:
        L = build_nonsecular(system, rates, hc_sign=self.hc_sign)
        self.generators.append(L)
        return L

    def secular(self, system, rates) -> Superoperator:
        L = build_secular(system, rates)
        self.generators.append(L)
        return L


# --- configurations -------------------------------------------------------

REFERENCE_SPECTRA = {"L": (0.01, 0.02), "R": (0.02, 0.01)}


def reference_system(kind: m.SystemKind | str) -> m.SystemSpec:
    kind = m.SystemKind(kind)
    if kind is m.SystemKind.LAMBDA:
        return m.build_system(kind, E_g1=0.0, E_g2=0.01, E_e=1.005)
    return m.build_system(kind, E_g=0.0, E_e1=0.995, E_e2=1.005)


def reference_baths(T: float, dT: float) -> list[m.BathSpec]:
    return [m.BathSpec("L", T, m.Flat(*REFERENCE_SPECTRA["L"])),
            m.BathSpec("R", T + dT, m.Flat(*REFERENCE_SPECTRA["R"]))]


def reference_rates(kind, T: float, dT: float):
    system = reference_system(kind)
    return system, dissipation_rates(reference_baths(T, dT), m.transitions_of(system))


def coherence(kind: m.SystemKind, rho: np.ndarray) -> complex:
    """The coherence between the two levels sharing the common partner."""
    if kind is m.SystemKind.LAMBDA:
        return rho[0, 1]
    return rho[1, 2]


def random_system(rng, kind=None) -> m.SystemSpec:
    kind = m.SystemKind(kind or rng.choice(["Lambda", "Vee", "Xi"]))
    if kind is m.SystemKind.LAMBDA:
        return m.build_system(kind, E_g1=0.0, E_g2=rng.uniform(-0.3, 0.3), E_e=rng.uniform(0.8, 2.0))
    if kind is m.SystemKind.VEE:
        return m.build_system(kind, E_g=0.0, E_e1=rng.uniform(0.7, 1.5), E_e2=rng.uniform(0.7, 1.5))
    e1 = rng.uniform(0.5, 1.5)
    return m.build_system(kind, E_g=0.0, E_e1=e1, E_e2=e1 + rng.uniform(0.5, 1.5))


def random_spectrum(rng):
    if rng.random() < 0.5:
        return m.Flat(rng.uniform(0.002, 0.03), rng.uniform(0.002, 0.03))
    steps = [m.Step(rng.uniform(0.002, 0.03), rng.uniform(0.002, 0.03),
                    rng.uniform(0.5, 1.5), rng.uniform(0.05, 0.5)) for _ in range(2)]
    return m.LogisticStep(*steps)


def random_interference(rng) -> m.InterferenceSpec:
    if rng.random() < 0.7:
        w = m.Constant(float(rng.choice([1.0, rng.uniform(0, 1)])))
    else:
        w = m.Dimensional(int(rng.integers(1, 4)), rng.uniform(0, 5))
    return m.InterferenceSpec(w, rng.uniform(-math.pi, math.pi))


def random_baths(rng, TL: float, TR: float) -> list[m.BathSpec]:
    return [m.BathSpec("L", TL, random_spectrum(rng), random_interference(rng)),
            m.BathSpec("R", TR, random_spectrum(rng), random_interference(rng))]


def gibbs(system: m.SystemSpec, T: float) -> np.ndarray:
    E = m.system_energies(system)
    w = np.exp(-(E - E.min()) / T)
    return w / w.sum()


def _offdiag_max(rho: np.ndarray) -> float:
    return float(np.abs(rho - np.diag(rho.diagonal())).max())


# --- checks ---------------------------------------------------------------


def check_equilibrium(ctx: Context, n: int = 100) -> CheckResult:
    rng = ctx.rng(1)
    worst_pop = worst_coh = 0.0
    start = time.perf_counter()
    for _ in range(n):
        system = random_system(rng)
        T = 10.0 * (1.0 - rng.random())  # (0, 10]
        rates = dissipation_rates(random_baths(rng, T, T), m.transitions_of(system), check=False)
        ss = steady_nullspace(ctx.nonsecular(system, rates))
        ref = gibbs(system, T)
        worst_pop = max(worst_pop, float(np.max(np.abs(ss.populations / ref - 1))))
        worst_coh = max(worst_coh, _offdiag_max(ss.rho))
    elapsed = time.perf_counter() - start
    ok = worst_pop <= 1e-9 and worst_coh <= 1e-10 and elapsed < 1.0
    return CheckResult("equilibrium", ok, {"pop_rel_err": worst_pop, "coherence": worst_coh,
                                           "seconds": elapsed})


def check_secular(ctx: Context, n: int = 60) -> CheckResult:
    rng = ctx.rng(2)
    worst_sec = worst_xi = 0.0
    for k in range(n):
        system = random_system(rng)
        TL, TR = rng.uniform(0.05, 5, size=2)
        rates = dissipation_rates(random_baths(rng, TL, TR), m.transitions_of(system), check=False)
        ref = secular_reference(rates, system.kind)
        ss = steady_nullspace(ctx.secular(system, rates))
        worst_sec = max(worst_sec, float(np.abs(ss.rho - np.diag(ref)).max()))
        xi = random_system(rng, "Xi")
        rates = dissipation_rates(random_baths(rng, TL, TR), m.transitions_of(xi), check=False)
        ss = steady_nullspace(ctx.nonsecular(xi, rates))
        ref = secular_reference(rates, xi.kind)
        worst_xi = max(worst_xi, float(np.abs(ss.rho - np.diag(ref)).max()))
    ok = worst_sec <= 1e-10 and worst_xi <= 1e-10
    return CheckResult("secular", ok, {"secular_err": worst_sec, "xi_nonsecular_err": worst_xi})


def reference_grid(ctx: Context, kind, n: int = 50):
    kind = m.SystemKind(kind)
    Ts = np.linspace(0.05, 2.0, n)
    dTs = np.linspace(0.0, 2.0, n)
    grid = np.zeros((n, n))
    system = reference_system(kind)
    tr = m.transitions_of(system)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSteadyStateWarning)
        for a, T in enumerate(Ts):
            for b, dT in enumerate(dTs):
                rates = dissipation_rates(reference_baths(T, dT), tr)
                L = build_nonsecular(system, rates, hc_sign=ctx.hc_sign)
                grid[a, b] = abs(coherence(kind, steady_nullspace(L).rho))
    return Ts, dTs, grid


def check_reference_grid(ctx: Context, n: int = 50) -> CheckResult:
    start = time.perf_counter()
    _, _, lam = reference_grid(ctx, "Lambda", n)
    _, _, vee = reference_grid(ctx, "Vee", n)
    elapsed = time.perf_counter() - start
    axis = float(lam[:, 0].max())
    min_step = float(np.diff(lam, axis=1).min())
    ok = axis <= 1e-10 and min_step >= -1e-13 and vee.max() < lam.max() and elapsed < 10.0
    return CheckResult("reference_grid", ok, {"dT0_max": axis, "min_dT_increment": min_step,
                                         "lambda_max": float(lam.max()), "vee_max": float(vee.max()),
                                         "seconds": elapsed})


def _random_lambda_rates(rng, degenerate: bool):
    if degenerate:
        # delta12 = 0, f = 1, both baths with the same gamma11/gamma22 proportion
        system = m.build_system("Lambda", E_g1=0.0, E_g2=0.0, E_e=rng.uniform(0.8, 1.5))
        g11, g22 = rng.uniform(0.002, 0.03, size=2)
        c = rng.uniform(0.3, 3.0)
        phase = rng.uniform(-math.pi, math.pi)
        inter = m.InterferenceSpec(m.Constant(1.0), phase)
        baths = [m.BathSpec("L", rng.uniform(0.1, 3), m.Flat(g11, g22), inter),
                 m.BathSpec("R", rng.uniform(0.1, 3), m.Flat(c * g11, c * g22), inter)]
    else:
        system = random_system(rng, "Lambda")
        baths = random_baths(rng, *rng.uniform(0.1, 3, size=2))
    return system, dissipation_rates(baths, m.transitions_of(system), check=False)


def check_determinant(ctx: Context, n: int = 500) -> CheckResult:
    rng = ctx.rng(4)
    ratios, mismatches, worst_real, n_singular = [], 0, 0.0, 0
    for k in range(n):
        system, rates = _random_lambda_rates(rng, degenerate=(k % 5 == 0))
        bloch = build_bloch_lambda(rates)
        A = bloch.matrix
        scale = float(np.prod(np.linalg.norm(A, axis=1)))
        det_num = complex(np.linalg.det(A))
        singular_num = abs(det_num) <= 1e-8 * scale
        singular_formula = abs(bloch.det_formula) <= 1e-8 * scale
        mismatches += singular_num != singular_formula
        n_singular += singular_num
        if not singular_num:
            ratios.append(bloch.det_formula / det_num)
        # the real closed form applies whenever the cross product is real
        a, b = rates.gp(1, 1, 1).real, rates.gp(2, 2, 2).real
        X = rates.gp(1, 2, 2) * rates.gp(2, 1, 1)
        d12 = rates.transitions.delta12
        if abs(X.imag) <= 1e-15 * max(abs(X), 1e-300):
            size = (a + b) ** 2 * (4 * a * b + 4 * abs(X) + d12 ** 2) + (2 * abs(X) + abs(d12) * (a + b)) ** 2
            worst_real = max(worst_real, abs(bloch.det_formula - det_formula_real(rates, d12)) / size)
    ratios = np.array(ratios)
    spread = float(np.max(np.abs(ratios / ratios[0] - 1)))
    # real-weight identity on dedicated draws with zero phase
    for _ in range(100):
        system = random_system(rng, "Lambda")
        baths = [m.BathSpec(lab, rng.uniform(0.1, 3), random_spectrum(rng),
                            m.InterferenceSpec(m.Constant(rng.uniform(0, 1)), float(rng.choice([0.0, math.pi]))))
                 for lab in ("L", "R")]
        rates = dissipation_rates(baths, m.transitions_of(system), check=False)
        a, b = rates.gp(1, 1, 1).real, rates.gp(2, 2, 2).real
        X = rates.gp(1, 2, 2) * rates.gp(2, 1, 1)
        d12 = rates.transitions.delta12
        size = (a + b) ** 2 * (4 * a * b + 4 * abs(X) + d12 ** 2) + (2 * abs(X) + abs(d12) * (a + b)) ** 2
        worst_real = max(worst_real, abs(build_bloch_lambda(rates).det_formula
                                         - det_formula_real(rates, d12)) / size)
    ok = mismatches == 0 and spread <= 1e-8 and worst_real <= 1e-12 and n_singular > 0
    return CheckResult("determinant", ok, {"zero_set_mismatches": mismatches, "singular_draws": n_singular,
                                           "ratio_spread": spread, "ratio": float(abs(ratios[0])),
                                           "real_form_err": worst_real})


def proportional_baths(rng, system: m.SystemSpec, TL: float, TR: float,
                       perturb: float = 1.0) -> list[m.BathSpec]:
    """Tabulated baths with gamma_ii^L(e)/gamma_ii^R(e) equal for i = 1, 2 at each gap e."""
    e1, e2 = m.transitions_of(system).frequencies
    right = {1: {}, 2: {}}
    left = {1: {}, 2: {}}
    for e in (e1, e2):
        ratio = rng.uniform(0.2, 5.0)
        for i in (1, 2):
            right[i][e] = rng.uniform(0.002, 0.03)
            left[i][e] = ratio * right[i][e]
    left[1][e1] *= perturb
    inter = m.InterferenceSpec(m.Constant(rng.uniform(0.2, 1.0)), rng.uniform(-math.pi, math.pi))
    return [m.BathSpec("L", TL, m.Tabulated.from_dict(left), inter),
            m.BathSpec("R", TR, m.Tabulated.from_dict(right), inter)]


def check_zero_coherence(ctx: Context, n: int = 50) -> CheckResult:
    rng = ctx.rng(5)
    worst = worst_lhs = 0.0
    for _ in range(n):
        system = random_system(rng, "Lambda")
        TL, TR = rng.uniform(0.1, 3, size=2)
        rates = dissipation_rates(proportional_baths(rng, system, TL, TR), m.transitions_of(system),
                                  check=False)
        worst = max(worst, abs(steady_nullspace(ctx.nonsecular(system, rates)).rho[0, 1]))
        worst_lhs = max(worst_lhs, abs(zero_coherence_condition(rates).lhs))
    # Reference Lambda system with proportional flat spectra, then one ratio off by 10%
    system = reference_system("Lambda")
    tr = m.transitions_of(system)
    base = {"L": (0.01, 0.02), "R": (0.02, 0.04)}
    held = []
    for factor in (1.0, 1.1):
        baths = [m.BathSpec("L", 1.0, m.Flat(base["L"][0] * factor, base["L"][1])),
                 m.BathSpec("R", 2.0, m.Flat(*base["R"]))]
        rates = dissipation_rates(baths, tr)
        held.append(abs(steady_nullspace(ctx.nonsecular(system, rates)).rho[0, 1]))
    worst = max(worst, held[0])
    ok = worst <= 1e-10 and held[1] > 1e-4
    return CheckResult("zero_coherence", ok, {"proportional_max": float(worst),
                                              "condition_lhs_max": float(worst_lhs),
                                              "perturbed": float(held[1])})


FLUX_SETUP = dict(omega1=1.05, omega2=0.95, g=0.05)


def flux_baths(TL: float, TR: float, gamma: float = 0.01):
    return (m.BathSpec("L", TL, m.Flat(gamma, gamma)), m.BathSpec("R", TR, m.Flat(gamma, gamma)))


def check_flux(ctx: Context) -> CheckResult:
    bL, bR = flux_baths(0.5, 1.5)
    model, L = build_coupled_tls(bath_L=bL, bath_R=bR, **FLUX_SETUP)
    if ctx.hc_sign != 1.0:
        from .flux import coupled_tls_rates
        L = build_nonsecular(model.hamiltonian(), coupled_tls_rates(model, bL, bR), hc_sign=ctx.hc_sign)
    ctx.generators.append(L)
    rho0 = random_density_matrix(4, ctx.rng(6))
    traj = evolve(L, rho0, 500.0, 0.04, samples=250)
    ident = max(abs(internal_flux(model, r) - internal_flux_commutator(model, r)) for r in traj.states)
    steady = internal_flux(model, steady_nullspace(L).rho)
    bL, bR = flux_baths(1.0, 1.0)
    model_eq, L_eq = build_coupled_tls(bath_L=bL, bath_R=bR, **FLUX_SETUP)
    ctx.generators.append(L_eq)
    eq = internal_flux(model_eq, steady_nullspace(L_eq).rho)
    ok = ident <= 1e-10 and abs(steady) > 1e-6 and abs(eq) <= 1e-10
    return CheckResult("flux_identity", ok, {"identity_err": float(ident), "steady_flux": steady,
                                             "equilibrium_flux": abs(eq)})


def check_methods(ctx: Context, n: int = 200) -> CheckResult:
    rng = ctx.rng(7)
    worst, used = 0.0, 0
    while used < n:
        system = random_system(rng, "Lambda")
        rates = dissipation_rates(random_baths(rng, *rng.uniform(0.1, 3, size=2)),
                                  m.transitions_of(system), check=False)
        L = ctx.nonsecular(system, rates)
        bloch = steady_bloch("Lambda", rates, L)
        if not bloch.unique:
            continue
        ns = steady_nullspace(L)
        worst = max(worst, float(np.abs(ns.rho - bloch.rho).max()))
        used += 1
    system, rates = reference_rates("Lambda", 1.0, 1.0)
    L = ctx.nonsecular(system, rates)
    target = steady_bloch("Lambda", rates).rho
    spread = 0.0
    for k in range(5):
        rho0 = random_density_matrix(3, ctx.rng(70 + k))
        final = evolve(L, rho0, 6000.0, 0.05, samples=1).final
        spread = max(spread, float(np.abs(final - target).max()))
    ok = worst <= 1e-9 and spread <= 1e-8
    return CheckResult("method_agreement", ok, {"bloch_vs_nullspace": worst, "evolution_spread": spread})


def _preservation(L: Superoperator, rng) -> tuple[float, float]:
    d = L.dim
    trace_err = float(np.abs(vec(np.eye(d)).conj() @ L.matrix).max())
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    out = apply(L, rho)
    return trace_err, float(np.abs(out - out.conj().T).max() / max(1.0, np.abs(out).max()))


def check_generator(ctx: Context, n: int = 50) -> CheckResult:
    rng = ctx.rng(8)
    worst_mf = 0.0
    for _ in range(n):
        system = random_system(rng)
        rates = dissipation_rates(random_baths(rng, *rng.uniform(0.05, 5, size=2)),
                                  m.transitions_of(system), check=False)
        L = ctx.nonsecular(system, rates)
        ctx.secular(system, rates)
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho = A / np.trace(A)
        dense = apply(L, rho)
        for form in ("commutator", "lindblad"):
            if ctx.hc_sign != 1.0 and form == "lindblad":
                continue
            worst_mf = max(worst_mf, float(np.abs(dense - apply_matrix_free(system, rates, rho, form)).max()))
    worst_tr = worst_herm = 0.0
    for L in ctx.generators:
        t, h = _preservation(L, rng)
        worst_tr, worst_herm = max(worst_tr, t), max(worst_herm, h)
    ok = worst_mf <= 1e-12 and worst_tr <= 1e-12 and worst_herm <= 1e-12
    return CheckResult("generator", ok, {"matrix_free_err": worst_mf, "trace_err": worst_tr,
                                         "hermiticity_err": worst_herm,
                                         "generators": len(ctx.generators)})


def step_halving_ratio(ctx: Context, dt: float = 0.08, t_end: float = 20.0) -> tuple[float, float, float]:
    system, rates = reference_rates("Lambda", 1.0, 1.0)
    L = ctx.nonsecular(system, rates)
    rho0 = np.diag([0.0, 0.0, 1.0]).astype(complex)
    coarse, fine, ref = (evolve(L, rho0, t_end, h, samples=1).final for h in (dt, dt / 2, dt / 4))
    e1 = float(np.linalg.norm(coarse - ref))
    e2 = float(np.linalg.norm(fine - ref))
    return e1 / e2, e1, e2


def check_integrator(ctx: Context) -> CheckResult:
    ratio, e1, e2 = step_halving_ratio(ctx)
    return CheckResult("integrator_order", 12 <= ratio <= 20, {"ratio": ratio, "err_dt": e1, "err_dt2": e2})


def check_degeneracy(ctx: Context) -> CheckResult:
    system = m.build_system("Lambda", E_g1=0.0, E_g2=0.0, E_e=1.0)
    tr = m.transitions_of(system)
    flagged = total = 0
    for TL in (0.05, 0.3, 1.0, 4.0):
        for TR in (0.05, 0.3, 1.0, 4.0):
            baths = [m.BathSpec("L", TL, m.Flat(0.01, 0.01)), m.BathSpec("R", TR, m.Flat(0.01, 0.01))]
            rates = dissipation_rates(baths, tr)
            L = ctx.nonsecular(system, rates)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateSteadyStateWarning)
                ns = steady_nullspace(L)
            bloch = steady_bloch("Lambda", rates, L) if ctx.hc_sign == 1.0 else None
            total += 1
            flagged += (not ns.unique) and (bloch is None or not bloch.unique)
    return CheckResult("degeneracy", flagged == total, {"flagged": flagged, "pairs": total})


CHECKS: dict[str, Callable[[Context], CheckResult]] = {
    "equilibrium": check_equilibrium,
    "secular": check_secular,
    "reference_grid": check_reference_grid,
    "determinant": check_determinant,
    "zero_coherence": check_zero_coherence,
    "flux_identity": check_flux,
    "method_agreement": check_methods,
    "generator": check_generator,
    "integrator_order": check_integrator,
    "degeneracy": check_degeneracy,
}

# generator correctness inspects every generator built before it, so it runs last
RUN_ORDER = [k for k in CHECKS if k != "generator"] + ["generator"]

MUTATIONS = {"hc-sign": -1.0}


def run_checks(names=None, seed: int = 0, mutation: str | None = None) -> list[CheckResult]:
    ctx = Context(seed=seed, hc_sign=MUTATIONS[mutation] if mutation else 1.0)
    selected = RUN_ORDER if not names else [n for n in RUN_ORDER if n in names]
    return [CHECKS[n](ctx) for n in selected]
