"""Two coupled qubits, each attached to its own bath, and their energy fluxes.

Bare product basis order: |g1 g2>, |e1 g2>, |g1 e2>, |e1 e2>.
Eigenbasis order: G, E1, E2, D.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .generator import Superoperator, apply, build_nonsecular
from .model import (FREQ_TOL, BathSpec, SpecError, Transition, TransitionSet,
                    coupled_tls_energies, make_transitions)
from .rates import DissipationRates, rates_from_spectra

BARE_LEVELS = ("g1g2", "e1g2", "g1e2", "e1e2")
EIGEN_LEVELS = ("G", "E1", "E2", "D")
EIGEN_PAIRS = (("G", "E1"), ("G", "E2"), ("E1", "D"), ("E2", "D"))


class ResonanceCollisionError(SpecError):
    pass


def _ket(k: int) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[k] = 1.0
    return v


SIGMA1_MINUS = np.outer(_ket(0), _ket(1)) + np.outer(_ket(2), _ket(3))
SIGMA2_MINUS = np.outer(_ket(0), _ket(2)) + np.outer(_ket(1), _ket(3))
SIGMA1_Z = np.diag([-1.0, 1.0, -1.0, 1.0]).astype(complex)
SIGMA2_Z = np.diag([-1.0, -1.0, 1.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class CoupledTLSModel:
    omega1: float
    omega2: float
    g: float

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise SpecError("qubit frequencies must be > 0")
        if self.g < 0:
            raise SpecError("coupling g must be >= 0")
        if math.hypot(self.detuning, 2 * self.g) >= self.omega1 + self.omega2:
            raise SpecError("coupling too strong: single-excitation level falls below ground")

    @property
    def mean(self) -> float:
        return 0.5 * (self.omega1 + self.omega2)

    @property
    def detuning(self) -> float:
        return self.omega1 - self.omega2

    @property
    def theta(self) -> float:
        """Mixing angle with cot(theta) = detuning / 2g, in [0, pi]."""
        return math.atan2(2 * self.g, self.detuning)

    @property
    def splitting(self) -> float:
        return math.hypot(self.detuning, 2 * self.g)

    @cached_property
    def energies(self) -> np.ndarray:
        return np.array(coupled_tls_energies(self.omega1, self.omega2, self.g))

    @cached_property
    def eigenvectors(self) -> np.ndarray:
        """Columns are |G>, |E1>, |E2>, |D> in the bare basis.

        The overall sign of |E1> is chosen so that the internal flux equals
        +4g Im<E1|rho|E2>.
        """
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        V = np.zeros((4, 4), dtype=complex)
        V[0, 0] = 1.0
        V[1, 1], V[2, 1] = -s, c
        V[1, 2], V[2, 2] = c, s
        V[3, 3] = 1.0
        return V

    def bare_hamiltonian(self) -> np.ndarray:
        H = 0.5 * self.omega1 * SIGMA1_Z + 0.5 * self.omega2 * SIGMA2_Z
        hop = SIGMA1_MINUS.conj().T @ SIGMA2_MINUS
        return H + self.g * (hop + hop.conj().T)

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    def to_bare(self, rho: np.ndarray) -> np.ndarray:
        V = self.eigenvectors
        return V @ rho @ V.conj().T

    def to_eigen(self, op: np.ndarray) -> np.ndarray:
        V = self.eigenvectors
        return V.conj().T @ op @ V

    @property
    def frequencies(self) -> np.ndarray:
        e = self.energies
        return np.array([e[1] - e[0], e[2] - e[0], e[3] - e[1], e[3] - e[2]])


def _grouped(transitions: TransitionSet) -> TransitionSet:
    """Snap frequencies within FREQ_TOL of each other onto a shared value."""
    freqs = transitions.frequencies
    snapped = freqs.copy()
    for k in range(len(freqs)):
        close = np.abs(freqs - freqs[k]) <= FREQ_TOL * max(1.0, abs(freqs[k]))
        snapped[k] = freqs[close].mean()
    return TransitionSet(transitions.levels, tuple(
        Transition(t.index, t.lower, t.upper, float(w), t.lowering)
        for t, w in zip(transitions, snapped)))


def local_couplings(model: CoupledTLSModel, transitions: TransitionSet) -> np.ndarray:
    """``c[alpha, k] = <lower_k| sigma_alpha^- |upper_k>`` in the eigenbasis."""
    out = np.zeros((2, len(transitions)), dtype=complex)
    for alpha, sm in enumerate((SIGMA1_MINUS, SIGMA2_MINUS)):
        s_eig = model.to_eigen(sm)
        for k, t in enumerate(transitions):
            lo, up = EIGEN_LEVELS.index(t.lower), EIGEN_LEVELS.index(t.upper)
            out[alpha, k] = s_eig[lo, up]
    return out


def _bath_density(bath: BathSpec, qubit: int):
    # bath L feeds qubit 1 through its gamma_11 entry, bath R qubit 2 through gamma_22
    return lambda w: float(bath.spectral_model.diagonal(qubit, w))


def _check_collisions(raw: np.ndarray, densities) -> None:
    for a in range(len(raw)):
        for b in range(a + 1, len(raw)):
            if raw[a] == raw[b] or abs(raw[a] - raw[b]) > FREQ_TOL * max(1.0, abs(raw[a])):
                continue
            for dens in densities:
                va, vb = dens(raw[a]), dens(raw[b])
                if abs(va - vb) > FREQ_TOL * max(1.0, abs(va)):
                    raise ResonanceCollisionError(
                        f"transitions {a + 1} and {b + 1} share frequency {raw[a]:.12g} "
                        f"within tolerance but the spectrum distinguishes them ({va!r} vs {vb!r})")


def coupled_tls_rates(model: CoupledTLSModel, bath_L: BathSpec, bath_R: BathSpec,
                      only: str | None = None) -> DissipationRates:
    """Dissipation rates over the four eigenbasis transitions.

    Cross spectra follow from the local coupling:
    ``gamma^alpha_kl(w) = c[alpha, k] conj(c[alpha, l]) gamma_alpha(w)``.
    ``only`` restricts to one bath ('L' or 'R').
    """
    raw = make_transitions(EIGEN_LEVELS, model.energies, EIGEN_PAIRS)
    densities = (_bath_density(bath_L, 1), _bath_density(bath_R, 2))
    _check_collisions(raw.frequencies, densities)
    transitions = _grouped(raw)
    c = local_couplings(model, transitions)
    baths = []
    for alpha, (bath, dens) in enumerate(zip((bath_L, bath_R), densities)):
        if only is not None and bath.label != only:
            continue
        weights = np.outer(c[alpha], c[alpha].conj())
        baths.append((bath.temperature, lambda w, W=weights, f=dens: W * f(w)))
    gmax = max(abs(d(w)) for d in densities for w in transitions.frequencies)
    if gmax > 0.1 * transitions.frequencies.min():
        warnings.warn(f"max gamma {gmax:.3g} is not small against the smallest gap", stacklevel=2)
    return rates_from_spectra(transitions, baths)


def build_coupled_tls(omega1: float, omega2: float, g: float, bath_L: BathSpec,
                      bath_R: BathSpec) -> tuple[CoupledTLSModel, Superoperator]:
    """Model and full non-secular generator in the eigenbasis."""
    model = CoupledTLSModel(omega1, omega2, g)
    rates = coupled_tls_rates(model, bath_L, bath_R)
    return model, build_nonsecular(model.hamiltonian(), rates)


def internal_flux(model: CoupledTLSModel, rho: np.ndarray) -> float:
    """Energy-exchange flux between the qubits, 4g Im<E1|rho|E2>."""
    return float(4 * model.g * np.asarray(rho)[1, 2].imag)


def internal_flux_commutator(model: CoupledTLSModel, rho: np.ndarray) -> float:
    """Same flux as ``-i <[sigma1_z, H_S]>`` evaluated in the bare basis."""
    r = model.to_bare(np.asarray(rho))
    H = model.bare_hamiltonian()
    comm = SIGMA1_Z @ H - H @ SIGMA1_Z
    return float((-1j * np.trace(r @ comm)).real)


def population_rate(model: CoupledTLSModel, L: Superoperator, rho: np.ndarray) -> float:
    """d<sigma1_z>/dt under ``L``."""
    drho = apply(L, rho)
    return float(np.trace(model.to_eigen(SIGMA1_Z) @ drho).real)


def bath_flux(model: CoupledTLSModel, L: Superoperator, rho: np.ndarray) -> float:
    """Flux between qubit 1 and its bath: d<sigma1_z>/dt minus the internal flux."""
    return population_rate(model, L, rho) - internal_flux(model, rho)


def heat_currents(model: CoupledTLSModel, bath_L: BathSpec, bath_R: BathSpec,
                  rho: np.ndarray) -> tuple[float, float]:
    """Energy currents into the system from bath L and from bath R."""
    H = model.hamiltonian()
    out = []
    for label in ("L", "R"):
        rates = coupled_tls_rates(model, bath_L, bath_R, only=label)
        L_alpha = build_nonsecular(H, rates, include_hamiltonian=False)
        out.append(float(np.trace(H @ apply(L_alpha, rho)).real))
    return out[0], out[1]
