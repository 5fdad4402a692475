"""Bath occupations and dissipation rates Gamma^+ / Gamma^-."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .model import BathSpec, TransitionSet, check_born_markov, gamma_matrix

SpectrumFn = Callable[[float], np.ndarray]


def planck_occupation(omega: float, T: float) -> float:
    """Bose occupation 1/(exp(omega/T) - 1); exactly 0 at T = 0."""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    if T < 0:
        raise ValueError(f"temperature must be >= 0, got {T}")
    if T == 0:
        return 0.0
    x = omega / T
    # exp(-x)/(1-exp(-x)) avoids overflow for large x and cancellation for small x
    return math.exp(-x) / -math.expm1(-x)


@dataclass(frozen=True, eq=False)
class DissipationRates:
    """Rates evaluated at every transition frequency.

    ``plus[a, i, j]`` is Gamma^+_ij(eps_a) and ``minus[a, i, j]`` is
    Gamma^-_ij(eps_a), all indices 0-based.
    """

    transitions: TransitionSet = field(repr=False)
    plus: np.ndarray
    minus: np.ndarray

    def gp(self, i: int, j: int, a: int) -> complex:
        """Gamma^+_ij(eps_a) with 1-based indices."""
        return complex(self.plus[a - 1, i - 1, j - 1])

    def gm(self, i: int, j: int, a: int) -> complex:
        """Gamma^-_ij(eps_a) with 1-based indices."""
        return complex(self.minus[a - 1, i - 1, j - 1])

    def __add__(self, other: "DissipationRates") -> "DissipationRates":
        return DissipationRates(self.transitions, self.plus + other.plus, self.minus + other.minus)

    def scaled(self, factor: float) -> "DissipationRates":
        return DissipationRates(self.transitions, factor * self.plus, factor * self.minus)


def rates_from_spectra(transitions: TransitionSet,
                       baths: Sequence[tuple[float, SpectrumFn]]) -> DissipationRates:
    """Sum 1/2 gamma N and 1/2 gamma (N + 1) over baths.

    Each bath is ``(temperature, spectrum)`` where ``spectrum(omega)``
    returns the K x K cross-spectrum matrix between transitions.
    """
    K = len(transitions)
    plus = np.zeros((K, K, K), dtype=complex)
    minus = np.zeros((K, K, K), dtype=complex)
    for a, eps in enumerate(transitions.frequencies):
        for T, spectrum in baths:
            n = planck_occupation(eps, T)
            g = np.asarray(spectrum(eps), dtype=complex)
            plus[a] += 0.5 * g * n
            minus[a] += 0.5 * g * (n + 1.0)
    return DissipationRates(transitions, plus, minus)


def _bath_spectrum(bath: BathSpec) -> SpectrumFn:
    return lambda w: gamma_matrix(bath, w)


@lru_cache(maxsize=1024)
def _cached_arrays(baths: tuple[BathSpec, ...], freqs: tuple[float, ...]):
    r = rates_from_spectra(_FreqOnly(freqs), [(b.temperature, _bath_spectrum(b)) for b in baths])
    r.plus.flags.writeable = False
    r.minus.flags.writeable = False
    return r.plus, r.minus


class _FreqOnly:
    def __init__(self, freqs):
        self.frequencies = np.array(freqs)

    def __len__(self):
        return len(self.frequencies)


def dissipation_rates(baths: Sequence[BathSpec], transitions: TransitionSet,
                      check: bool = True) -> DissipationRates:
    """Gamma^+/- for a two-transition system coupled to ``baths``."""
    baths = tuple(baths)
    if check:
        check_born_markov(baths, transitions.frequencies)
    plus, minus = _cached_arrays(baths, tuple(transitions.frequencies.tolist()))
    return DissipationRates(transitions, plus, minus)


def micro_reversibility_residual(rates: DissipationRates, T: float) -> float:
    """max |Gamma^+/Gamma^- - exp(-omega/T)| over entries with Gamma^- != 0."""
    worst = 0.0
    for a, eps in enumerate(rates.transitions.frequencies):
        boltz = math.exp(-eps / T) if T > 0 else 0.0
        gm = rates.minus[a]
        mask = gm != 0
        if mask.any():
            worst = max(worst, float(np.max(np.abs(rates.plus[a][mask] / gm[mask] - boltz))))
    return worst
