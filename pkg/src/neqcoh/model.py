"""System, bath and spectrum specifications.

Units: hbar = k_B = 1. Energies are usually given relative to the mean
transition gap, which is then 1.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special


class SpecError(ValueError):
    """Raised for invalid system, bath or spectrum specifications."""


class SpectrumLookupError(KeyError):
    """Raised when a tabulated spectrum has no entry for a queried frequency."""


class SystemKind(str, enum.Enum):
    LAMBDA = "Lambda"
    VEE = "Vee"
    XI = "Xi"
    COUPLED_TLS = "CoupledTLS"


# level labels in matrix-index order
LEVELS = {
    SystemKind.LAMBDA: ("g1", "g2", "e"),
    SystemKind.VEE: ("g", "e1", "e2"),
    SystemKind.XI: ("g", "e1", "e2"),
    SystemKind.COUPLED_TLS: ("G", "E1", "E2", "D"),
}

# (lower, upper) of transitions 1 and 2
_WIRING = {
    SystemKind.LAMBDA: (("g1", "e"), ("g2", "e")),
    SystemKind.VEE: (("g", "e1"), ("g", "e2")),
    SystemKind.XI: (("g", "e1"), ("e1", "e2")),
}

FREQ_TOL = 1e-9


@dataclass(frozen=True)
class SystemSpec:
    kind: SystemKind
    levels: tuple[str, ...] = ()
    energies: tuple[float, ...] = ()
    omega1: float | None = None
    omega2: float | None = None
    g: float | None = None

    @property
    def dim(self) -> int:
        return len(LEVELS[self.kind])

    def energy(self, label: str) -> float:
        return self.energies[self.levels.index(label)]

    def parameters(self) -> dict[str, float]:
        """Inverse of :func:`build_system` keyword arguments."""
        if self.kind is SystemKind.COUPLED_TLS:
            return {"omega1": self.omega1, "omega2": self.omega2, "g": self.g}
        return {f"E_{lab}": e for lab, e in zip(self.levels, self.energies)}


def build_system(kind: SystemKind | str, **params: float) -> SystemSpec:
    """Validate level energies for ``kind`` and return a :class:`SystemSpec`.

    Three-level kinds take ``E_<label>`` keywords (``E_g1, E_g2, E_e`` for
    Lambda, ``E_g, E_e1, E_e2`` for Vee and Xi). CoupledTLS takes
    ``omega1, omega2, g``.
    """
    kind = SystemKind(kind)
    if kind is SystemKind.COUPLED_TLS:
        try:
            w1, w2, g = (float(params[k]) for k in ("omega1", "omega2", "g"))
        except KeyError as exc:
            raise SpecError(f"CoupledTLS requires omega1, omega2, g (missing {exc})") from None
        if not (w1 > 0 and w2 > 0):
            raise SpecError("CoupledTLS requires omega1, omega2 > 0")
        if not math.isfinite(g):
            raise SpecError("CoupledTLS coupling g must be finite")
        # the lowest single-excitation eigenlevel must stay above |G>
        if math.sqrt((w1 - w2) ** 2 + 4 * g * g) >= w1 + w2:
            raise SpecError("CoupledTLS coupling too strong: single-excitation level below ground")
        return SystemSpec(kind, LEVELS[kind], (), w1, w2, g)

    labels = LEVELS[kind]
    missing = [lab for lab in labels if f"E_{lab}" not in params]
    if missing:
        raise SpecError(f"{kind.value} requires energies for levels {missing}")
    unknown = set(params) - {f"E_{lab}" for lab in labels}
    if unknown:
        raise SpecError(f"unknown parameters for {kind.value}: {sorted(unknown)}")
    E = {lab: float(params[f"E_{lab}"]) for lab in labels}
    if kind is SystemKind.LAMBDA:
        ok = E["e"] > E["g1"] and E["e"] > E["g2"]
        rule = "E_e > E_g1 and E_e > E_g2"
    elif kind is SystemKind.VEE:
        ok = E["e1"] > E["g"] and E["e2"] > E["g"]
        rule = "E_e1 > E_g and E_e2 > E_g"
    else:
        ok = E["g"] < E["e1"] < E["e2"]
        rule = "E_g < E_e1 < E_e2"
    if not ok:
        raise SpecError(f"{kind.value} level ordering violated: need {rule}, got {E}")
    return SystemSpec(kind, labels, tuple(E[lab] for lab in labels))


def coupled_tls_energies(omega1: float, omega2: float, g: float) -> tuple[float, float, float, float]:
    """Eigenenergies (E_G, E_1, E_2, E_D) of two exchange-coupled qubits."""
    half_split = 0.5 * math.hypot(omega1 - omega2, 2 * g)
    half_sum = 0.5 * (omega1 + omega2)
    return (-half_sum, -half_split, half_split, half_sum)


def system_energies(system: SystemSpec) -> np.ndarray:
    if system.kind is SystemKind.COUPLED_TLS:
        return np.array(coupled_tls_energies(system.omega1, system.omega2, system.g))
    return np.array(system.energies)


def system_hamiltonian(system: SystemSpec) -> np.ndarray:
    """H_S in its own eigenbasis (diagonal)."""
    return np.diag(system_energies(system)).astype(complex)


@dataclass(frozen=True, eq=False)
class Transition:
    index: int
    lower: str
    upper: str
    epsilon: float
    lowering: np.ndarray = field(repr=False)

    @property
    def raising(self) -> np.ndarray:
        return self.lowering.conj().T


@dataclass(frozen=True, eq=False)
class TransitionSet:
    levels: tuple[str, ...]
    transitions: tuple[Transition, ...]

    def __len__(self) -> int:
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)

    def __getitem__(self, i: int) -> Transition:
        return self.transitions[i]

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([t.epsilon for t in self.transitions])

    @property
    def delta12(self) -> float:
        return self.transitions[0].epsilon - self.transitions[1].epsilon


def elementary(dim: int, row: int, col: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    m[row, col] = 1.0
    return m


def make_transitions(levels: tuple[str, ...], energies, pairs) -> TransitionSet:
    """Transitions ``|lower><upper|`` for each (lower, upper) label pair."""
    dim = len(levels)
    out = []
    for k, (lo, up) in enumerate(pairs, start=1):
        i, j = levels.index(lo), levels.index(up)
        eps = float(energies[j] - energies[i])
        if not eps > 0:
            raise SpecError(f"transition {lo}<->{up} has non-positive gap {eps}")
        out.append(Transition(k, lo, up, eps, elementary(dim, i, j)))
    return TransitionSet(tuple(levels), tuple(out))


def transitions_of(system: SystemSpec) -> TransitionSet:
    if system.kind is SystemKind.COUPLED_TLS:
        raise SpecError("CoupledTLS transitions are built by neqcoh.flux")
    return make_transitions(system.levels, system.energies, _WIRING[system.kind])


# --- spectra -------------------------------------------------------------


@dataclass(frozen=True)
class Flat:
    gamma11: float
    gamma22: float

    def __post_init__(self):
        if not (self.gamma11 > 0 and self.gamma22 > 0):
            raise SpecError("Flat spectrum values must be > 0")

    def diagonal(self, i: int, omega: float) -> float:
        return self.gamma11 if i == 1 else self.gamma22


@dataclass(frozen=True)
class Tabulated:
    """Diagonal spectra given at explicit frequencies.

    ``table`` is ``((i, ((omega, value), ...)), ...)`` for i in {1, 2}.
    Lookups match frequencies within ``FREQ_TOL``; no interpolation.
    """

    table: tuple[tuple[int, tuple[tuple[float, float], ...]], ...]

    def __post_init__(self):
        for _, rows in self.table:
            for _, v in rows:
                if v < 0:
                    raise SpecError("Tabulated spectrum values must be >= 0")

    @classmethod
    def from_dict(cls, data: dict[int, dict[float, float]]) -> "Tabulated":
        return cls(tuple((int(i), tuple(sorted((float(w), float(v)) for w, v in rows.items())))
                         for i, rows in sorted(data.items())))

    def diagonal(self, i: int, omega: float) -> float:
        for idx, rows in self.table:
            if idx != i:
                continue
            for w, v in rows:
                if abs(w - omega) <= FREQ_TOL * max(1.0, abs(omega)):
                    return v
        raise SpectrumLookupError(f"no tabulated gamma_{i}{i} at omega={omega!r}")


@dataclass(frozen=True)
class Step:
    low: float
    high: float
    center: float
    width: float

    def __post_init__(self):
        if self.low < 0 or self.high < 0 or not self.width > 0:
            raise SpecError("Step needs low, high >= 0 and width > 0")

    def __call__(self, omega: float) -> float:
        z = (omega - self.center) / self.width
        return self.low + (self.high - self.low) * special.expit(z)


@dataclass(frozen=True)
class LogisticStep:
    """Smooth step per diagonal pair, e.g. one rising and one falling spectrum."""

    step11: Step
    step22: Step

    def diagonal(self, i: int, omega: float) -> float:
        return float((self.step11 if i == 1 else self.step22)(omega))


SpectralModel = Union[Flat, Tabulated, LogisticStep]


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise SpecError("weight factor must lie in [0, 1]")


@dataclass(frozen=True)
class Dimensional:
    """Spatial-correlation weight of two emitters a distance ``x0`` apart in D dimensions."""

    D: int
    x0: float

    def __post_init__(self):
        if self.D not in (1, 2, 3):
            raise SpecError("dimension D must be 1, 2 or 3")
        if self.x0 < 0:
            raise SpecError("distance scale x0 must be >= 0")


WeightFactorModel = Union[Constant, Dimensional]


@dataclass(frozen=True)
class InterferenceSpec:
    weight: WeightFactorModel = Constant(1.0)
    phase: float = 0.0


@dataclass(frozen=True)
class BathSpec:
    label: str
    temperature: float
    spectral_model: SpectralModel
    interference: InterferenceSpec = InterferenceSpec()

    def __post_init__(self):
        if self.label not in ("L", "R"):
            raise SpecError("bath label must be 'L' or 'R'")
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise SpecError("bath temperature must be finite and >= 0")


def weight_factor(model: WeightFactorModel, omega: float) -> float:
    if isinstance(model, Constant):
        return model.value
    x = omega * model.x0
    if model.D == 1:
        f = math.cos(x) ** 2
    elif model.D == 2:
        f = float(special.j0(x)) ** 2
    else:
        f = 1.0 if x == 0 else (math.sin(x) / x) ** 2
    return min(max(f, 0.0), 1.0)


def gamma(bath: BathSpec, i: int, j: int, omega: float) -> complex:
    """Coupling spectrum gamma_ij(omega) of ``bath`` between transitions i and j."""
    if not omega > 0:
        raise SpecError(f"spectrum queried at non-positive frequency {omega}")
    model = bath.spectral_model
    if i == j:
        return complex(model.diagonal(i, omega))
    g11 = model.diagonal(1, omega)
    g22 = model.diagonal(2, omega)
    f = weight_factor(bath.interference.weight, omega)
    phase = bath.interference.phase if (i, j) == (1, 2) else -bath.interference.phase
    return math.sqrt(f * g11 * g22) * complex(math.cos(phase), math.sin(phase))


def gamma_matrix(bath: BathSpec, omega: float) -> np.ndarray:
    return np.array([[gamma(bath, i, j, omega) for j in (1, 2)] for i in (1, 2)])


def check_born_markov(baths, frequencies) -> None:
    """Warn when a diagonal spectrum is not small compared with the transition gaps."""
    fmin = min(frequencies)
    gmax = 0.0
    for b in baths:
        for w in frequencies:
            gmax = max(gmax, abs(gamma(b, 1, 1, w)), abs(gamma(b, 2, 2, w)))
    if gmax > 0.1 * fmin:
        warnings.warn(
            f"max gamma {gmax:.3g} exceeds 0.1 * min gap {fmin:.3g}; weak-coupling assumption is doubtful",
            stacklevel=3,
        )
