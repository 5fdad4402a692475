"""Fixed-step fourth-order time evolution under a fixed generator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .generator import Superoperator, unvec, vec

STABILITY_LIMIT = 0.1
POSITIVITY_TOL = -1e-8
DEFAULT_SAMPLES = 1000


class IntegrationError(RuntimeError):
    pass


class PositivityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dt: float
    min_eigenvalues: np.ndarray
    positivity_violated: bool
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def traces(self) -> np.ndarray:
        return np.trace(self.states, axis1=1, axis2=2)


def rk4_step(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagator(L: Superoperator, h: float) -> np.ndarray:
    """One classical RK4 step of ``d vec(rho)/dt = L vec(rho)`` as a matrix.

    Stepping all basis vectors at once gives exactly the per-state RK4 map,
    so repeated multiplication reproduces the integrator step for step.
    """
    n = L.matrix.shape[0]
    return rk4_step(lambda Y: L.matrix @ Y, np.eye(n, dtype=complex), h)


def default_dt(frequencies) -> float:
    return 0.01 / max(frequencies)


def generator_norm(L: Superoperator) -> float:
    return float(np.linalg.norm(L.matrix, 2))


def evolve(L: Superoperator, rho0: np.ndarray, t_end: float, dt: float,
           samples: int | None = DEFAULT_SAMPLES) -> Trajectory:
    """Integrate from ``rho0`` to ``t_end``.

    The step is shrunk slightly if needed so that ``t_end`` is hit exactly.
    ``samples`` bounds the number of recorded intervals (``None`` records
    every step). No trace renormalization is applied.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (L.dim, L.dim):
        raise ValueError(f"initial state shape {rho0.shape} does not match dimension {L.dim}")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if not np.all(np.isfinite(L.matrix)):
        raise IntegrationError("generator contains non-finite entries")
    norm = generator_norm(L)
    if dt * norm > STABILITY_LIMIT:
        raise IntegrationError(
            f"dt={dt:g} violates the stability guard dt*||L|| <= {STABILITY_LIMIT} "
            f"(||L|| = {norm:.6g}); use dt <= {STABILITY_LIMIT / norm:.6g}")

    n_steps = math.ceil(t_end / dt - 1e-9) if t_end > 0 else 0
    h = t_end / n_steps if n_steps else dt
    if samples is None or samples >= n_steps:
        marks = np.arange(n_steps + 1)
    else:
        marks = np.unique(np.round(np.linspace(0, n_steps, samples + 1)).astype(int))

    step = rk4_propagator(L, h)
    powers: dict[int, np.ndarray] = {}
    x = vec(rho0)
    states = [rho0.copy()]
    for prev, cur in zip(marks[:-1], marks[1:]):
        k = int(cur - prev)
        if k not in powers:
            powers[k] = np.linalg.matrix_power(step, k)
        x = powers[k] @ x
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t={cur * h:g} (dt={h:g})")
        states.append(unvec(x, L.dim).copy())
    states = np.array(states)
    times = marks * h
    min_eigs = np.array([np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() for r in states])
    violated = bool(min_eigs.min() < POSITIVITY_TOL)
    if violated:
        warnings.warn(f"state lost positivity: min eigenvalue {min_eigs.min():.3g}",
                      PositivityWarning, stacklevel=2)
    return Trajectory(times, states, h, min_eigs, violated)


def convergence_time(traj: Trajectory, target: np.ndarray, eps: float) -> float | None:
    """First sampled time with Frobenius distance to ``target`` <= eps, else None."""
    dist = np.linalg.norm(traj.states - np.asarray(target)[None], axis=(1, 2))
    hit = np.nonzero(dist <= eps)[0]
    return float(traj.times[hit[0]]) if hit.size else None
