"""Steady states, the Lambda/V Bloch systems and the zero-coherence test."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .generator import Superoperator, unvec, vec
from .model import SystemKind
from .rates import DissipationRates

UNIQUENESS_RTOL = 1e-8
ZERO_COHERENCE_ATOL = 1e-12


class DegenerateSteadyStateWarning(RuntimeWarning):
    pass


class ConjugacyWarning(RuntimeWarning):
    """The Bloch solve returned tau12 and tau21 that are not complex conjugates."""


CONJUGACY_RTOL = 1e-8


class SteadyMethod(str, enum.Enum):
    NULL_SPACE = "NullSpace"
    BLOCH_LINEAR = "BlochLinear"


@dataclass(frozen=True, eq=False)
class SteadyState:
    rho: np.ndarray
    method: SteadyMethod
    unique: bool
    residual: float

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()


def _trace_row(d: int) -> np.ndarray:
    return vec(np.eye(d)).conj()


def stationary_distribution(W: np.ndarray) -> np.ndarray | None:
    """Stationary vector of a rate matrix ``W`` (columns sum to zero).

    Grassmann-Taksar-Heyman elimination: no subtractions, so every entry
    keeps full relative accuracy. Returns None for a reducible chain.
    """
    Q = np.array(W.real.T, dtype=float)  # Q[i, j] = rate i -> j
    n = Q.shape[0]
    np.fill_diagonal(Q, 0.0)
    for k in range(n - 1, 0, -1):
        s = Q[k, :k].sum()
        if not s > 0:
            return None
        Q[:k, :k] += np.outer(Q[:k, k], Q[k, :k]) / s
        Q[:k, k] /= s
    p = np.zeros(n)
    p[0] = 1.0
    for k in range(1, n):
        p[k] = p[:k] @ Q[:k, k]
    return p / p.sum()


def _scaled_null_vector(A: np.ndarray, d: int, sweeps: int = 1) -> np.ndarray:
    """Solve ``A x = 0, tr x = 1`` by least squares with two-sided rescaling.

    Low-temperature populations span many decades. Columns are scaled by
    population estimates (coherences by the bound sqrt(p_i p_j)), seeded from
    the population-only rate block and refined ``sweeps`` times; rows are
    scaled to unit max.
    """
    t = _trace_row(d)
    diag = [k * d + k for k in range(d)]
    rhs = np.zeros(d * d + 1, dtype=complex)
    rhs[-1] = 1.0
    p = stationary_distribution(A[np.ix_(diag, diag)])
    if p is None:
        x, *_ = np.linalg.lstsq(np.vstack([A, t]), rhs, rcond=None)
        p = np.abs(x[diag].real)
    for _ in range(sweeps + 1):
        p = np.maximum(p, p.max() * 1e-300)
        c = np.sqrt(np.outer(p, p)).reshape(-1, order="F")
        B = A * c
        rows = np.abs(B).max(axis=1)
        rows[rows == 0] = 1.0
        tc = t * c
        tmax = np.abs(tc).max()
        rhs[-1] = 1.0 / tmax
        y, *_ = np.linalg.lstsq(np.vstack([B / rows[:, None], tc / tmax]), rhs, rcond=None)
        x = c * y
        p = np.abs(x[diag].real)
    return x


def steady_nullspace(L: Superoperator, rtol: float = UNIQUENESS_RTOL) -> SteadyState:
    """Unit-trace null vector of ``L``.

    Uniqueness is decided from the SVD: the second-smallest singular value
    must exceed ``rtol`` times the largest. The state itself comes from the
    trace-bordered system, which keeps full relative accuracy for
    exponentially small populations; for a degenerate generator it is one
    representative of the null space.
    """
    d = L.dim
    A = L.matrix
    _, s, vh = np.linalg.svd(A)
    unique = bool(s[-2] > rtol * s[0])
    if not unique:
        warnings.warn(f"steady state is not unique (second singular value {s[-2]:.3g}, "
                      f"largest {s[0]:.3g}); returning a representative",
                      DegenerateSteadyStateWarning, stacklevel=2)
    x = _scaled_null_vector(A, d)
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(A @ vec(rho)))
    return SteadyState(rho, SteadyMethod.NULL_SPACE, unique, residual)


@dataclass(frozen=True, eq=False)
class BlochSystem:
    """Steady equations over (n1, n2, tau12, tau21) with n_ref as a parameter.

    The equations read ``matrix @ x = -source * n_ref`` where n_ref is the
    population of the shared level (e for Lambda, g for V). ``det_formula``
    is the closed-form determinant of ``matrix``.
    """

    kind: SystemKind
    matrix: np.ndarray
    source: np.ndarray
    det_formula: complex

    def substituted(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) after eliminating n_ref = 1 - n1 - n2."""
        A = self.matrix.copy()
        A[:, 0] -= self.source
        A[:, 1] -= self.source
        return A, -self.source

    def solve(self) -> np.ndarray:
        """Steady density matrix in level order of the system."""
        A, b = self.substituted()
        try:
            n1, n2, t12, t21 = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            # exactly singular: one member of the solution family
            n1, n2, t12, t21 = np.linalg.lstsq(A, b, rcond=None)[0]
        # tau12 and tau21 are solved as independent unknowns; conjugacy is a check
        if abs(t12 - np.conj(t21)) > CONJUGACY_RTOL * max(1.0, abs(n1), abs(n2)):
            warnings.warn(f"Bloch coherences are not conjugate: tau12={t12:.3g}, tau21={t21:.3g}",
                          ConjugacyWarning, stacklevel=2)
        n_ref = 1.0 - n1 - n2
        if self.kind is SystemKind.LAMBDA:
            # levels (g1, g2, e); tau12 = <g2|rho|g1>
            rho = np.array([[n1, t21, 0], [t12, n2, 0], [0, 0, n_ref]], dtype=complex)
        else:
            # levels (g, e1, e2); tau12 = <e2|rho|e1>
            rho = np.array([[n_ref, 0, 0], [0, n1, t21], [0, t12, n2]], dtype=complex)
        return rho


def _det_lambda(a, b, cross, delta12):
    s = a + b
    return (s * s * (4 * a * b - 4 * cross.real + delta12 ** 2)
            - (2 * cross.imag - delta12 * (a - b)) ** 2)


def det_formula(rates: DissipationRates, delta12: float) -> complex:
    """Closed-form determinant of the Lambda Bloch matrix.

    With ``X = Gamma^+_12(eps2) Gamma^+_21(eps1)``:
    ``(a+b)^2 (4ab - 4 Re X + D^2) - (2 Im X - D (a - b))^2`` where
    ``a = Gamma^+_11(eps1)``, ``b = Gamma^+_22(eps2)``, ``D = delta12``.
    """
    a = rates.gp(1, 1, 1).real
    b = rates.gp(2, 2, 2).real
    cross = rates.gp(1, 2, 2) * rates.gp(2, 1, 1)
    return complex(_det_lambda(a, b, cross, delta12))


def det_formula_real(rates: DissipationRates, delta12: float) -> float:
    """Determinant specialized to real cross rates."""
    a = rates.gp(1, 1, 1).real
    b = rates.gp(2, 2, 2).real
    cross = (rates.gp(1, 2, 2) * rates.gp(2, 1, 1)).real
    s = a + b
    return 4 * s * s * (a * b - cross) + 4 * delta12 ** 2 * a * b


def build_bloch_lambda(rates: DissipationRates, delta12: float | None = None) -> BlochSystem:
    """Steady equations of the Lambda system from the dissipation rates."""
    if delta12 is None:
        delta12 = rates.transitions.delta12
    P, M = rates.gp, rates.gm
    s = P(1, 1, 1) + P(2, 2, 2)
    # d tau12/dt carries -i*delta12*tau12 since tau12 = rho_{g2 g1}
    A = -np.array([
        [2 * P(1, 1, 1), 0, P(1, 2, 2), P(2, 1, 2)],
        [0, 2 * P(2, 2, 2), P(1, 2, 1), P(2, 1, 1)],
        [P(2, 1, 1), P(2, 1, 2), s + 1j * delta12, 0],
        [P(1, 2, 1), P(1, 2, 2), 0, s - 1j * delta12],
    ], dtype=complex)
    source = np.array([
        2 * M(1, 1, 1),
        2 * M(2, 2, 2),
        M(2, 1, 1) + M(2, 1, 2),
        M(1, 2, 1) + M(1, 2, 2),
    ], dtype=complex)
    return BlochSystem(SystemKind.LAMBDA, A, source, det_formula(rates, delta12))


def build_bloch_vee(rates: DissipationRates, delta12: float | None = None) -> BlochSystem:
    """Steady equations of the V system; emission and absorption swap roles."""
    if delta12 is None:
        delta12 = rates.transitions.delta12
    P, M = rates.gp, rates.gm
    s = M(1, 1, 1) + M(2, 2, 2)
    # tau12 = rho_{e2 e1}, which precesses as +i*delta12*tau12
    A = -np.array([
        [2 * M(1, 1, 1), 0, M(2, 1, 2), M(1, 2, 2)],
        [0, 2 * M(2, 2, 2), M(2, 1, 1), M(1, 2, 1)],
        [M(1, 2, 1), M(1, 2, 2), s - 1j * delta12, 0],
        [M(2, 1, 1), M(2, 1, 2), 0, s + 1j * delta12],
    ], dtype=complex)
    source = np.array([
        2 * P(1, 1, 1),
        2 * P(2, 2, 2),
        P(1, 2, 1) + P(1, 2, 2),
        P(2, 1, 1) + P(2, 1, 2),
    ], dtype=complex)
    a, b = M(1, 1, 1).real, M(2, 2, 2).real
    det = _det_lambda(a, b, M(1, 2, 2) * M(2, 1, 1), delta12)
    return BlochSystem(SystemKind.VEE, A, source, complex(det))


def _bloch_state(bloch: BlochSystem, L: Superoperator | None) -> SteadyState:
    scale = np.prod(np.linalg.norm(bloch.matrix, axis=1))
    unique = bool(abs(np.linalg.det(bloch.matrix)) > UNIQUENESS_RTOL * scale)
    rho = bloch.solve()
    residual = float(np.linalg.norm(L.matrix @ vec(rho))) if L is not None else float("nan")
    return SteadyState(rho, SteadyMethod.BLOCH_LINEAR, unique, residual)


def steady_bloch(kind: SystemKind, rates: DissipationRates,
                 L: Superoperator | None = None) -> SteadyState:
    kind = SystemKind(kind)
    if kind is SystemKind.LAMBDA:
        return _bloch_state(build_bloch_lambda(rates), L)
    if kind is SystemKind.VEE:
        return _bloch_state(build_bloch_vee(rates), L)
    raise ValueError(f"no Bloch system for {kind.value}")


def steady_vee(rates: DissipationRates, L: Superoperator | None = None) -> SteadyState:
    return steady_bloch(SystemKind.VEE, rates, L)


@dataclass(frozen=True)
class ZeroCoherenceCondition:
    lhs: complex
    satisfied: bool
    guarded: tuple[str, ...] = ()


def zero_coherence_condition(rates: DissipationRates,
                             atol: float = ZERO_COHERENCE_ATOL) -> ZeroCoherenceCondition:
    """Necessary condition for rho12 = 0 in the Lambda steady state.

    Each term ``G+_21(e)[G-_21(e)/G+_21(e) - G-_ii(e)/G+_ii(e)]`` is evaluated
    as ``G-_21(e) - G+_21(e) G-_ii(e)/G+_ii(e)``, which is also the limit when
    G+_21(e) = 0.
    """
    P, M = rates.gp, rates.gm
    guarded = []
    lhs = 0j
    for a, ii in ((1, 1), (2, 2)):
        if P(2, 1, a) == 0:
            guarded.append(f"Gamma+_21(eps{a}) = 0")
        if P(ii, ii, a) == 0:
            if P(2, 1, a) != 0:
                raise ZeroDivisionError(f"Gamma+_{ii}{ii}(eps{a}) = 0 with nonzero cross rate")
            guarded.append(f"Gamma+_{ii}{ii}(eps{a}) = 0")
            lhs += M(2, 1, a)
            continue
        lhs += M(2, 1, a) - P(2, 1, a) * (M(ii, ii, a) / P(ii, ii, a))
    return ZeroCoherenceCondition(complex(lhs), bool(abs(lhs) <= atol), tuple(guarded))


def secular_reference(rates: DissipationRates, kind: SystemKind) -> np.ndarray:
    """Populations from the rate equations of the secular approximation."""
    kind = SystemKind(kind)
    up = np.array([rates.gp(1, 1, 1).real, rates.gp(2, 2, 2).real])
    down = np.array([rates.gm(1, 1, 1).real, rates.gm(2, 2, 2).real])
    if kind is SystemKind.LAMBDA:
        if np.all(up == 0):
            return np.array([down[0] / down.sum(), down[1] / down.sum(), 0.0]) if down.sum() else \
                np.array([0.5, 0.5, 0.0])
        # unnormalized weights with n_e = up1 * up2
        w = np.array([down[0] * up[1], down[1] * up[0], up[0] * up[1]])
    elif kind is SystemKind.VEE:
        w = np.array([down[0] * down[1], up[0] * down[1], up[1] * down[0]])
    elif kind is SystemKind.XI:
        w = np.array([down[0] * down[1], up[0] * down[1], up[0] * up[1]])
    else:
        raise ValueError(f"no secular reference for {kind.value}")
    return w / w.sum()
