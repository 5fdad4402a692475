"""Superoperators of the non-secular and secular master equations.

Density matrices are vectorized by column stacking throughout:
``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import SystemSpec, system_hamiltonian
from .rates import DissipationRates


class GeneratorKind(str, enum.Enum):
    NON_SECULAR = "NonSecular"
    SECULAR = "Secular"


@dataclass(frozen=True, eq=False)
class Superoperator:
    dim: int
    matrix: np.ndarray
    kind: GeneratorKind

    def __matmul__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)


@dataclass(frozen=True, eq=False)
class LambShift:
    hc: np.ndarray


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def _left(A: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(A.shape[0]), A)


def _right(B: np.ndarray) -> np.ndarray:
    return np.kron(B.T, np.eye(B.shape[0]))


def _hamiltonian(system) -> np.ndarray:
    if isinstance(system, SystemSpec):
        return system_hamiltonian(system)
    return np.asarray(system, dtype=complex)


def dissipator_coefficients(rates: DissipationRates) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrized weights of the absorption and emission terms.

    ``up[i, j] = Gamma^+_ji(eps_i) + Gamma^+_ji(eps_j)`` multiplies
    ``phi_i^+ rho phi_j^-``; ``down[i, j] = Gamma^-_ij(eps_i) + Gamma^-_ij(eps_j)``
    multiplies ``phi_i^- rho phi_j^+``.
    """
    K = len(rates.transitions)
    up = np.empty((K, K), dtype=complex)
    down = np.empty((K, K), dtype=complex)
    for i in range(K):
        for j in range(K):
            up[i, j] = rates.plus[i, j, i] + rates.plus[j, j, i]
            down[i, j] = rates.minus[i, i, j] + rates.minus[j, i, j]
    return up, down


def build_hc(rates: DissipationRates) -> LambShift:
    """Non-diagonal Lamb shift generated by interference of unequal-frequency transitions."""
    tr = rates.transitions
    d = tr.dim
    hc = np.zeros((d, d), dtype=complex)
    for i, ti in enumerate(tr):
        for j, tj in enumerate(tr):
            cp = (rates.plus[i, j, i] - rates.plus[j, j, i]) / 2j
            cm = (rates.minus[i, i, j] - rates.minus[j, i, j]) / 2j
            hc += cp * (tj.lowering @ ti.raising) + cm * (tj.raising @ ti.lowering)
    return LambShift(0.5 * (hc + hc.conj().T))


def _dissipative_matrix(rates: DissipationRates, pairs) -> np.ndarray:
    tr = rates.transitions
    d = tr.dim
    up, down = dissipator_coefficients(rates)
    coefs, jumps, conj_jumps = [], [], []
    for i, j in pairs:
        ti, tj = tr[i], tr[j]
        coefs += [up[i, j], down[i, j]]
        jumps += [ti.raising, ti.lowering]
        conj_jumps += [tj.lowering, tj.raising]
    c = np.array(coefs)
    A = np.array(jumps)
    B = np.array(conj_jumps)
    # sum_n c_n kron(B_n.T, A_n), as one contraction
    M = np.einsum("n,nqp,nrs->prqs", c, B, A).reshape(d * d, d * d)
    X = np.einsum("n,nab,nbc->ac", c, B, A)
    return M - 0.5 * (_right(X) + _left(X))


def _commutator_matrix(H: np.ndarray) -> np.ndarray:
    # i[rho, H] = i rho H - i H rho
    return 1j * (_right(H) - _left(H))


def build_nonsecular(system, rates: DissipationRates, include_hamiltonian: bool = True,
                     hc_sign: float = 1.0) -> Superoperator:
    """Full generator: i[rho, H_S + H_c] plus all (i, j) dissipator pairs.

    ``system`` is a :class:`SystemSpec` or an explicit Hamiltonian in the
    transition basis. ``hc_sign`` exists for mutation testing only.
    """
    K = len(rates.transitions)
    d = rates.transitions.dim
    H = hc_sign * build_hc(rates).hc
    if include_hamiltonian:
        H = H + _hamiltonian(system)
    M = _commutator_matrix(H)
    M += _dissipative_matrix(rates, [(i, j) for i in range(K) for j in range(K)])
    return Superoperator(d, M, GeneratorKind.NON_SECULAR)


def build_secular(system, rates: DissipationRates, include_hamiltonian: bool = False) -> Superoperator:
    """Lindblad generator keeping only the i = j terms (interaction picture by default)."""
    K = len(rates.transitions)
    d = rates.transitions.dim
    M = _dissipative_matrix(rates, [(i, i) for i in range(K)])
    if include_hamiltonian:
        M = M + _commutator_matrix(_hamiltonian(system))
    return Superoperator(d, M, GeneratorKind.SECULAR)


def apply(L: Superoperator, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (L.dim, L.dim):
        raise ValueError(f"state shape {rho.shape} does not match generator dimension {L.dim}")
    return unvec(L.matrix @ vec(rho), L.dim)


def apply_matrix_free(system, rates: DissipationRates, rho: np.ndarray,
                      form: str = "commutator") -> np.ndarray:
    """Evaluate the non-secular master equation directly on ``rho``.

    ``form="commutator"`` uses the unsymmetrized nested-commutator grouping
    with no explicit Lamb shift; ``form="lindblad"`` uses the symmetrized
    Lindblad-like grouping with H_c. Both are algebraically identical.
    """
    tr = rates.transitions
    H = _hamiltonian(system)
    rho = np.asarray(rho, dtype=complex)
    out = 1j * (rho @ H - H @ rho)
    K = len(tr)
    P, M = rates.plus, rates.minus

    def comm(a, b):
        return a @ b - b @ a

    if form == "commutator":
        for i in range(K):
            for j in range(K):
                up_i, dn_i = tr[i].raising, tr[i].lowering
                up_j, dn_j = tr[j].raising, tr[j].lowering
                out += P[j, j, i] * comm(up_i, rho @ dn_j) + P[i, j, i] * comm(up_i @ rho, dn_j)
                out += M[j, i, j] * comm(dn_i, rho @ up_j) + M[i, i, j] * comm(dn_i @ rho, up_j)
    elif form == "lindblad":
        hc = build_hc(rates).hc
        out += 1j * (rho @ hc - hc @ rho)
        up, down = dissipator_coefficients(rates)
        for i in range(K):
            for j in range(K):
                for coef, a, b in ((up[i, j], tr[i].raising, tr[j].lowering),
                                   (down[i, j], tr[i].lowering, tr[j].raising)):
                    X = b @ a
                    out += coef * (a @ rho @ b - 0.5 * (rho @ X + X @ rho))
    else:
        raise ValueError(f"unknown form {form!r}")
    return out
