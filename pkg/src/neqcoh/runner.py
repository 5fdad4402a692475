"""Steady-state sweeps and trajectory runs driven by a RunConfig."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import IO, Iterable, Iterator

import numpy as np

from . import model as m
from .config import RunConfig, parse_config, with_overrides
from .dynamics import default_dt, evolve
from .flux import (EIGEN_LEVELS, CoupledTLSModel, bath_flux, coupled_tls_rates, heat_currents,
                   internal_flux, internal_flux_commutator)
from .generator import build_nonsecular, build_secular
from .rates import dissipation_rates
from .steady import (DegenerateSteadyStateWarning, build_bloch_lambda, build_bloch_vee,
                     steady_bloch, steady_nullspace, zero_coherence_condition)

Record = dict[str, object]


def _levels(cfg: RunConfig) -> tuple[str, ...]:
    if cfg.system.kind is m.SystemKind.COUPLED_TLS:
        return EIGEN_LEVELS
    return m.LEVELS[cfg.system.kind]


def _pairs(levels):
    return list(itertools.combinations(range(len(levels)), 2))


def build_generator(cfg: RunConfig):
    """(system, rates, L) for the configured system and baths."""
    system = cfg.system.build()
    bL, bR = cfg.bath_specs()
    if isinstance(system, CoupledTLSModel):
        rates = coupled_tls_rates(system, bL, bR)
        H = system.hamiltonian()
    else:
        rates = dissipation_rates([bL, bR], m.transitions_of(system))
        H = system
    if cfg.solver.generator == "Secular":
        L = build_secular(H, rates, include_hamiltonian=True)
    else:
        L = build_nonsecular(H, rates)
    return system, rates, L


def _complex_fields(rec: Record, name: str, z: complex) -> None:
    z = complex(z)
    rec[f"{name}_re"] = z.real
    rec[f"{name}_im"] = z.imag
    rec[f"{name}_abs"] = abs(z)


def steady_columns(cfg: RunConfig) -> list[str]:
    levels = _levels(cfg)
    cols = [a.path for a in cfg.sweep.axes]
    cols += ["T_L", "T_R"]
    cols += [f"p_{lab}" for lab in levels]
    for i, j in _pairs(levels):
        cols += [f"rho_{levels[i]}_{levels[j]}_{s}" for s in ("re", "im", "abs")]
    kind = cfg.system.kind
    if kind in (m.SystemKind.LAMBDA, m.SystemKind.VEE):
        cols += ["det_re", "det_im", "det_abs"]
    if kind is m.SystemKind.LAMBDA:
        cols += ["zero_coherence_residual"]
    if kind is m.SystemKind.COUPLED_TLS:
        cols += ["J12", "J1B1", "Q_L", "Q_R"]
    cols += ["unique", "residual", "method", "error"]
    return cols


def steady_record(cfg: RunConfig, point: dict[str, float] | None = None) -> Record:
    """One steady-state record; degeneracy and solver failures are reported, not raised."""
    point = point or {}
    rec: Record = dict(point)
    rec["T_L"], rec["T_R"] = cfg.baths.temperatures()
    levels = _levels(cfg)
    cols = steady_columns(cfg)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateSteadyStateWarning)
            system, rates, L = build_generator(cfg)
            if cfg.solver.method == "BlochLinear":
                ss = steady_bloch(cfg.system.kind, rates, L)
            else:
                ss = steady_nullspace(L, cfg.solver.uniqueness_rtol)
    except (np.linalg.LinAlgError, m.SpecError, ZeroDivisionError) as err:
        for c in cols:
            rec.setdefault(c, math.nan)
        rec.update(unique=False, method=cfg.solver.method, error=str(err))
        return {c: rec[c] for c in cols}
    rho = ss.rho
    for k, lab in enumerate(levels):
        rec[f"p_{lab}"] = float(rho[k, k].real)
    for i, j in _pairs(levels):
        _complex_fields(rec, f"rho_{levels[i]}_{levels[j]}", rho[i, j])
    kind = cfg.system.kind
    if kind is m.SystemKind.LAMBDA:
        _complex_fields(rec, "det", build_bloch_lambda(rates).det_formula)
        rec["zero_coherence_residual"] = abs(
            zero_coherence_condition(rates, cfg.solver.zero_coherence_atol).lhs)
    elif kind is m.SystemKind.VEE:
        _complex_fields(rec, "det", build_bloch_vee(rates).det_formula)
    elif kind is m.SystemKind.COUPLED_TLS:
        bL, bR = cfg.bath_specs()
        rec["J12"] = internal_flux(system, rho)
        rec["J1B1"] = bath_flux(system, L, rho)
        rec["Q_L"], rec["Q_R"] = heat_currents(system, bL, bR, rho)
    rec.update(unique=ss.unique, residual=ss.residual, method=ss.method.value, error="")
    return {c: rec.get(c, math.nan) for c in cols}


def grid_points(cfg: RunConfig) -> list[dict[str, float]]:
    axes = cfg.sweep.axes
    if not axes:
        return [{}]
    return [dict(zip([a.path for a in axes], vals))
            for vals in itertools.product(*[a.values() for a in axes])]


def _point_task(args) -> Record:
    data, point = args
    cfg = parse_config(data)
    return steady_record(with_overrides(cfg, point) if point else cfg, point)


def sweep(cfg: RunConfig, workers: int = 1) -> Iterator[Record]:
    """Records in grid order (last axis fastest), whatever the worker count."""
    data = cfg.model_dump(mode="json")
    tasks = [(data, p) for p in grid_points(cfg)]
    if workers <= 1:
        for t in tasks:
            yield _point_task(t)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_point_task, tasks, chunksize=max(1, len(tasks) // (8 * workers)))


def run_steady(cfg: RunConfig, workers: int = 1) -> list[Record]:
    return list(sweep(cfg, workers))


# --- trajectories ---------------------------------------------------------


def initial_state(cfg: RunConfig, dim: int, energies) -> np.ndarray:
    init = cfg.evolve.initial
    if init == "ground":
        rho = np.zeros((dim, dim), dtype=complex)
        k = int(np.argmin(energies))
        rho[k, k] = 1.0
        return rho
    if init == "maximally-mixed":
        return np.eye(dim, dtype=complex) / dim
    if init == "random":
        return random_density_matrix(dim, np.random.default_rng(cfg.seed))
    rho = np.array(init.re, dtype=complex)
    if init.im is not None:
        rho = rho + 1j * np.array(init.im)
    if rho.shape != (dim, dim):
        raise m.SpecError(f"evolve.initial: expected a {dim}x{dim} matrix, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-12):
        raise m.SpecError("evolve.initial: matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise m.SpecError("evolve.initial: trace must be 1")
    if np.linalg.eigvalsh(rho).min() < -1e-12:
        raise m.SpecError("evolve.initial: matrix is not positive semidefinite")
    return rho


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def trajectory_columns(cfg: RunConfig) -> list[str]:
    levels = _levels(cfg)
    cols = ["t"] + [f"p_{lab}" for lab in levels]
    for i, j in _pairs(levels):
        cols += [f"rho_{levels[i]}_{levels[j]}_re", f"rho_{levels[i]}_{levels[j]}_im"]
    cols += ["trace", "min_eigenvalue"]
    if cfg.system.kind is m.SystemKind.COUPLED_TLS:
        cols += ["J12", "J12_commutator", "J1B1"]
    return cols


def run_evolve(cfg: RunConfig) -> list[Record]:
    system, rates, L = build_generator(cfg)
    if isinstance(system, CoupledTLSModel):
        energies = system.energies
    else:
        energies = m.system_energies(system)
    rho0 = initial_state(cfg, L.dim, energies)
    dt = cfg.evolve.dt or default_dt(rates.transitions.frequencies)
    traj = evolve(L, rho0, cfg.evolve.t_end, dt, samples=cfg.evolve.samples)
    levels = _levels(cfg)
    records = []
    for t, rho, lam in zip(traj.times, traj.states, traj.min_eigenvalues):
        rec: Record = {"t": float(t)}
        for k, lab in enumerate(levels):
            rec[f"p_{lab}"] = float(rho[k, k].real)
        for i, j in _pairs(levels):
            rec[f"rho_{levels[i]}_{levels[j]}_re"] = float(rho[i, j].real)
            rec[f"rho_{levels[i]}_{levels[j]}_im"] = float(rho[i, j].imag)
        rec["trace"] = float(np.trace(rho).real)
        rec["min_eigenvalue"] = float(lam)
        if isinstance(system, CoupledTLSModel):
            rec["J12"] = internal_flux(system, rho)
            rec["J12_commutator"] = internal_flux_commutator(system, rho)
            rec["J1B1"] = bath_flux(system, L, rho)
        records.append(rec)
    return records


# --- output ---------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_field(s: str) -> str:
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_records(records: Iterable[Record], columns: list[str], out: IO[str], fmt: str = "csv") -> int:
    """Stream records to ``out``, flushing after each; returns the record count."""
    n = 0
    if fmt == "csv":
        out.write(",".join(columns) + "\n")
        for rec in records:
            out.write(",".join(_csv_field(format_value(rec[c])) for c in columns) + "\n")
            out.flush()
            n += 1
    elif fmt == "json":
        out.write("[")
        for rec in records:
            out.write(("," if n else "") + "\n" + json.dumps({c: _json_value(rec[c]) for c in columns}))
            out.flush()
            n += 1
        out.write("\n]\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    out.flush()
    return n
