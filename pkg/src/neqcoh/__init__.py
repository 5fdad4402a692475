"""Steady-state coherence of three-level systems coupled to two thermal baths."""

from .dynamics import Trajectory, convergence_time, evolve
from .flux import CoupledTLSModel, bath_flux, build_coupled_tls, internal_flux
from .generator import Superoperator, apply, apply_matrix_free, build_nonsecular, build_secular
from .model import (BathSpec, Constant, Dimensional, Flat, InterferenceSpec, LogisticStep, Step,
                    SystemKind, Tabulated, build_system, transitions_of)
from .rates import DissipationRates, dissipation_rates, planck_occupation
from .steady import (SteadyState, build_bloch_lambda, build_bloch_vee, det_formula, steady_bloch,
                     steady_nullspace, zero_coherence_condition)

__version__ = "0.1.0"
