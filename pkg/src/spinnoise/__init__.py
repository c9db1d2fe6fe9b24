"""Light-shift-split spin noise spectra of a spin-1 <-> spin-0 transition."""

from .detection import Observable, ellipticity_observable, faraday_observable, signal
from .hamiltonian import SimParams, build_hamiltonian, power_to_rabi
from .lightshift import (
    EigenFrequencies,
    LightShifts,
    exact_eigenfrequencies,
    magic_angle,
    perturbative_shifts,
    splitting_vs,
)
from .master import build_liouvillian, propagate, steady_state
from .noise import Spectrum, resolvent_spectrum, spectrum_peak_positions, stochastic_spectrum
from .operators import OperatorSet, basis_rotation_z_to_x, coupling_operator, spin1_matrices
from .specfit import FitResult, fit_dual_peak, fit_trend

__all__ = [
    "EigenFrequencies", "FitResult", "LightShifts", "Observable", "OperatorSet", "SimParams", "Spectrum",
    "basis_rotation_z_to_x", "build_hamiltonian", "build_liouvillian", "coupling_operator",
    "ellipticity_observable", "exact_eigenfrequencies", "faraday_observable", "fit_dual_peak", "fit_trend",
    "magic_angle", "perturbative_shifts", "power_to_rabi", "propagate", "resolvent_spectrum", "signal",
    "spectrum_peak_positions", "spin1_matrices", "splitting_vs", "steady_state", "stochastic_spectrum",
]
