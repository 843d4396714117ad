"""Dark-state structure and photon polarization storage in degenerate Lambda atoms."""

from .angular import Polarization, polarization_from_cartesian, polarization_from_name, wigner3j
from .darkspace import DarkBrightDecomposition, dark_counts, decompose, static_structure
from .dynamics import PulseSchedule, adiabatic_propagator, compare_adiabatic, evolve, omega_profiles
from .memory import (
    AtomicDensityMatrix,
    PolarizationQubit,
    diagonal_bound,
    probability_matrix,
    retrieval_operator,
    scan_initial_states,
    storage_operator,
    storage_report,
)
from .system import LevelScheme, SystemConfig, interaction_operator, make_config

__all__ = [
    "AtomicDensityMatrix",
    "DarkBrightDecomposition",
    "LevelScheme",
    "Polarization",
    "PolarizationQubit",
    "PulseSchedule",
    "SystemConfig",
    "adiabatic_propagator",
    "compare_adiabatic",
    "dark_counts",
    "decompose",
    "diagonal_bound",
    "evolve",
    "interaction_operator",
    "make_config",
    "omega_profiles",
    "polarization_from_cartesian",
    "polarization_from_name",
    "probability_matrix",
    "retrieval_operator",
    "scan_initial_states",
    "static_structure",
    "storage_operator",
    "storage_report",
    "wigner3j",
]
