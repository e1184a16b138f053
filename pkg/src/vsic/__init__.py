"""Fine-structure and optical-polarization toolkit for silicon-vacancy spin-3/2 centers in SiC."""
__version__ = "0.1.0"

from .eigen import BACKEND, eigh
from .hamiltonian import (CenterParams, MagneticField, StrainTensor, build_hamiltonian,
                          find_level_anticrossings, load_params, solve, sweep_parameter)
from .effective import effective_a2_params, effective_e_params, validate_against_exact
from .optics import (classify_regime, thermal_cos2theta, theta_map, tilt_angle_exact,
                     tilt_angle_perturbative)
from .fitting import FitResult, fit_curve
from .models import (delta_a_from_two_temperatures, fit_angular, fit_arrhenius, fit_odmr,
                     fit_rabi)

__all__ = [
    "BACKEND", "eigh", "CenterParams", "MagneticField", "StrainTensor", "build_hamiltonian",
    "find_level_anticrossings", "load_params", "solve", "sweep_parameter",
    "effective_a2_params", "effective_e_params", "validate_against_exact",
    "classify_regime", "thermal_cos2theta", "theta_map", "tilt_angle_exact",
    "tilt_angle_perturbative", "FitResult", "fit_curve", "delta_a_from_two_temperatures",
    "fit_angular", "fit_arrhenius", "fit_odmr", "fit_rabi",
]
