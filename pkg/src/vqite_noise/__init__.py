"""Noisy variational imaginary-time evolution of transverse-field Ising chains.

Statevector simulation of McLachlan imaginary-time dynamics with finite-shot
measurement models, regularized solvers for the metric equations of motion,
and variance-driven allocation of the measurement budget.
"""

from .allocator import allocate_shots, compute_weights, raw_jacobian
from .ansatz import AnsatzSpec, build_default_ansatz, initial_parameters, prepare_state
from .eom_exact import EomData, compute_eom
from .harness import RunConfig, load_config, run_ensemble, run_trajectory, sweep_r, sweep_shots, verify_structure
from .pauli_state import PauliString, StateVector
from .shot_model import ShotPlan, measure_eom
from .solver import RegularizationPolicy, StepControl, solve_thetadot
from .tfim import TfimParams, exact_ground_state

__version__ = "0.1.0"

__all__ = [
    "AnsatzSpec",
    "EomData",
    "PauliString",
    "RegularizationPolicy",
    "RunConfig",
    "ShotPlan",
    "StateVector",
    "StepControl",
    "TfimParams",
    "allocate_shots",
    "build_default_ansatz",
    "compute_eom",
    "compute_weights",
    "exact_ground_state",
    "initial_parameters",
    "load_config",
    "measure_eom",
    "prepare_state",
    "raw_jacobian",
    "run_ensemble",
    "run_trajectory",
    "solve_thetadot",
    "sweep_r",
    "sweep_shots",
    "verify_structure",
]
