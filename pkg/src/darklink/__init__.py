"""Simulator for a two-qutrit controlled-phase gate mediated by the
dark collective mode of two resonators coupled through a transmission
line.

The package builds the device Hamiltonians at several levels of
approximation (full interaction picture, resonant part with dispersive
corrections, reduced dark-mode models), propagates them unitarily or
through the Lindblad master equation, and reproduces the gate fidelity
curves, robustness scans, and coupling optimization as CSV artifacts
via the `darklink` command.
"""

from .analysis import (
    GateTiming,
    analytic_evolution,
    average_gate_fidelity,
    average_gate_fidelity_report,
    cphase_tomography,
    gate_timing,
    state_fidelity_mixed,
    state_fidelity_pure,
)
from .config import RunConfig, load_config, load_preset, resolve_config
from .dynamics import (
    QuantumState,
    Trajectory,
    default_timestep,
    expectation,
    propagate_lindblad,
    propagate_static,
    propagate_td,
)
from .errors import ConfigError, InvariantViolation
from .experiments import (
    ExperimentResult,
    optimal_coupling_sweep,
    run_fig3,
    run_fig7_panels,
    run_fig7a,
)
from .hilbert import CompositeSpace, ModeSpec, OperatorMatrix
from .kernels import get_backend
from .model import (
    DeviceParams,
    Hamiltonian,
    HamiltonianTerm,
    LindbladChannel,
    build_h2q,
    build_h2q_resonant,
    build_heff,
    build_heff_prime,
    build_lab_qubit_hamiltonian,
    build_lindblad_channels,
    build_unresonant_corrections,
    dark_mode_space,
    device_space,
)
from .normalmodes import (
    MODE_TRANSFORM,
    mode_populations,
    single_photon_spectrum,
    verify_h_double_prime,
)

__version__ = "0.1.0"

__all__ = [
    "CompositeSpace",
    "ConfigError",
    "DeviceParams",
    "ExperimentResult",
    "GateTiming",
    "Hamiltonian",
    "HamiltonianTerm",
    "InvariantViolation",
    "LindbladChannel",
    "MODE_TRANSFORM",
    "ModeSpec",
    "OperatorMatrix",
    "QuantumState",
    "RunConfig",
    "Trajectory",
    "analytic_evolution",
    "average_gate_fidelity",
    "average_gate_fidelity_report",
    "build_h2q",
    "build_h2q_resonant",
    "build_heff",
    "build_heff_prime",
    "build_lab_qubit_hamiltonian",
    "build_lindblad_channels",
    "build_unresonant_corrections",
    "cphase_tomography",
    "dark_mode_space",
    "default_timestep",
    "device_space",
    "expectation",
    "gate_timing",
    "get_backend",
    "load_config",
    "load_preset",
    "mode_populations",
    "optimal_coupling_sweep",
    "propagate_lindblad",
    "propagate_static",
    "propagate_td",
    "resolve_config",
    "run_fig3",
    "run_fig7_panels",
    "run_fig7a",
    "single_photon_spectrum",
    "state_fidelity_mixed",
    "state_fidelity_pure",
    "verify_h_double_prime",
]
