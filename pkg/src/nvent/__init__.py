"""Measurement-mediated entanglement of two spin qubits through an NV sensor.

Submodules
----------
core          spin operators, three-site systems, density-matrix checks
hamiltonians  lab-frame, secular, vibrating and flying Hamiltonians
dynamics      master-equation and Schrodinger integration, perturbative states
measurement   NV read-out, concurrence, entanglement of formation, closed forms
averaging     ensemble averages over vibration parameters
experiments   configs, sweeps, figure commands and the CLI
"""
from .core import (
    InvariantError,
    PhysicalConstants,
    SiteLabel,
    SpinSite,
    SpinSystem,
    check_density_matrix,
    embed,
    partial_trace_to_qubits,
    spin_operators,
)
from .hamiltonians import (
    FlightPath,
    Schedule,
    StaticGeometry,
    VibrationMode,
    ZZHamiltonian,
    alpha,
    static_full_hamiltonian,
    static_rwa_hamiltonian,
)
from .dynamics import DephasingSpec, EvolutionResult, evolve_coherent, evolve_master_equation
from .measurement import (
    concurrence,
    entanglement_of_formation,
    max_mean_ef,
    mean_ef,
    measure_nv_pm,
)
from .averaging import ParameterDistribution, VibratingScenario, average_state, max_mean_ef_averaged

__version__ = "0.1.0"
