"""Weighted stochastic particle-field engine for a 4-component invasion model."""

__version__ = "0.1.0"

from .model import (
    Discretization,
    DomainSpec,
    ModelParams,
    ParticleEnsemble,
    eta,
    rho,
    wrap_positions,
)
from .spectral import (
    Field,
    PropagationKernel,
    build_kernel_aliased,
    build_kernel_theoretical,
    dft_forward,
    dft_inverse,
    gaussian_lowpass,
    spectral_gradient,
)
from .pic import AssignmentOrder, assignment_weight, deposit, interpolate, interpolate_many, support_stencil
from .chem import ChemState, PositivityError, source_term, step_concentrations, update_v_implicit
from .particles import MassReport, RngStream, advance_particles, mass_report, residual_resample
from .simulator import (
    InitialData,
    RunConfig,
    RunResult,
    SimState,
    SimulationError,
    Snapshot,
    benchmark_2d,
    benchmark_3d,
    final_density,
    init_from_analytic,
    run,
    step,
    take_snapshot,
)
from .reference import CflError, MeshState, build_reference, reference_run, reference_step
from .diagnostics import (
    ErrorRecord,
    convergence_slope,
    downsample_fourier,
    grid_norm,
    mass_radius,
    relative_error,
)

__all__ = [name for name in dir() if not name.startswith("_")]
