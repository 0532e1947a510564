"""Spectral Galerkin simulator for a viscoelastic Kirchhoff beam with
fading memory and internally delayed velocity feedback, plus the energy
and Lyapunov diagnostics that certify its exponential decay numerically."""

from .basis import ModeSet, build_modeset, solve_characteristic_roots
from .config import (RunConfig, SweepConfig, default_run_config,
                     load_run_config, load_sweep_config)
from .delayline import CoverageError, HistoryBuffer
from .diagnostics import (DecayFit, EnergyBreakdown, EnergyObserver,
                          dissipation_bound_check, energy,
                          energy_identity_residual, equivalence_bounds,
                          fit_decay, lyapunov_F, lyapunov_phi, lyapunov_psi,
                          lyapunov_upsilon, memory_identity_check)
from .model import (FeedbackSpec, KernelSpec, KirchhoffSpec, ProblemSpec,
                    ValidationReport, legendre_inequality_check,
                    theta_constants, validate_assumptions, xi_window)
from .solver import (GalerkinSolver, SolverState, Trajectory, effective_mass,
                     initial_state, memory_term, run)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
