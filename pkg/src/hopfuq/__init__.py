"""Uncertainty propagation through delayed Hopf bifurcations in fast-slow systems."""

__version__ = "0.1.0"

from .buffer import BufferReport, CriticalPoint, SearchBox, buffer_time, find_critical_points
from .ensemble import (EnsembleResult, IntegratorConfig, TrajectoryRecord, TubeSpec, empirical_stats,
                       integrate_one, ks_distance, noise_floor, run_ensemble)
from .exceptions import DomainError, DomainExhausted, IntegrationError, QuadratureError
from .measures import (Empirical, MixtureOutput, MomentVector, ShiftedExponential, Uniform, incomplete_gamma_upper,
                       moment_vector, moments_published_exp, moments_published_uniform, moments_pushforward,
                       pushforward_singular)
from .model import (AssumptionReport, FastSlowSystem, ModifiedExp, NormalForm, PhaseBox, PolynomialReal,
                    check_assumptions, eigenvalues_at, eval_fast)
from .phase import BufferEscape, ComplexPhase, Jump, complex_phase, entry_exit, entry_for_exit, exit_map, relief
from .series import (CompositionMatrix, FeasibilityVerdict, SeriesMap, build_matrix, nullspace_truncated,
                     power_coeffs, shift_obstruction)
