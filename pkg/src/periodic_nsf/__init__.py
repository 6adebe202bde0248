"""Pseudo-spectral toolkit for the compressible Navier-Stokes-Fourier system on a periodic box."""
from .grid import Grid, dealias, forward_transform, inverse_transform, make_grid, set_threads
from .integrator import EtdStepper, Trajectory, etd_step, evolve, oracle_step_primitive
from .linear import (
    ModeSystem,
    RadialProfile,
    SpectralBounds,
    continuum_decay_probe,
    eigendecompose,
    high_freq_decay_probe,
    semigroup_apply,
    spectral_bounds_scan,
    symbol_matrix,
)
from .littlewood_paley import DyadicLadder, besov_norm, build_ladder, covering_ladder, dyadic_block, low_cutoff, sobolev_norm
from .model import ForceMode, ForceSpec, PhysicalParams, energy_functional, nonlinear_terms, pressure_constants, recover_primitive
from .periodic import cauchy_rate_report, linear_periodic_solution, poincare_iterate
from .stability import DecayExperiment, decay_experiment, fit_decay_exponent, make_perturbation, predicted_exponent

__version__ = "0.1.0"
