"""Stochastic metapopulation dynamics and their deterministic and Gaussian limits.

A patch-structured population is tracked by how many of its N patches
host each colony size.  This package simulates the finite-N jump process
exactly, integrates the mean-field limit on a truncated size range,
propagates the Gaussian fluctuation law around it, and ships a
diagnostics harness that confronts simulation with both limits at
desk scale.
"""

from .config import (ConfigError, ExponentConfig, LnaConfig, MeanFieldConfig,
                     ModelConfig, RunConfig, SimulationConfig)
from .diagnostics import (CltReport, ConvergenceStudy, ExponentReport,
                          MartingaleReport, MomentReport, clt_study,
                          exponent_calc, lln_study, martingale_study,
                          moment_study, round_density, sup_error)
from .lna import (FluctuationPath, NoiseModel, TruncatedGaussianSummary,
                  covariance_ode, euler_gaussian_path, lyapunov_residual,
                  noise_matrix, noise_model, simulate_Y,
                  stationary_covariance)
from .meanfield import (MeanFieldSolution, NumericalError, find_equilibrium,
                        integrate_meanfield, semigroup_apply)
from .model import (AssumptionReport, ModelSpec, TruncatedOperator,
                    WeightStructure, check_assumptions, df_matrix, drift_DF,
                    drift_F, drift_total, fluid_jumps, moment_S, mu_weights,
                    truncated_A, weighted_norm)
from .process import (EventBudgetError, enumerate_rates, martingale_path,
                      replica_seeds, run_replicas, simulate_ssa,
                      simulate_time_change)
from .state import (JumpVector, RateEntry, RateTable, SparseCounts, Trajectory,
                    as_density, unit_density)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "CltReport",
    "ConfigError",
    "ConvergenceStudy",
    "EventBudgetError",
    "ExponentConfig",
    "ExponentReport",
    "FluctuationPath",
    "JumpVector",
    "LnaConfig",
    "MartingaleReport",
    "MeanFieldConfig",
    "MeanFieldSolution",
    "ModelConfig",
    "ModelSpec",
    "MomentReport",
    "NoiseModel",
    "NumericalError",
    "RateEntry",
    "RateTable",
    "RunConfig",
    "SimulationConfig",
    "SparseCounts",
    "Trajectory",
    "TruncatedGaussianSummary",
    "TruncatedOperator",
    "WeightStructure",
    "as_density",
    "check_assumptions",
    "clt_study",
    "covariance_ode",
    "df_matrix",
    "drift_DF",
    "drift_F",
    "drift_total",
    "enumerate_rates",
    "euler_gaussian_path",
    "exponent_calc",
    "find_equilibrium",
    "fluid_jumps",
    "integrate_meanfield",
    "lln_study",
    "lyapunov_residual",
    "martingale_path",
    "martingale_study",
    "moment_S",
    "moment_study",
    "mu_weights",
    "noise_matrix",
    "noise_model",
    "replica_seeds",
    "round_density",
    "run_replicas",
    "semigroup_apply",
    "simulate_Y",
    "simulate_ssa",
    "simulate_time_change",
    "stationary_covariance",
    "sup_error",
    "truncated_A",
    "unit_density",
    "weighted_norm",
]
