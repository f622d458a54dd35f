"""Experiment harness confronting simulation with the limit objects.

Studies live here: law-of-large-numbers error scaling against the
mean-field path, central-limit checks of the rescaled fluctuations
against the Lyapunov-ODE covariance, martingale mean-zero tests, moment
boundedness across system sizes, and the exact exponent arithmetic of
the coupling-rate calculus.  Every study is reproducible from (config,
master seed); replica fan-out keeps a deterministic reduction order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import numpy as np
from scipy import stats

from .lna import covariance_ode
from .meanfield import MeanFieldSolution, integrate_meanfield
from .model import ModelSpec, moment_S
from .process import martingale_path, replica_seeds, run_replicas, simulate_ssa
from .state import SparseCounts, Trajectory, as_density

__all__ = [
    "ConvergenceStudy",
    "ExponentReport",
    "CltReport",
    "MomentReport",
    "MartingaleReport",
    "round_density",
    "sup_error",
    "lln_study",
    "clt_study",
    "moment_study",
    "martingale_study",
    "exponent_calc",
]


# --------------------------------------------------------------------------
# report types


@dataclass
class ConvergenceStudy:
    """Sup-norm errors against the mean-field path over a ladder of sizes."""

    N_grid: np.ndarray
    replicas: int
    errors: np.ndarray
    slope: float
    slope_se: float
    times: np.ndarray
    M: int
    seed: int

    def __post_init__(self) -> None:
        self.N_grid = np.asarray(self.N_grid, dtype=np.int64)
        if self.N_grid.size < 3:
            raise ValueError("need at least three system sizes")
        if np.any(np.diff(self.N_grid) <= 0):
            raise ValueError("system sizes must be increasing")
        if self.N_grid[-1] < 10 * self.N_grid[0]:
            raise ValueError("system sizes must span at least one decade")
        if np.any(self.errors < 0.0):
            raise ValueError("errors must be nonnegative")

    @property
    def mean_errors(self) -> np.ndarray:
        return self.errors.mean(axis=1)


@dataclass
class ExponentReport:
    """Exact Gaussian-coupling exponents for one (betas, r0, zeta) triple."""

    betas: tuple
    r0: object
    zeta: object
    b1: float
    b2: float
    feasible: bool
    threshold: float


@dataclass
class CltReport:
    """Rescaled fluctuations at the horizon versus the Gaussian limit."""

    N: int
    replicas: int
    horizon: float
    M: int
    mean: np.ndarray
    se: np.ndarray
    cov_emp: np.ndarray
    cov_theory: np.ndarray
    ks_stat: float
    ks_pvalue: float
    functional: np.ndarray
    functional_variance: float
    functional_values: np.ndarray
    excluded_mass: float
    seed: int


@dataclass
class MomentReport:
    """Quantiles of sup_t S_r across replicas, grouped by system size."""

    r: float
    quantile: float
    N_grid: np.ndarray
    quantiles: np.ndarray
    sup_values: dict = field(repr=False)

    @property
    def spread(self) -> float:
        """Relative spread of the upper quantile across system sizes."""
        return float(self.quantiles.max() / self.quantiles.min() - 1.0)


@dataclass
class MartingaleReport:
    """Mean and standard error of the compensated path at the horizon."""

    mean: np.ndarray
    se: np.ndarray
    replicas: int
    N: int
    horizon: float
    seed: int

    @property
    def flagged(self) -> np.ndarray:
        """Components whose mean exceeds three standard errors."""
        return np.abs(self.mean) > 3.0 * self.se

    @property
    def passed(self) -> bool:
        return not bool(self.flagged.any())


# --------------------------------------------------------------------------
# helpers


def round_density(N: int, x0) -> SparseCounts:
    """Patch counts X0 with sum N by largest-remainder rounding of N*x0.

    Deterministic, and off from N*x0 by less than one patch per type, so
    the initial density error is O(support/N).
    """
    dens = as_density(x0)
    if dens.sum() <= 0.0:
        raise ValueError("initial density must have positive mass")
    dens = dens / dens.sum()
    target = N * dens
    base = np.floor(target).astype(np.int64)
    short = int(N - base.sum())
    if short:
        order = np.argsort(-(target - base), kind="stable")
        base[order[:short]] += 1
    return SparseCounts.from_dense(base)


def _traj_on_grid(traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    """Counts at grid times, piecewise constant between recorded points."""
    idx = np.searchsorted(traj.times, grid, side="right") - 1
    if idx.min() < 0:
        raise ValueError("grid starts before the trajectory does")
    return traj.counts[idx]


def sup_error(traj: Trajectory, mf: MeanFieldSolution, grid=None) -> float:
    """sup over grid times of the weighted norm of (x^N_t - x_t).

    Mean-field components above the trajectory's support (and trajectory
    mass above the truncation) both enter at their weighted value.
    """
    if grid is None:
        grid = mf.times
    grid = np.asarray(grid, dtype=float)
    horizon = min(traj.t_end, mf.times[-1])
    if grid[-1] > horizon * (1.0 + 1e-12) + 1e-12:
        raise ValueError(
            f"grid reaches t={grid[-1]:g} but both objects cover only "
            f"t={horizon:g}")
    counts = _traj_on_grid(traj, grid)
    width = max(counts.shape[1], mf.values.shape[1])
    w = np.arange(width, dtype=float) + 1.0
    diff = np.zeros((grid.size, width))
    diff[:, : counts.shape[1]] = counts / traj.scale
    mf_vals = np.array([mf.at(t) for t in grid])
    diff[:, : mf_vals.shape[1]] -= mf_vals
    return float((np.abs(diff) @ w).max())


def _simulate_grid_worker(payload, _replica, seed):
    model, counts, scale, horizon, grid = payload
    return simulate_ssa(model, SparseCounts.from_dense(counts), scale=scale,
                        horizon=horizon, seed=seed, record="grid", grid=grid)


def _simulate_jumps_worker(payload, _replica, seed):
    model, counts, scale, horizon = payload
    traj = simulate_ssa(model, SparseCounts.from_dense(counts), scale=scale,
                        horizon=horizon, seed=seed, record="jumps")
    return martingale_path(traj, model)[-1]


# --------------------------------------------------------------------------
# studies


def lln_study(model: ModelSpec, x0, horizon: float, N_grid, replicas: int,
              seed: int, M: int = 64, grid_points: int = 201,
              tol: float = 1e-10, workers: int = 1) -> ConvergenceStudy:
    """Mean sup-norm error against the mean-field path, per system size.

    Fits the log-log slope of the replica-averaged error; the theoretical
    decay is N^(-1/2) up to a slowly varying factor.
    """
    N_grid = np.asarray(sorted(int(n) for n in N_grid), dtype=np.int64)
    grid = np.linspace(0.0, horizon, grid_points)
    mf = integrate_meanfield(model, x0, horizon, M=M, tol=tol, grid=grid)
    errors = np.zeros((N_grid.size, replicas))
    for row, N in enumerate(N_grid):
        x0N = round_density(int(N), x0)
        payload = (model, x0N.to_dense(), float(N), horizon, grid)
        trajs = run_replicas(partial(_simulate_grid_worker, payload),
                             master_seed=seed + 7919 * row, n=replicas,
                             workers=workers)
        for col, traj in enumerate(trajs):
            errors[row, col] = sup_error(traj, mf, grid)
    means = errors.mean(axis=1)
    if np.any(means == 0.0):
        flat = N_grid[means == 0.0]
        raise ValueError(
            f"replica-averaged error is exactly zero at N={flat.tolist()}; "
            "a log-log slope is undefined (start from a density that does "
            "not round exactly)")
    mean_log = np.log(means)
    coeffs, cov = np.polyfit(np.log(N_grid.astype(float)), mean_log, 1,
                             cov=True)
    return ConvergenceStudy(N_grid=N_grid, replicas=replicas, errors=errors,
                            slope=float(coeffs[0]),
                            slope_se=float(np.sqrt(cov[0, 0])),
                            times=grid, M=M, seed=seed)


def clt_study(model: ModelSpec, x0, horizon: float, N: int, replicas: int,
              seed: int, M: int = 64, grid_points: int = 201,
              tol: float = 1e-10, cov_tol: float = 1e-8,
              functional_top: int = 5, workers: int = 1) -> CltReport:
    """Rescaled fluctuations sqrt(N)(x^N_T - x_T) against the Gaussian law.

    Compares componentwise means to zero, the empirical covariance to the
    Lyapunov-ODE covariance, and one weighted linear functional to its
    predicted normal distribution via a Kolmogorov-Smirnov test.
    Trajectory mass above the truncation is excluded from the comparison
    and reported as excluded_mass (the largest such density seen).
    """
    grid = np.linspace(0.0, horizon, grid_points)
    mf = integrate_meanfield(model, x0, horizon, M=M, tol=tol, grid=grid)
    summary = covariance_ode(model, mf, horizon=horizon, tol=cov_tol,
                             grid=grid)
    cov_theory = summary.cov[-1]
    x_T = mf.final

    x0N = round_density(N, x0)
    payload = (model, x0N.to_dense(), float(N), horizon,
               np.array([0.0, horizon]))
    trajs = run_replicas(partial(_simulate_grid_worker, payload),
                         master_seed=seed, n=replicas, workers=workers)
    U = np.zeros((replicas, M + 1))
    excluded = 0.0
    root_N = np.sqrt(float(N))
    for row, traj in enumerate(trajs):
        dens = traj.counts[-1] / traj.scale
        w = min(dens.size, M + 1)
        U[row, :w] = dens[:w]
        if dens.size > M + 1:
            excluded = max(excluded, float(dens[M + 1:].sum()))
        U[row] -= x_T[: M + 1]
        U[row] *= root_N
    mean = U.mean(axis=0)
    se = U.std(axis=0, ddof=1) / np.sqrt(replicas)
    cov_emp = np.cov(U.T, ddof=1)

    ell = np.zeros(M + 1)
    top = min(functional_top, M)
    ell[: top + 1] = np.arange(top + 1, dtype=float) + 1.0
    var_theory = float(ell @ cov_theory @ ell)
    vals = U @ ell
    if var_theory > 0.0:
        ks = stats.kstest(vals, "norm", args=(0.0, np.sqrt(var_theory)))
        ks_stat, ks_pvalue = float(ks.statistic), float(ks.pvalue)
    else:
        # Degenerate limit (no noise): the comparison law is a point mass,
        # so a KS statistic against a normal is undefined.
        ks_stat, ks_pvalue = float("nan"), float("nan")
    return CltReport(N=N, replicas=replicas, horizon=horizon, M=M, mean=mean,
                     se=se, cov_emp=cov_emp, cov_theory=cov_theory,
                     ks_stat=ks_stat, ks_pvalue=ks_pvalue,
                     functional=ell, functional_variance=var_theory,
                     functional_values=vals, excluded_mass=excluded,
                     seed=seed)


def moment_study(trajectories, r: float = 2.0,
                 quantile: float = 0.99) -> MomentReport:
    """Upper quantile of sup_t S_r(x_t^N), grouped by the trajectory scale.

    A bounded, N-independent quantile is the observable content of the
    moment-propagation bound.
    """
    groups: dict[int, list[float]] = {}
    for traj in trajectories:
        sup = max(moment_S(row / traj.scale, r) for row in traj.counts)
        groups.setdefault(int(traj.scale), []).append(float(sup))
    if not groups:
        raise ValueError("no trajectories given")
    N_grid = np.array(sorted(groups), dtype=np.int64)
    qs = np.array([np.quantile(groups[int(N)], quantile) for N in N_grid])
    return MomentReport(r=r, quantile=quantile, N_grid=N_grid, quantiles=qs,
                        sup_values={n: np.array(v) for n, v in groups.items()})


def martingale_study(model: ModelSpec, x0, N: int, horizon: float,
                     replicas: int, seed: int,
                     workers: int = 1) -> MartingaleReport:
    """Empirical mean of the compensated path at the horizon, with s.e.

    The compensator uses the finite-N drift, so the path is an exact
    martingale and the mean should vanish within Monte-Carlo error.
    """
    x0N = round_density(N, x0)
    payload = (model, x0N.to_dense(), float(N), horizon)
    finals = run_replicas(partial(_simulate_jumps_worker, payload),
                          master_seed=seed, n=replicas, workers=workers)
    width = max(v.size for v in finals)
    m = np.zeros((replicas, width))
    for row, v in enumerate(finals):
        m[row, : v.size] = v
    mean = m.mean(axis=0)
    se = m.std(axis=0, ddof=1) / np.sqrt(replicas)
    return MartingaleReport(mean=mean, se=se, replicas=replicas, N=N,
                            horizon=horizon, seed=seed)


# --------------------------------------------------------------------------
# exponent arithmetic


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v))


def exponent_calc(betas, r0, zeta) -> ExponentReport:
    """Gaussian-coupling exponents b1, b2 and the feasibility window.

    Pure rational arithmetic: pass ints or Fractions to make the reported
    values exact.  betas is the five-tuple (beta1..beta5) of growth
    exponents; only beta2..beta5 enter the formulas.  The window requires
    1/r0 < zeta < 1/(4(beta2+beta3+beta4) + 2*beta5), whose right edge
    defines the moment threshold on r0.
    """
    bs = [_as_fraction(b) for b in betas]
    if len(bs) != 5:
        raise ValueError("betas must have five entries")
    _, b2_, b3_, b4_, b5_ = bs
    r0_f = _as_fraction(r0)
    zeta_f = _as_fraction(zeta)
    if r0_f <= 0 or zeta_f <= 0:
        raise ValueError("r0 and zeta must be positive")
    threshold = 4 * (b2_ + b3_ + b4_) + 2 * b5_
    feasible = (zeta_f > 1 / r0_f) and (threshold > 0) and \
        (zeta_f < 1 / threshold)
    b1 = min(Fraction(1, 4) - zeta_f * (b2_ + b3_ + b4_ + b5_ / 2),
             zeta_f * (r0_f - b2_ - 2 * (b3_ + b4_)) / 2)
    b2 = min(zeta_f * r0_f - 1, Fraction(1))
    return ExponentReport(betas=tuple(bs), r0=r0, zeta=zeta,
                          b1=float(b1), b2=float(b2),
                          feasible=bool(feasible),
                          threshold=float(threshold))
