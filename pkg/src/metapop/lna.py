"""Gaussian fluctuation limit around the mean-field path.

The fluctuation process solves a linear SDE whose drift matrix is the
truncated linear part plus the drift Jacobian along the mean-field path,
and whose noise has infinitesimal covariance sigma2(x_t), the rate-weighted
sum of outer products of the active jump vectors.  Paths are simulated by
Euler-Maruyama with the noise synthesized in the jump basis (no matrix
square roots); second moments come from the matrix Riccati-free Lyapunov
ODE, and the equilibrium specialization yields the stationary
Ornstein-Uhlenbeck covariance by long-time integration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .meanfield import MeanFieldSolution, NumericalError
from .model import (ModelSpec, TruncatedOperator, df_apply, df_matrix,
                    fluid_jumps)

__all__ = [
    "NoiseModel",
    "TruncatedGaussianSummary",
    "FluctuationPath",
    "noise_model",
    "noise_matrix",
    "simulate_Y",
    "euler_gaussian_path",
    "covariance_ode",
    "stationary_covariance",
    "lyapunov_residual",
]


@dataclass
class NoiseModel:
    """Infinitesimal noise covariance at one state, with its jump basis."""

    sigma2: np.ndarray
    jump_basis: list[tuple[np.ndarray, float]] = field(repr=False)


@dataclass
class TruncatedGaussianSummary:
    """Mean and covariance path of the Gaussian limit on {0..M}."""

    times: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    M: int
    tol: float

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(mean, covariance) at time t, linearly interpolated."""
        ts = self.times
        if t <= ts[0]:
            return self.mean[0].copy(), self.cov[0].copy()
        if t >= ts[-1]:
            return self.mean[-1].copy(), self.cov[-1].copy()
        k = int(np.searchsorted(ts, t, side="right") - 1)
        lam = (t - ts[k]) / (ts[k + 1] - ts[k])
        mean = (1.0 - lam) * self.mean[k] + lam * self.mean[k + 1]
        cov = (1.0 - lam) * self.cov[k] + lam * self.cov[k + 1]
        return mean, cov


@dataclass
class FluctuationPath:
    """One Euler-Maruyama path of the fluctuation SDE."""

    times: np.ndarray
    values: np.ndarray
    dt: float
    seed: int


def noise_model(model: ModelSpec, x, M: int | None = None) -> NoiseModel:
    """Noise covariance at density x by explicit enumeration of jumps.

    Jumps reaching outside {0..M} are dropped, matching the absorbing
    truncation of the mean-field flow.
    """
    arr = np.asarray(x, dtype=float)
    if M is None:
        M = arr.size - 1
    width = M + 1
    padded = np.zeros(width)
    padded[: min(arr.size, width)] = arr[:width]
    sigma2 = np.zeros((width, width))
    basis: list[tuple[np.ndarray, float]] = []
    for jump, rate, _fam, _i, _k in fluid_jumps(model, padded):
        if rate <= 0.0 or jump.entries[-1][0] > M:
            continue
        dense = jump.to_dense(width).astype(float)
        sigma2 += rate * np.outer(dense, dense)
        basis.append((dense, rate))
    return NoiseModel(sigma2=sigma2, jump_basis=basis)


def noise_matrix(model: ModelSpec, x, M: int | None = None) -> np.ndarray:
    """sigma2(x): rate-weighted sum of outer products of active jumps."""
    return noise_model(model, x, M).sigma2


def _noise_fast(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    """sigma2(x) in O(M^2) via the family structure; equals noise_matrix.

    Nearest-neighbour families contribute tridiagonal blocks, catastrophe
    a cross on row/column 0, and the migration pair sum factorizes into
    separable source/destination parts plus a symmetric rank-2 cross term.
    """
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    M = x.size - 1
    S = np.zeros((M + 1, M + 1))
    sizes = np.arange(M + 1, dtype=float)
    bi = model.birth_rates(M + 1)
    di = model.death_rates(M + 1)

    def add_edge(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> None:
        # jump e^(a) - e^(b) at rate w
        np.add.at(S, (a, a), w)
        np.add.at(S, (b, b), w)
        np.add.at(S, (a, b), -w)
        np.add.at(S, (b, a), -w)

    i = np.arange(1, M + 1)
    down = i * x[1:] * (di[1:] + model.migration_loss)
    down[0] = x[1] * (di[1] + model.migration_loss + model.kappa)
    add_edge(i - 1, i, down)
    if M >= 2:
        iu = np.arange(1, M)
        add_edge(iu + 1, iu, iu * x[1:M] * bi[1:M])
        ic = np.arange(2, M + 1)
        add_edge(np.zeros_like(ic), ic, model.kappa * x[2:])
    mig = model.migration_rate
    if mig > 0.0:
        ssum = float(sizes @ x)
        s0 = float(x[:M].sum())
        k = np.arange(M)
        add_edge(k + 1, k, mig * x[:M] * ssum)
        add_edge(i - 1, i, mig * i * x[1:] * s0)
        p = np.zeros(M + 1)
        p[:M] += sizes[1:] * x[1:]
        p[1:] -= sizes[1:] * x[1:]
        q = np.zeros(M + 1)
        q[1:] += x[:M]
        q[:M] -= x[:M]
        S += mig * (np.outer(p, q) + np.outer(q, p))
    return S


def _apply_B(model: ModelSpec, op: TruncatedOperator, x: np.ndarray,
             V: np.ndarray) -> np.ndarray:
    """(A + DF(x)) @ V without forming the dense matrix."""
    return op.apply(V) + df_apply(model, x, V)


def _stiff_dt(model: ModelSpec, M: int) -> float:
    bi = model.birth_rates(M + 1)
    di = model.death_rates(M + 1)
    j = np.arange(M + 1, dtype=float)
    diag = model.kappa + j * (bi + di + model.gamma)
    peak = float(diag.max())
    # all rates zero: the dynamics are frozen and any step size is exact
    return 0.1 / peak if peak > 0.0 else 0.1


def simulate_Y(model: ModelSpec, meanfield: MeanFieldSolution, Y0,
               horizon: float, dt: float | None = None,
               seed: int = 0, grid=None) -> FluctuationPath:
    """Euler-Maruyama path of the fluctuation SDE, deterministic per seed.

    Each step draws one standard normal per active jump direction and adds
    jump * sqrt(rate * dt) * normal, so one-step increments have covariance
    sigma2(x_t) dt exactly in expectation.  Nearest-neighbour and
    catastrophe draws are applied family-wise; migration draws fill an
    (M, M) array whose row/column sums scatter onto the four affected
    entries, which reproduces the jump-basis sum without Python loops.
    """
    M = meanfield.M
    op = TruncatedOperator(model, M)
    if dt is None:
        dt = _stiff_dt(model, M)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if grid is None:
        grid = np.linspace(0.0, horizon, 201)
    grid = np.asarray(grid, dtype=float)
    y = np.zeros(M + 1)
    y0 = np.asarray(Y0, dtype=float)
    y[: y0.size] = y0
    rng = np.random.default_rng(seed)
    bi = model.birth_rates(M + 1)
    di = model.death_rates(M + 1)
    mig = model.migration_rate
    sizes = np.arange(M + 1, dtype=float)

    out = np.empty((grid.size, M + 1))
    out[0] = y
    t = grid[0]
    for gi in range(1, grid.size):
        span = grid[gi] - t
        n_sub = max(1, int(np.ceil(span / dt)))
        h = span / n_sub
        for _ in range(n_sub):
            x = np.maximum(meanfield.at(t), 0.0)
            drift = _apply_B(model, op, x, y)
            w = np.zeros(M + 1)
            root_h = np.sqrt(h)
            down = sizes[1:] * x[1:] * (di[1:] + model.migration_loss)
            down[0] = x[1] * (di[1] + model.migration_loss + model.kappa)
            c = np.sqrt(down * h) * rng.standard_normal(M)
            w[:M] += c
            w[1:] -= c
            if M >= 2:
                up = sizes[1:M] * x[1:M] * bi[1:M]
                c = np.sqrt(up * h) * rng.standard_normal(M - 1)
                w[2:] += c
                w[1:M] -= c
                cat = model.kappa * x[2:]
                c = np.sqrt(cat * h) * rng.standard_normal(M - 1)
                w[0] += c.sum()
                w[2:] -= c
            if mig > 0.0:
                rates = mig * np.outer(sizes[1:] * x[1:], x[:M])
                c = np.sqrt(rates) * root_h * rng.standard_normal((M, M))
                col = c.sum(axis=0)
                row = c.sum(axis=1)
                w[1:] += col
                w[:M] -= col
                w[:M] += row
                w[1:] -= row
            y = y + h * drift + w
            t += h
            if not np.all(np.isfinite(y)) or np.abs(y).max() > 1e12:
                raise NumericalError(
                    f"fluctuation path blew up near t={t:.4g}; "
                    f"reduce dt (currently {dt:.3g})")
        t = grid[gi]
        out[gi] = y
    return FluctuationPath(times=grid, values=out, dt=dt, seed=seed)


def euler_gaussian_path(drift_matrix, jumps, y0, horizon: float,
                        dt: float, seed: int = 0,
                        grid: np.ndarray | None = None) -> FluctuationPath:
    """Euler-Maruyama path of a generic linear diffusion with jump-basis noise.

    ``drift_matrix`` is a constant ``(w, w)`` array or a callable ``t -> array``;
    ``jumps`` is a list of ``(direction, rate)`` pairs (rate constant or
    callable of ``t``) so the diffusion matrix is ``sum rate * outer(J, J)``.
    ``y0`` may be a single state ``(w,)`` or a batch ``(n, w)`` of independent
    paths sharing the same coefficients.  Same stepping convention as
    :func:`simulate_Y`: each grid span is split into equal substeps of at most
    ``dt``, and each jump direction receives an independent centred normal
    with variance ``rate * h`` per substep.
    """
    y0 = np.asarray(y0, dtype=float)
    batched = y0.ndim == 2
    paths = np.atleast_2d(y0).copy()
    n, width = paths.shape
    if grid is None:
        grid = np.linspace(0.0, horizon, 201)
    grid = np.asarray(grid, dtype=float)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    B_of = drift_matrix if callable(drift_matrix) else (lambda t: drift_matrix)
    dirs = np.array([np.asarray(J, dtype=float) for J, _ in jumps])
    dirs = dirs.reshape(len(jumps), width) if len(jumps) else dirs
    rng = np.random.default_rng(seed)
    out = np.empty((len(grid), n, width))
    out[0] = paths
    t = grid[0]
    for gi in range(1, len(grid)):
        span = grid[gi] - t
        n_sub = max(1, int(np.ceil(span / dt)))
        h = span / n_sub
        root_h = np.sqrt(h)
        for _ in range(n_sub):
            B = np.asarray(B_of(t), dtype=float)
            w = np.zeros_like(paths)
            for k, (_, rate) in enumerate(jumps):
                r = float(rate(t)) if callable(rate) else float(rate)
                if r > 0.0:
                    xi = rng.standard_normal(n)
                    w += np.sqrt(r) * root_h * np.outer(xi, dirs[k])
            paths = paths + h * (paths @ B.T) + w
            t += h
            if not np.all(np.isfinite(paths)) or np.abs(paths).max() > 1e12:
                raise NumericalError(
                    f"fluctuation path blew up near t={t:.4g}; "
                    f"reduce dt (currently {dt:.3g})")
        t = grid[gi]
        out[gi] = paths
    values = out if batched else out[:, 0, :]
    return FluctuationPath(times=grid, values=values, dt=dt, seed=seed)


def covariance_ode(model: ModelSpec, meanfield: MeanFieldSolution,
                   Sigma0=None, horizon: float | None = None,
                   tol: float = 1e-8, Y0=None,
                   grid=None) -> TruncatedGaussianSummary:
    """Propagate mean and covariance of the Gaussian limit.

    Solves dm/dt = B(t) m and dS/dt = B(t) S + S B(t)^T + sigma2(x_t) with
    B(t) = A + DF(x_t) applied in structured form (never densified); the
    right-hand side symmetrizes its input so roundoff asymmetry cannot
    grow.
    """
    from scipy.integrate import solve_ivp

    M = meanfield.M
    n = M + 1
    if horizon is None:
        horizon = float(meanfield.times[-1])
    if grid is None:
        grid = np.linspace(0.0, horizon, 201)
    grid = np.asarray(grid, dtype=float)
    if Sigma0 is None:
        Sigma0 = np.zeros((n, n))
    Sigma0 = np.asarray(Sigma0, dtype=float)
    if Sigma0.shape != (n, n):
        raise ValueError(f"Sigma0 must be {(n, n)}, got {Sigma0.shape}")
    if not np.allclose(Sigma0, Sigma0.T, atol=1e-12):
        raise ValueError("Sigma0 must be symmetric")
    m0 = np.zeros(n)
    if Y0 is not None:
        y0 = np.asarray(Y0, dtype=float)
        m0[: y0.size] = y0
    op = TruncatedOperator(model, M)

    def rhs(t, z):
        x = meanfield.at(t)
        m = z[:n]
        S = z[n:].reshape(n, n)
        S = 0.5 * (S + S.T)
        P = _apply_B(model, op, x, S)
        dS = P + P.T + _noise_fast(model, x)
        return np.concatenate([_apply_B(model, op, x, m), dS.ravel()])

    z0 = np.concatenate([m0, Sigma0.ravel()])
    if horizon == 0.0 or grid.size == 1:
        means = np.repeat(m0[None, :], grid.size, axis=0)
        covs = np.repeat(Sigma0[None, :, :], grid.size, axis=0)
        return TruncatedGaussianSummary(grid, means, covs, M, tol)
    sol = solve_ivp(rhs, (grid[0], grid[-1]), z0, method="RK45",
                    t_eval=grid, rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise NumericalError(f"covariance integration failed: {sol.message}")
    means = sol.y[:n].T.copy()
    covs = sol.y[n:].T.reshape(-1, n, n)
    covs = 0.5 * (covs + np.transpose(covs, (0, 2, 1)))
    return TruncatedGaussianSummary(times=sol.t, mean=means, cov=covs,
                                    M=M, tol=tol)


def _constant_meanfield(x: np.ndarray, horizon: float) -> MeanFieldSolution:
    vals = np.repeat(np.asarray(x, dtype=float)[None, :], 2, axis=0)
    return MeanFieldSolution(times=np.array([0.0, horizon]), values=vals,
                             M=x.size - 1, rtol=0.0, atol=0.0,
                             initial_mass=float(np.sum(x)))


def lyapunov_residual(model: ModelSpec, x_bar: np.ndarray,
                      Sigma: np.ndarray) -> float:
    """max-norm of B Sigma + Sigma B^T + sigma2(x_bar)."""
    op = TruncatedOperator(model, x_bar.size - 1)
    P = _apply_B(model, op, x_bar, Sigma)
    return float(np.abs(P + P.T + _noise_fast(model, x_bar)).max())


def stationary_covariance(model: ModelSpec, x_bar, M: int | None = None,
                          tol: float = 1e-8, chunk: float = 10.0,
                          max_time: float = 2000.0) -> np.ndarray:
    """Stationary covariance at an equilibrium, by long-time integration.

    Requires the drift matrix B = A + DF(x_bar) to have negative spectral
    abscissa (checked up front); integrates the covariance ODE with frozen
    coefficients in chunks until the Lyapunov residual drops below tol.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    if M is None:
        M = x_bar.size - 1
    if x_bar.size != M + 1:
        padded = np.zeros(M + 1)
        padded[: min(x_bar.size, M + 1)] = x_bar[: M + 1]
        x_bar = padded
    op = TruncatedOperator(model, M)
    B = op.dense() + df_matrix(model, x_bar)
    abscissa = float(np.max(np.linalg.eigvals(B).real))
    if abscissa >= 0.0:
        raise NumericalError(
            f"drift matrix is not stable (spectral abscissa {abscissa:.3e}); "
            "no stationary law")
    mf = _constant_meanfield(x_bar, chunk)
    Sigma = np.zeros((M + 1, M + 1))
    t_done = 0.0
    residual = lyapunov_residual(model, x_bar, Sigma)
    while residual > tol:
        if t_done >= max_time:
            raise NumericalError(
                f"stationary covariance did not converge by t={max_time:g} "
                f"(residual {residual:.3e})")
        summary = covariance_ode(model, mf, Sigma0=Sigma, horizon=chunk,
                                 tol=min(tol, 1e-8) * 1e-2,
                                 grid=np.array([0.0, chunk]))
        Sigma = summary.cov[-1]
        t_done += chunk
        residual = lyapunov_residual(model, x_bar, Sigma)
    return 0.5 * (Sigma + Sigma.T)
