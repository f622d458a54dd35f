"""Deterministic limit flow dx/dt = A x + F(x) on a finite truncation.

The truncation {0..M} is absorbing at the cap: flows that would leave it
(births out of size M, migration arrivals above M) are dropped, so total
mass can only decrease; the deficit is tracked and reported rather than
renormalized away.  The linear part's semigroup and the equilibrium
refinement live here too.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import (ModelSpec, TruncatedOperator, df_matrix, drift_F,
                    weighted_norm)
from .state import as_density

__all__ = [
    "NumericalError",
    "MeanFieldSolution",
    "integrate_meanfield",
    "semigroup_apply",
    "find_equilibrium",
]

MAX_TRUNCATION = 2000


class NumericalError(RuntimeError):
    """Integration or root finding failed to meet its tolerance."""


@dataclass
class MeanFieldSolution:
    """Mean-field densities on a time grid, with linear interpolation."""

    times: np.ndarray
    values: np.ndarray
    M: int
    rtol: float
    atol: float
    initial_mass: float

    def at(self, t: float) -> np.ndarray:
        """Density at time t, linearly interpolated between grid points."""
        ts = self.times
        if t <= ts[0]:
            return self.values[0].copy()
        if t >= ts[-1]:
            return self.values[-1].copy()
        k = int(np.searchsorted(ts, t, side="right") - 1)
        lam = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1.0 - lam) * self.values[k] + lam * self.values[k + 1]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def mass_deficit(self) -> np.ndarray:
        """Mass dropped over the cap up to each grid time."""
        return self.initial_mass - self.values.sum(axis=1)


def _check_truncation(model: ModelSpec, M: int, tol: float) -> None:
    if M < 1:
        raise ValueError("truncation level must be at least 1")
    if M > MAX_TRUNCATION:
        raise ValueError(
            f"truncation level {M} exceeds the explicit-integrator guard "
            f"({MAX_TRUNCATION}); the diagonal grows like M^2 for the "
            "logistic law")
    bi = model.birth_rates(M + 1)
    di = model.death_rates(M + 1)
    j = np.arange(M + 1, dtype=float)
    diag = model.kappa + j * (bi + di + model.gamma)
    if diag.max() > 5e4:
        warnings.warn(
            f"truncated system is stiff (|diag| up to {diag.max():.3g}); "
            "explicit stepping will take tiny steps", stacklevel=3)


def _rhs(model: ModelSpec, op: TruncatedOperator):
    def f(t, y):
        return op.apply(y) + drift_F(model, y)
    return f


def integrate_meanfield(model: ModelSpec, x0, horizon: float, M: int = 64,
                        tol: float = 1e-10, grid=None) -> MeanFieldSolution:
    """Integrate the limit flow from density x0 up to the horizon.

    x0 must be supported inside {0..M}.  The grid defaults to 201 evenly
    spaced points; an adaptive Runge-Kutta pair of order 5(4) does the
    stepping between them with relative control tol (absolute tol/100).
    """
    _check_truncation(model, M, tol)
    x0d = as_density(x0, width=M + 1)
    if x0d.size > M + 1:
        if np.any(x0d[M + 1:] != 0.0):
            raise ValueError("initial density supported above the truncation")
        x0d = x0d[: M + 1]
    if np.any(x0d < 0.0):
        raise ValueError("initial density has negative entries")
    if grid is None:
        grid = np.linspace(0.0, horizon, 201)
    grid = np.asarray(grid, dtype=float)
    rtol, atol = tol, tol * 1e-2
    op = TruncatedOperator(model, M)
    if horizon == 0.0 or grid.size == 1:
        vals = np.repeat(x0d[None, :], grid.size, axis=0)
        return MeanFieldSolution(grid, vals, M, rtol, atol, float(x0d.sum()))
    sol = solve_ivp(_rhs(model, op), (grid[0], grid[-1]), x0d, method="RK45",
                    t_eval=grid, rtol=rtol, atol=atol)
    if not sol.success:
        t_bad = sol.t[-1] if sol.t.size else grid[0]
        raise NumericalError(
            f"mean-field integration failed near t={t_bad:.6g}: {sol.message}")
    values = sol.y.T.copy()
    floor = values.min()
    if floor < -1e3 * atol:
        raise NumericalError(
            f"mean-field solution went negative ({floor:.3e}); "
            "tighten tol or raise the truncation level")
    return MeanFieldSolution(times=sol.t, values=values, M=M,
                             rtol=rtol, atol=atol, initial_mass=float(x0d.sum()))


def semigroup_apply(model: ModelSpec, v, t: float, M: int | None = None,
                    tol: float = 1e-10) -> np.ndarray:
    """Action R(t) v of the semigroup generated by the linear part A.

    v may be a vector or a matrix of stacked column vectors; the linear
    ODE dv/dt = A v is integrated on the truncation implied by its height
    (or M if given).  R(0) is the identity.
    """
    arr = np.asarray(v, dtype=float)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    if M is not None and M + 1 > arr.shape[0]:
        arr = np.vstack([arr, np.zeros((M + 1 - arr.shape[0], arr.shape[1]))])
    _check_truncation(model, arr.shape[0] - 1, tol)
    op = TruncatedOperator(model, arr.shape[0] - 1)
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    if t == 0.0:
        out = arr.copy()
    else:
        shape = arr.shape

        def f(_, y):
            return op.apply(y.reshape(shape)).ravel()

        sol = solve_ivp(f, (0.0, t), arr.ravel(), method="RK45",
                        rtol=tol, atol=tol * 1e-3)
        if not sol.success:
            raise NumericalError(f"semigroup integration failed: {sol.message}")
        out = sol.y[:, -1].reshape(shape)
    return out[:, 0] if squeeze else out


def find_equilibrium(model: ModelSpec, M: int = 100, tol: float = 1e-10,
                     x0=None, scan_time: float = 200.0,
                     max_newton: int = 60) -> np.ndarray:
    """Equilibrium of the truncated flow: long-time integration, then Newton.

    The Newton step solves the drift Jacobian A + DF under the constraint
    that the step carries zero total mass, keeping the iterate on the
    patch simplex; steps are halved until the weighted residual drops.
    Returns a density with unit mass whose weighted drift norm is at most
    tol.
    """
    _check_truncation(model, M, tol)
    if x0 is None:
        x0d = 0.5 ** np.arange(min(M, 24) + 1.0)
        x0d = np.concatenate([x0d, np.zeros(M - min(M, 24))])
        x0d /= x0d.sum()
    else:
        x0d = as_density(x0, width=M + 1)[: M + 1].astype(float)
        x0d = x0d / x0d.sum()
    op = TruncatedOperator(model, M)

    def residual_of(y: np.ndarray) -> float:
        return weighted_norm(op.apply(y) + drift_F(model, y))

    x = x0d
    chunk = max(scan_time / 8.0, 1.0)
    t_done = 0.0
    while t_done < scan_time and residual_of(x) > 1e-6:
        sol = solve_ivp(_rhs(model, op), (0.0, chunk), x, method="RK45",
                        rtol=1e-10, atol=1e-12)
        if not sol.success:
            raise NumericalError(f"equilibrium scan failed: {sol.message}")
        x = sol.y[:, -1]
        t_done += chunk

    ones = np.ones(M + 1)
    res = residual_of(x)
    for _ in range(max_newton):
        if res <= tol:
            break
        G = op.apply(x) + drift_F(model, x)
        J = op.dense() + df_matrix(model, x)
        # KKT system: Newton step constrained to carry zero net mass
        kkt = np.zeros((M + 2, M + 2))
        kkt[: M + 1, : M + 1] = J
        kkt[: M + 1, M + 1] = ones
        kkt[M + 1, : M + 1] = ones
        rhs_vec = np.concatenate([-G, [0.0]])
        try:
            step = np.linalg.solve(kkt, rhs_vec)[: M + 1]
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular Newton system: {exc}") from exc
        lam = 1.0
        improved = False
        for _ in range(40):
            xn = x + lam * step
            xn /= xn.sum()
            rn = residual_of(xn)
            if rn < res:
                x, res = xn, rn
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    if res > tol:
        hint = ""
        if abs(x[M]) > tol:
            hint = ("; the cap carries visible mass, so no unit-mass "
                    "equilibrium exists at this truncation -- raise M")
        raise NumericalError(
            f"equilibrium refinement stalled at residual {res:.3e} "
            f"(target {tol:.1e}){hint}")
    return x
