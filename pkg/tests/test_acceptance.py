"""Acceptance gate: eleven shipping criteria, one test and one line each.

Every test prints `ACCEPTANCE <n> <name>: PASS|FAIL -- <measured values>`
before asserting, so a full `pytest -s` run yields one verdict line per
criterion with the numbers that produced it.  Each test also asserts its
own runtime budget.  All randomness is pinned to fixed seeds; tolerances
are frozen literals.
"""

import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from metapop import (ModelSpec, SparseCounts, clt_study, euler_gaussian_path,
                     exponent_calc, find_equilibrium, lln_study,
                     lyapunov_residual, martingale_study, moment_S,
                     moment_study, replica_seeds, semigroup_apply,
                     simulate_ssa, simulate_time_change, stationary_covariance,
                     weighted_norm)
from metapop.diagnostics import round_density
from metapop.model import df_apply, drift_F, drift_total, jump_drift


def _report(n: int, name: str, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {n:02d} {name}: {verdict} -- {detail}")


def _pad(v: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros(width)
    out[: v.size] = v
    return out


@pytest.fixture(scope="module")
def equilibrium_M100(default_model):
    t0 = time.perf_counter()
    xbar = find_equilibrium(default_model, M=100)
    return xbar, time.perf_counter() - t0


def test_01_conservation(default_model):
    # 100 jump-resolved runs at N=500, T=5: the patch count is conserved
    # at every single event
    t0 = time.perf_counter()
    violations = 0
    events = 0
    for seed in replica_seeds(101, 100):
        traj = simulate_ssa(default_model, SparseCounts.single(1, 500),
                            scale=500, horizon=5.0, seed=seed, record="jumps")
        events += traj.events
        if not np.all(traj.counts.sum(axis=1) == 500):
            violations += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 60.0
    _report(1, "conservation", ok,
            f"{events} events across 100 runs, {violations} violations, "
            f"{elapsed:.1f}s (< 60s)")
    assert violations == 0
    assert elapsed < 60.0


def test_02_drift_decomposition(default_model):
    # per-jump enumeration versus the linear-plus-quadratic split, on
    # 1000 random densities with support at most 50
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(1000):
        support = rng.choice(51, size=int(rng.integers(1, 51)), replace=False)
        x = np.zeros(51)
        x[support] = rng.exponential(size=support.size)
        x /= x.sum()
        padded = np.concatenate([x, np.zeros(2)])
        split = drift_total(default_model, padded)
        direct = jump_drift(default_model, x, width=padded.size)
        worst = max(worst, weighted_norm(split - direct))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60.0
    _report(2, "drift decomposition", ok,
            f"worst weighted gap {worst:.2e} (<= 1e-10) over 1000 states, "
            f"{elapsed:.1f}s")
    assert worst <= 1e-10
    assert elapsed < 60.0


def test_03_derivative_first_order(default_model):
    # forward differences of the quadratic drift part: error bounded by
    # 10 * eps * curvature-bound and decaying exactly one order per
    # decade of eps
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    eps_grid = (1e-3, 1e-4, 1e-5)
    worst_excess = 0.0
    ratios = []
    for _ in range(100):
        x = rng.exponential(size=24)
        x /= x.sum()
        h = rng.standard_normal(24)
        bound = 4.0 * default_model.rho * default_model.gamma \
            * weighted_norm(h) ** 2
        dfh = df_apply(default_model, x, h)
        errs = []
        for eps in eps_grid:
            fd = (drift_F(default_model, x + eps * h)
                  - drift_F(default_model, x)) / eps
            width = max(fd.size, dfh.size)
            err = weighted_norm(_pad(fd, width) - _pad(dfh, width))
            errs.append(err)
            worst_excess = max(worst_excess, err / (10.0 * eps * bound))
        ratios.append((errs[0] / errs[1], errs[1] / errs[2]))
    ratios = np.array(ratios)
    elapsed = time.perf_counter() - t0
    first_order = np.all(np.abs(ratios - 10.0) < 0.01)
    ok = worst_excess <= 1.0 and first_order and elapsed < 60.0
    _report(3, "derivative check", ok,
            f"max error / (10 eps bound) = {worst_excess:.3f} (<= 1), "
            f"decade ratios within {np.abs(ratios - 10.0).max():.1e} of 10, "
            f"{elapsed:.1f}s")
    assert worst_excess <= 1.0
    assert first_order
    assert elapsed < 60.0


def test_04_simulator_equivalence(default_model):
    # direct-rate and time-change simulators must sample the same law:
    # two-sample KS on the weighted first moment at T=1, N=50, 300+300
    t0 = time.perf_counter()
    x0 = SparseCounts.single(1, 50)
    grid = np.array([0.0, 1.0])

    def sample(simulate, master):
        return [moment_S(simulate(default_model, x0, scale=50, horizon=1.0,
                                  seed=s, record="grid",
                                  grid=grid).counts[-1] / 50.0, 1.0)
                for s in replica_seeds(master, 300)]

    direct = sample(simulate_ssa, 404)
    clocked = sample(simulate_time_change, 405)
    ks = stats.ks_2samp(direct, clocked)
    elapsed = time.perf_counter() - t0
    ok = ks.pvalue > 0.01 and elapsed < 60.0
    _report(4, "simulator equivalence", ok,
            f"KS stat {ks.statistic:.4f}, p = {ks.pvalue:.4f} (> 0.01), "
            f"{elapsed:.1f}s (< 60s)")
    assert ks.pvalue > 0.01
    assert elapsed < 60.0


def test_05_martingale_mean_zero(default_model):
    # exact-compensator paths at N=200, T=2, 400 replicas: every
    # component of the mean within 3 standard errors of zero
    t0 = time.perf_counter()
    rep = martingale_study(default_model, {1: 1.0}, N=200, horizon=2.0,
                           replicas=400, seed=505)
    z = np.abs(rep.mean) / np.where(rep.se > 0.0, rep.se, np.inf)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and elapsed < 120.0
    _report(5, "martingale mean zero", ok,
            f"max |mean|/se = {z.max():.2f} (< 3) over {rep.mean.size} "
            f"components, {elapsed:.1f}s (< 120s)")
    assert rep.passed
    assert elapsed < 120.0


def test_06_lln_rate(default_model):
    # sup-error decay over two decades of N: fitted log-log slope inside
    # [-0.60, -0.40] (a pure 1/2 power blurred by the log factor)
    t0 = time.perf_counter()
    study = lln_study(default_model, {1: 1.0}, horizon=2.0,
                      N_grid=[100, 400, 1600, 6400], replicas=100, seed=606,
                      M=64)
    elapsed = time.perf_counter() - t0
    in_band = -0.60 <= study.slope <= -0.40
    ok = in_band and elapsed < 900.0
    _report(6, "LLN error rate", ok,
            f"slope {study.slope:.4f} +- {study.slope_se:.4f} in "
            f"[-0.60, -0.40], mean errors "
            f"{np.round(study.mean_errors, 4).tolist()}, "
            f"{elapsed:.1f}s (< 900s)")
    assert in_band
    assert elapsed < 900.0


def test_07_clt_covariance(default_model):
    # rescaled fluctuations at N=10^4, T=2, 500 replicas: leading 5x5
    # covariance block within max(15%, 3 MC se) of the Lyapunov-ODE
    # covariance, and the weighted functional passes KS at 1%
    t0 = time.perf_counter()
    rep = clt_study(default_model, {1: 1.0}, horizon=2.0, N=10_000,
                    replicas=500, seed=707, M=64)
    lead = slice(0, 5)
    th = rep.cov_theory[lead, lead]
    emp = rep.cov_emp[lead, lead]
    se = np.sqrt((np.outer(np.diag(th), np.diag(th)) + th ** 2)
                 / rep.replicas)
    gap = np.abs(emp - th)
    block_ok = bool(np.all(gap <= np.maximum(0.15 * np.abs(th), 3.0 * se)))
    rel = float((gap / np.maximum(np.abs(th), 1e-12)).max())
    elapsed = time.perf_counter() - t0
    ok = block_ok and rep.ks_pvalue > 0.01 and elapsed < 1800.0
    _report(7, "CLT covariance", ok,
            f"5x5 block within max(15%, 3 se): {block_ok} "
            f"(max rel {rel:.2f}), KS p = {rep.ks_pvalue:.4f} (> 0.01), "
            f"excluded mass {rep.excluded_mass:.1e}, "
            f"{elapsed:.1f}s (< 1800s)")
    assert block_ok
    assert rep.ks_pvalue > 0.01
    assert elapsed < 1800.0


def test_08_stationary_gaussian_law(default_model, equilibrium_M100):
    # scalar sanity: a one-type linear SDE reproduces the s/(2a)
    # stationary variance; full model: the stationary covariance at the
    # default equilibrium solves the Lyapunov equation to 1e-8
    xbar, eq_elapsed = equilibrium_M100
    t0 = time.perf_counter()
    a, s = 1.0, 0.8
    path = euler_gaussian_path(np.array([[-a]]), [(np.array([1.0]), s)],
                               np.zeros((200, 1)), horizon=20.0, dt=0.01,
                               seed=42, grid=np.linspace(0.0, 20.0, 81))
    samples = path.values[path.times >= 4.0, :, 0].ravel()
    ou_rel = abs(samples.var(ddof=1) - s / (2 * a)) / (s / (2 * a))

    Sigma = stationary_covariance(default_model, xbar, tol=1e-8)
    residual = lyapunov_residual(default_model, xbar, Sigma)
    floor = float(np.linalg.eigvalsh(Sigma).min())
    elapsed = eq_elapsed + time.perf_counter() - t0
    ok = ou_rel <= 0.05 and residual <= 1e-8 and elapsed < 120.0
    _report(8, "stationary Gaussian law", ok,
            f"scalar variance off by {100 * ou_rel:.2f}% (<= 5%), "
            f"Lyapunov residual {residual:.2e} (<= 1e-8), "
            f"min eigenvalue {floor:.2e}, {elapsed:.1f}s (< 120s)")
    assert ou_rel <= 0.05
    assert residual <= 1e-8
    assert floor >= -1e-10
    assert elapsed < 120.0


def test_09_exponent_arithmetic(default_model):
    # exact rational arithmetic: the logistic growth exponents give
    # moment threshold 22, and in the zeta*r0 = 2 regime the coupling
    # exponents approach (1/4, 1), with b2 = 1 attained exactly
    t0 = time.perf_counter()
    betas = default_model.weights().betas
    r0 = 10 ** 6
    rep = exponent_calc(betas, r0, Fraction(2, r0))
    b1_exact = rep.b1 == float(Fraction(1, 4) - Fraction(11, r0))
    gap_b1 = 0.25 - rep.b1
    ok = (betas == (1.0, 2.0, 1.0, 2.0, 1.0) and rep.threshold == 22.0
          and rep.feasible and b1_exact and rep.b2 == 1.0
          and 0.0 < gap_b1 <= 2e-5)
    elapsed = time.perf_counter() - t0
    _report(9, "exponent arithmetic", ok,
            f"threshold {rep.threshold:g} (= 22), b1 = {rep.b1!r} "
            f"(1/4 - {gap_b1:.1e}), b2 = {rep.b2!r} (= 1 exactly), "
            f"{elapsed:.2f}s")
    assert betas == (1.0, 2.0, 1.0, 2.0, 1.0)
    assert rep.threshold == 22.0
    assert rep.feasible
    assert b1_exact
    assert rep.b2 == 1.0
    assert 0.0 < gap_b1 <= 2e-5
    assert elapsed < 60.0


def test_10_semigroup_growth(default_model):
    # weighted norm of semigroup columns: ||R(t) e_j|| <= (j+1) e^{w t}
    # for all j <= 50 and t in {0.5, 1, 2}
    t0 = time.perf_counter()
    M = 120
    V = np.eye(M + 1)[:, :51]
    mu = np.arange(M + 1, dtype=float) + 1.0
    w = default_model.drift_bound_w()
    worst = -np.inf
    for t in (0.5, 1.0, 2.0):
        R = semigroup_apply(default_model, V, t, M=M)
        norms = np.abs(R.T) @ mu
        ratio = norms / ((np.arange(51) + 1.0) * np.exp(w * t))
        worst = max(worst, float(ratio.max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1.0 + 1e-6 and elapsed < 60.0
    _report(10, "semigroup growth bound", ok,
            f"max ||R(t) e_j|| / ((j+1) e^(w t)) = {worst:.6f} "
            f"(<= 1 + 1e-6), w = {w:g}, {elapsed:.1f}s")
    assert worst <= 1.0 + 1e-6
    assert elapsed < 60.0


def test_11_moment_boundedness(default_model, equilibrium_M100):
    # 99% quantile of sup_t S_2 across two decades of N, started from
    # the endemic profile: all three quantiles inside a +-20% band
    # around their cross-N mean (no growth with N)
    xbar, _ = equilibrium_M100
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 201)
    trajs = []
    for N, master in ((100, 111), (1000, 112), (10_000, 113)):
        x0N = round_density(N, xbar)
        for s in replica_seeds(master, 100):
            trajs.append(simulate_ssa(default_model, x0N, scale=N,
                                      horizon=1.0, seed=s, record="grid",
                                      grid=grid))
    rep = moment_study(trajs, r=2.0, quantile=0.99)
    center = float(rep.quantiles.mean())
    deviation = float(np.abs(rep.quantiles - center).max() / center)
    elapsed = time.perf_counter() - t0
    ok = deviation <= 0.20 and elapsed < 600.0
    _report(11, "moment boundedness", ok,
            f"q99 sup S_2 = {np.round(rep.quantiles, 2).tolist()} for "
            f"N = {rep.N_grid.tolist()}, max deviation from their mean "
            f"{100 * deviation:.1f}% (<= 20%), "
            f"max/min - 1 = {100 * rep.spread:.1f}%, "
            f"{elapsed:.1f}s (< 600s)")
    assert deviation <= 0.20
    assert elapsed < 600.0
