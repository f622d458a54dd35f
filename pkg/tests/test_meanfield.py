"""Deterministic limit flow: integration, semigroup, equilibrium."""

import numpy as np
import pytest
from scipy.integrate import simpson

from metapop import (ModelSpec, NumericalError, find_equilibrium,
                     integrate_meanfield, semigroup_apply, weighted_norm)
from metapop.model import drift_F, drift_total, mu_weights
from metapop.state import unit_density

from conftest import random_simplex


class TestIntegration:
    def test_mass_leaks_only_through_the_cap(self, default_model):
        # the truncation is absorbing: with a negligible tail at the cap
        # the mass deficit stays at solver-tolerance level
        sol = integrate_meanfield(default_model, unit_density(1), 2.0, M=64)
        assert sol.initial_mass == 1.0
        assert np.all(np.abs(sol.mass_deficit()) <= 1e-8)
        # densities remain essentially nonnegative throughout
        assert sol.values.min() >= -1e-10

    def test_deficit_reports_real_leakage(self, default_model):
        # with the cap forced into the bulk of the distribution the
        # dropped flux is visible and monotone in time
        sol = integrate_meanfield(default_model, unit_density(1), 2.0, M=6)
        deficit = sol.mass_deficit()
        assert deficit[-1] > 1e-3
        assert np.all(np.diff(deficit) >= -1e-12)

    def test_truncation_self_consistency(self, default_model):
        # doubling M must not move the solution: the tail above 48 is
        # far below the integration tolerance for this horizon
        a = integrate_meanfield(default_model, unit_density(1), 2.0, M=48)
        b = integrate_meanfield(default_model, unit_density(1), 2.0, M=96)
        diff = b.values[-1][:49] - a.values[-1]
        assert weighted_norm(diff) <= 1e-8
        assert weighted_norm(b.values[-1][49:]) <= 1e-8

    def test_grid_and_interpolation(self, default_model):
        grid = np.array([0.0, 0.25, 1.0])
        sol = integrate_meanfield(default_model, unit_density(1), 1.0, M=32,
                                  grid=grid)
        assert np.array_equal(sol.times, grid)
        assert np.allclose(sol.at(0.0), sol.values[0])
        assert np.allclose(sol.at(5.0), sol.values[-1])  # clamps at the ends
        mid = sol.at(0.625)
        assert np.allclose(mid, 0.5 * sol.values[1] + 0.5 * sol.values[2])
        assert np.allclose(sol.final, sol.values[-1])

    def test_zero_horizon(self, default_model):
        sol = integrate_meanfield(default_model, unit_density(1), 0.0, M=16,
                                  grid=np.array([0.0]))
        assert np.allclose(sol.values, unit_density(1, 17))

    def test_extinction_state_is_stationary(self, default_model):
        # e0 kills every rate except the catastrophe constant, which the
        # linear part cancels exactly; the flow must hold it to tolerance
        sol = integrate_meanfield(default_model, unit_density(0), 3.0, M=32)
        assert weighted_norm(sol.final - unit_density(0, 33)) <= 1e-8

    def test_validation(self, default_model):
        with pytest.raises(ValueError, match="at least 1"):
            integrate_meanfield(default_model, unit_density(0), 1.0, M=0)
        with pytest.raises(ValueError, match="exceeds"):
            integrate_meanfield(default_model, unit_density(0), 1.0, M=5000)
        with pytest.raises(ValueError, match="negative entries"):
            integrate_meanfield(default_model, np.array([0.5, -0.5]), 1.0,
                                M=8)
        with pytest.raises(ValueError, match="above the truncation"):
            integrate_meanfield(default_model, unit_density(10), 1.0, M=4)

    def test_stiffness_warning(self):
        stiff = ModelSpec(law="logistic", c=50.0)
        with pytest.warns(UserWarning, match="stiff"):
            integrate_meanfield(stiff, unit_density(1), 1e-6, M=64,
                                grid=np.array([0.0, 1e-6]))

    def test_lipschitz_in_initial_data(self, default_model):
        rng = np.random.default_rng(61)
        a = random_simplex(rng, 17)
        b = a.copy()
        b[1] += 1e-4
        b /= b.sum()
        sa = integrate_meanfield(default_model, a, 1.0, M=32)
        sb = integrate_meanfield(default_model, b, 1.0, M=32)
        dist0 = weighted_norm(a - b)
        distT = weighted_norm(sa.final - sb.final)
        assert distT <= 20.0 * dist0  # e^{LT} with a crude L for T = 1


class TestMildSolutionForm:
    def test_integral_form_matches_the_flow(self, default_model):
        # x_t = R(t) x0 + int_0^t R(t-s) F(x_s) ds: build the right-hand
        # side from the semigroup and Simpson quadrature and compare
        M, T = 32, 1.0
        nodes = np.linspace(0.0, T, 41)
        sol = integrate_meanfield(default_model, unit_density(1), T, M=M,
                                  grid=nodes)
        homogeneous = semigroup_apply(default_model,
                                      unit_density(1, M + 1), T)
        forced = np.vstack([
            semigroup_apply(default_model,
                            drift_F(default_model, sol.at(s))[: M + 1],
                            T - s)
            for s in nodes])
        integral = simpson(forced, x=nodes, axis=0)
        mild = homogeneous + integral
        assert weighted_norm(mild - sol.final) <= 5e-6


class TestSemigroup:
    def test_identity_at_time_zero(self, default_model):
        v = np.arange(1.0, 11.0)
        assert np.array_equal(semigroup_apply(default_model, v, 0.0), v)

    def test_negative_time_rejected(self, default_model):
        with pytest.raises(ValueError, match="nonnegative"):
            semigroup_apply(default_model, np.ones(5), -0.5)

    def test_matrix_input_matches_columns(self, default_model):
        rng = np.random.default_rng(67)
        V = rng.standard_normal((12, 3))
        batch = semigroup_apply(default_model, V, 0.7)
        cols = np.column_stack([
            semigroup_apply(default_model, V[:, k], 0.7) for k in range(3)])
        assert np.allclose(batch, cols, atol=1e-9)

    def test_semigroup_property(self, default_model):
        v = unit_density(3, 20)
        both = semigroup_apply(default_model,
                               semigroup_apply(default_model, v, 0.4), 0.6)
        direct = semigroup_apply(default_model, v, 1.0)
        assert weighted_norm(both - direct) <= 1e-8

    def test_positivity_preserved(self, default_model):
        rng = np.random.default_rng(71)
        v = rng.random(25)
        out = semigroup_apply(default_model, v, 1.5)
        assert out.min() >= -1e-10

    def test_short_time_expansion(self, default_model):
        from metapop import truncated_A
        v = unit_density(2, 10)
        t = 1e-4
        A = truncated_A(default_model, 9).dense()
        second_order = v + t * A @ v + 0.5 * t ** 2 * A @ A @ v
        out = semigroup_apply(default_model, v, t)
        # remainder is O(t^3) ~ 1e-12; solver tolerance dominates
        assert np.allclose(out, second_order, atol=2e-9)

    def test_growth_bound(self, default_model):
        # || R(t) e_j ||_mu <= (j+1) e^{w t} with w the drift constant
        w = default_model.drift_bound_w()
        M = 60
        E = np.eye(M + 1)[:, : 31]  # columns e_0 .. e_30
        mu = mu_weights(M + 1)
        for t in (0.5, 2.0):
            out = semigroup_apply(default_model, E, t)
            norms = mu @ np.abs(out)
            bound = (np.arange(31) + 1.0) * np.exp(w * t)
            assert np.all(norms <= bound * (1 + 1e-6))

    def test_truncation_padding(self, default_model):
        v = np.ones(3)
        out = semigroup_apply(default_model, v, 0.2, M=10)
        assert out.size == 11


class TestEquilibrium:
    def test_endemic_equilibrium_default_model(self, default_model):
        x = find_equilibrium(default_model, M=80, tol=1e-10)
        assert x.sum() == pytest.approx(1.0, abs=1e-12)
        assert x.min() >= -1e-15
        drift = drift_total(default_model, x)
        assert weighted_norm(drift[:81]) <= 1e-10
        # the endemic profile: modest empty fraction, mode well inside
        assert 0.05 < x[0] < 0.10
        assert 5 <= int(np.argmax(x[1:]) + 1) <= 12

    def test_subcritical_collapses_to_extinction(self, subcritical_model):
        x = find_equilibrium(subcritical_model, M=40, tol=1e-9)
        assert weighted_norm(x - unit_density(0, 41)) <= 1e-6

    def test_custom_start_converges(self, default_model):
        x = find_equilibrium(default_model, M=60, tol=1e-9,
                             x0=unit_density(3))
        y = find_equilibrium(default_model, M=60, tol=1e-9)
        assert weighted_norm(x - y) <= 1e-7

    def test_reports_failure_instead_of_wrong_answer(self, default_model):
        with pytest.raises(NumericalError, match="residual"):
            find_equilibrium(default_model, M=60, tol=1e-9, scan_time=0.0,
                             max_newton=0)
