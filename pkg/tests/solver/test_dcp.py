from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from riskmdp.errors import SubgradientError
from riskmdp.planner import PlannerConfig
from riskmdp.planner.program import assemble_program
from riskmdp.risk import RiskMeasure
from riskmdp.solver import expectation_lp, linearize_g2
from tests.conftest import random_mdp

MEASURES = [RiskMeasure.expectation(), RiskMeasure.cvar(0.3), RiskMeasure.evar(0.3)]


def _program(mdp, risk, budget=10.0):
    return assemble_program(mdp, PlannerConfig(risk=risk, budgets=[budget]))


def _random_point(rng, program, scale=10.0):
    V = rng.uniform(-scale, scale, program.n_states)
    lam = rng.uniform(0.0, 2.0, program.n_constraints)
    return program.pack(V, lam, float(rng.uniform(0.5, 3.0)))


class TestAssemble:
    def test_sizes(self, two_state_mdp):
        expectation = _program(two_state_mdp, RiskMeasure.expectation())
        assert expectation.n_rows == two_state_mdp.n_states * two_state_mdp.n_actions
        assert expectation.n_vars == two_state_mdp.n_states + two_state_mdp.n_constraints
        cvar = _program(two_state_mdp, RiskMeasure.cvar(0.2))
        assert cvar.n_vars == expectation.n_vars + 1

    def test_evar_at_zero_values(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.evar(0.15))
        x = program.pack(np.zeros(2), np.zeros(1), 1.0)
        assert_allclose(program.g2(x), 0.9 * np.log(1.0 / 0.15))

    def test_initial_point_is_feasible(self, rng):
        for risk in MEASURES:
            program = _program(random_mdp(rng), risk)
            assert program.residuals(program.initial_point()).max() <= 0.0

    def test_tight_g2_never_exceeds_g2(self, rng):
        for risk in MEASURES[1:]:
            program = _program(random_mdp(rng), risk)
            for _ in range(20):
                x = _random_point(rng, program)
                assert np.all(program.tight_g2(x) <= program.g2(x) + 1e-9)

    def test_lower_bound_scales_evar(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.evar(0.5), budget=4.0)
        x = program.pack(np.array([3.0, 0.0]), np.array([0.5]), 2.0)
        assert program.lower_bound(x) == pytest.approx((3.0 - 0.5 * 4.0) / 2.0)

    def test_evar_rows_scale_with_the_variables(self, rng):
        program = _program(random_mdp(rng), RiskMeasure.evar(0.3))
        for _ in range(10):
            x = _random_point(rng, program)
            scaled = 3.0 * x
            assert program.lower_bound(scaled) == pytest.approx(program.lower_bound(x), rel=1e-12)
            assert_allclose(program.residuals(scaled), 3.0 * program.residuals(x), rtol=1e-6, atol=1e-6)


class TestLinearize:
    def test_expectation_is_exact(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.expectation(), budget=5.0)
        linear = linearize_g2(program, program.initial_point(), slack_rows=np.array([], dtype=int))
        reference = expectation_lp(two_state_mdp, [5.0])
        assert_allclose(linear.lp.A_ub, reference.A_ub)
        assert_allclose(linear.lp.b_ub, reference.b_ub)
        assert_allclose(linear.lp.c, reference.c)

    def test_cvar_below_zeta_has_flat_tangent(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.cvar(0.3))
        zeta_hat = 5.0
        x_hat = program.pack(np.array([1.0, 2.0]), np.zeros(1), zeta_hat)
        tangent = program.g2_tangent(x_hat)
        assert_allclose(tangent.weights, 0.0)
        assert_allclose(tangent.zeta_slope, program.discount)
        assert_allclose(tangent.values(x_hat), program.discount * zeta_hat)

    @pytest.mark.parametrize("risk", MEASURES, ids=lambda r: r.label)
    def test_g2_tangent_underestimates_g2(self, rng, risk):
        program = _program(random_mdp(rng, n_states=4, n_actions=3), risk)
        for _ in range(5):
            x_hat = _random_point(rng, program)
            tangent = program.g2_tangent(x_hat)
            assert_allclose(tangent.values(x_hat), program.g2(x_hat), atol=1e-7)
            for _ in range(100):
                x = _random_point(rng, program, scale=30.0)
                exact = program.g2(x)
                assert np.all(tangent.values(x) <= exact + 1e-9 * (1.0 + np.abs(exact)))

    @pytest.mark.parametrize("risk", MEASURES, ids=lambda r: r.label)
    def test_linearization_underestimates_tight_g2(self, rng, risk):
        program = _program(random_mdp(rng, n_states=4, n_actions=3), risk)
        for _ in range(5):
            x_hat = _random_point(rng, program)
            linear = linearize_g2(program, x_hat)
            assert_allclose(linear.tangent_values(x_hat), program.tight_g2(x_hat), atol=1e-7)
            for _ in range(100):
                x = _random_point(rng, program, scale=30.0)
                exact = program.tight_g2(x)
                assert np.all(linear.tangent_values(x) <= exact + 1e-9 * (1.0 + np.abs(exact)))

    @pytest.mark.parametrize("risk", MEASURES[1:], ids=lambda r: r.label)
    def test_zeta_column_is_pinned(self, two_state_mdp, risk):
        program = _program(two_state_mdp, risk)
        linear = linearize_g2(program, program.pack(np.array([1.0, 0.0]), np.zeros(1), 1.7))
        column = program.n_states + program.n_constraints
        assert linear.lp.lower[column] == linear.lp.upper[column] == 1.7

    def test_slack_columns(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.cvar(0.3))
        linear = linearize_g2(program, program.initial_point(), tau=7.0, slack_rows=np.array([1, 3]))
        assert linear.lp.n_vars == program.n_vars + 2
        assert_allclose(linear.lp.c[-2:], 7.0)
        assert linear.lp.A_ub[1, -2] == -1.0
        assert linear.lp.A_ub[3, -1] == -1.0

    def test_rejects_non_positive_zeta(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.cvar(0.3))
        with pytest.raises(ValueError):
            linearize_g2(program, program.pack(np.zeros(2), np.zeros(1), 0.0))

    def test_overflow_names_the_pair(self, two_state_mdp):
        program = _program(two_state_mdp, RiskMeasure.evar(0.3))
        x_hat = program.pack(np.array([np.inf, 0.0]), np.zeros(1), 1.0)
        with pytest.raises(SubgradientError) as info:
            program.g2_tangent(x_hat)
        assert (info.value.state, info.value.action) == (0, 0)
