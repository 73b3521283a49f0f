import math
import warnings

import numpy as np
import pytest

from anchoreg import (
    BoundConstants,
    ExactConvergence,
    HypothesisWarning,
    RunConfig,
    TrajectoryRecord,
    alpha_limit,
    check_lyapunov_monotone,
    init_state,
    lyapunov_eagv,
    lyapunov_feg,
    make_almost_bilinear,
    make_comonotone_quadratic,
    rate_slope,
    run,
    theoretical_bound,
)
from anchoreg.algorithms import eagv_step, feg_step
from anchoreg.schedules import PI2_OVER_6


@pytest.fixture(scope="module")
def ab():
    return make_almost_bilinear(0.01)


@pytest.fixture(scope="module")
def cm():
    return make_comonotone_quadratic(1.0, -1.0 / 3.0)


def synthetic(values, grad=None):
    rows = []
    for k, v in enumerate(values):
        rows.append(
            TrajectoryRecord(
                k=k,
                grad_norm_sq=1.0 if grad is None else grad[k],
                dist_to_saddle_sq=None,
                anchor_dist_sq=None,
                lyapunov=v,
                alpha_k=0.5,
                c_k=1.0,
                gamma_k=0.0,
                bound=None,
            )
        )
    return rows


class TestLyapunovValues:
    def test_initial_value_hand_computed(self, ab):
        # z0 = zbar0 = (1,1): V0 = alpha0 ||G||^2 + c0 ||z0 - z*||^2
        state = init_state(ab, RunConfig("eagv", "moving_pos", alpha0=0.5))
        expected = 0.5 * (1.01**2 + 0.99**2) + PI2_OVER_6 * 2.0
        got = lyapunov_eagv(state, ab, ab.saddle_point)
        assert got == pytest.approx(expected, rel=1e-14)
        assert got == pytest.approx(4.28997, abs=5e-6)

    def test_zero_at_saddle(self, ab, cm):
        state = init_state(ab, RunConfig("eagv", "moving_pos", z0=np.zeros(2)))
        assert lyapunov_eagv(state, ab, ab.saddle_point) == 0.0
        state = init_state(cm, RunConfig("feg", "moving_pos", z0=np.zeros(2)))
        assert lyapunov_feg(state, cm, cm.saddle_point) == 0.0

    def test_feg_initial_has_no_middle_term(self, cm):
        # B_0 = 0 and zbar = z: V0 = A_0 ||G||^2 + c0 ||z-z*||^2 with A_0 = 0
        state = init_state(cm, RunConfig("feg", "moving_pos"))
        assert lyapunov_feg(state, cm, cm.saddle_point) == pytest.approx(
            PI2_OVER_6 * 2.0, rel=1e-14
        )

    def test_sign_convention_equivalence(self, cm):
        # the flipped middle term equals +B <G, z - zbar>, checked off-anchor
        state = init_state(cm, RunConfig("feg", "moving_pos"))
        for _ in range(3):
            state = feg_step(state, cm).next_state
        sch = state.schedule
        g = cm.operator(state.z.coords)
        gap = cm.saddle_point.coords - state.z_bar.coords
        A = (sch.k**2 / 2.0) * (1.0 + 2.0 * cm.comonotonicity) - sch.k * cm.comonotonicity
        manual = (
            A * float(g @ g)
            + sch.k * float(g @ (state.z.coords - state.z_bar.coords))
            + sch.anchor.c * float(gap @ gap)
        )
        assert lyapunov_feg(state, cm, cm.saddle_point) == pytest.approx(manual, rel=1e-12)

    def test_requires_saddle(self, ab):
        state = init_state(ab, RunConfig("eagv", "moving_pos"))
        with pytest.raises(ValueError, match="saddle"):
            lyapunov_eagv(state, ab, None)

    def test_matches_recorded_rows(self, ab):
        traj = run(ab, RunConfig("eagv", "moving_pos", iters=5))
        state = init_state(ab, RunConfig("eagv", "moving_pos"))
        assert traj.records[0].lyapunov == pytest.approx(
            lyapunov_eagv(state, ab, ab.saddle_point), rel=1e-14
        )
        for k in range(5):
            state = eagv_step(state, ab).next_state
            assert traj.records[k + 1].lyapunov == pytest.approx(
                lyapunov_eagv(state, ab, ab.saddle_point), rel=1e-12
            )


class TestMonotoneCheck:
    def test_constant_sequence_ok(self):
        report = check_lyapunov_monotone(synthetic([2.0] * 10), mode="fixed")
        assert report.ok and report.first_violation is None

    def test_single_bump_located(self):
        values = [10.0 - 0.5 * k for k in range(10)]
        values[5] += 1.0
        report = check_lyapunov_monotone(synthetic(values), mode="moving_pos")
        assert not report.ok
        assert report.first_violation == 5
        assert report.max_increase == pytest.approx(0.5, rel=1e-12)

    def test_relative_slack_allows_tiny_noise(self):
        values = [100.0, 100.0 + 1e-7, 99.0]
        report = check_lyapunov_monotone(synthetic(values), mode="fixed")
        assert report.ok  # 1e-7 < 1e-8 * max(1, 100)

    def test_naive_mode_not_applicable(self):
        report = check_lyapunov_monotone(synthetic([1.0, 5.0]), mode="moving_neg_naive")
        assert report.ok and not report.applicable

    def test_strict_mode_budget(self):
        base = 10.0
        budget = [1.0 / (j + 1.0) ** 2 for j in range(20)]
        within = [base] + [base + 0.9 * sum(budget[: k + 1]) for k in range(1, 20)]
        report = check_lyapunov_monotone(synthetic(within), mode="moving_neg_strict", e_scale=1.0)
        assert report.ok
        beyond = [base] + [base + 1.2 * sum(budget[: k + 1]) for k in range(1, 20)]
        report = check_lyapunov_monotone(synthetic(beyond), mode="moving_neg_strict", e_scale=1.0)
        assert not report.ok
        assert report.first_violation == 1

    def test_missing_lyapunov_rejected(self):
        rows = synthetic([1.0, 1.0])
        rows[1] = TrajectoryRecord(1, 1.0, None, None, None, 0.5, 1.0, 0.0, None)
        with pytest.raises(ValueError, match="Lyapunov"):
            check_lyapunov_monotone(rows, mode="fixed")

    def test_mode_comes_from_trajectory(self, ab):
        traj = run(ab, RunConfig("eagv", "moving_pos", iters=50))
        assert check_lyapunov_monotone(traj).ok


class TestTheoreticalBound:
    def consts(self, **kw):
        base = dict(
            R=1.0, rho=-1.0 / 3.0, alpha0=0.5, alpha_inf=0.5,
            c0=PI2_OVER_6, c_inf=PI2_OVER_6, dist0_sq=2.0,
        )
        base.update(kw)
        return BoundConstants(**base)

    def test_fixed_anchor_hand_value(self):
        # 4 (1 + 0.25) / 0.25 * 2 / 2 = 20
        got = theoretical_bound(0, "eagv_fixed", self.consts())
        assert got == pytest.approx(20.0, rel=1e-15)

    def test_quarter_per_doubling(self):
        consts = self.consts(c_inf=10.0)
        b100 = theoretical_bound(100, "feg_moving", consts)
        b200 = theoretical_bound(200, "feg_moving", consts)
        assert b100 / b200 == pytest.approx(4.0, rel=1e-12)

    def test_feg_bound_undefined_at_zero(self):
        with pytest.raises(ValueError, match="k >= 1"):
            theoretical_bound(0, "feg_moving", self.consts(c_inf=10.0))

    def test_hypothesis_failure_warns_and_returns_none(self):
        consts = self.consts(c_inf=0.3, alpha_inf=0.4)
        with pytest.warns(HypothesisWarning):
            assert theoretical_bound(5, "eagv_moving", consts) is None
        with pytest.warns(HypothesisWarning):
            assert theoretical_bound(5, "feg_moving", self.consts(c_inf=0.3)) is None

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown bound kind"):
            theoretical_bound(1, "sgd", self.consts())

    def test_moving_bound_formula(self):
        consts = self.consts(alpha_inf=0.4, c_inf=5.0, c0=7.0)
        got = theoretical_bound(3, "eagv_moving", consts)
        expected = 4.0 * (0.5 * 1.0 + 7.0) * 2.0 / (0.4 * 4.0 * 5.0)
        assert got == pytest.approx(expected, rel=1e-15)


class TestRateSlope:
    def test_inverse_square_power_law(self):
        grads = [math.nan] + [3.7 / k**2 for k in range(1, 300)]
        rows = synthetic([None] * 300, grad=grads)
        report = rate_slope(rows, 1, 299)
        assert report.slope == pytest.approx(-2.0, abs=1e-9)
        assert report.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_inverse_power_law(self):
        grads = [math.nan] + [0.2 / k for k in range(1, 300)]
        report = rate_slope(synthetic([None] * 300, grad=grads), 1, 299)
        assert report.slope == pytest.approx(-1.0, abs=1e-9)

    def test_invariant_under_rescaling(self):
        grads = [math.nan] + [1.0 / k**1.5 for k in range(1, 200)]
        a = rate_slope(synthetic([None] * 200, grad=grads), 1, 199)
        b = rate_slope(synthetic([None] * 200, grad=[g * 1e6 for g in grads]), 1, 199)
        assert a.slope == pytest.approx(b.slope, abs=1e-12)

    def test_exact_zero_reports_convergence(self):
        grads = [1.0, 1.0, 0.0, 1.0]
        with pytest.raises(ExactConvergence, match="converged exactly"):
            rate_slope(synthetic([None] * 4, grad=grads), 1, 3)

    def test_window_validation(self):
        rows = synthetic([None] * 6, grad=[1.0] * 6)
        with pytest.raises(ValueError, match="k_min"):
            rate_slope(rows, 0, 5)
        with pytest.raises(ValueError, match="k_min < k_max"):
            rate_slope(rows, 5, 5)
        with pytest.raises(ValueError, match="fewer than two"):
            rate_slope(rows, 8, 9)


class TestRunLevelInvariants:
    def test_lower_bound_chain_under_hypothesis(self, ab):
        # with c_inf * alpha_inf >= 1: V_k >= (alpha_inf/4)(k+1)(k+2)||G||^2
        a_inf = alpha_limit(0.5, ab.smoothness)
        c0 = 4.0 * math.exp(PI2_OVER_6) / a_inf
        traj = run(ab, RunConfig("eagv", "moving_pos", iters=500, alpha0=0.5, c0=c0))
        for r in traj.records:
            floor = (a_inf / 4.0) * (r.k + 1.0) * (r.k + 2.0) * r.grad_norm_sq
            assert r.lyapunov >= floor * (1.0 - 1e-9)

    def test_bound_column_policy(self, ab, cm):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            neg = run(ab, RunConfig("eagv", "moving_neg_naive", iters=3))
            assert all(r.bound is None for r in neg.records)
            feg_fixed = run(cm, RunConfig("feg", "fixed", iters=3))
            assert all(r.bound is None for r in feg_fixed.records)
            default_moving = run(ab, RunConfig("eagv", "moving_pos", iters=3))
            assert all(r.bound is None for r in default_moving.records)
            assert default_moving.hypothesis_note is not None
        fixed = run(ab, RunConfig("eagv", "fixed", iters=3, alpha0=0.5))
        assert all(r.bound is not None for r in fixed.records)

    def test_bound_rows_dominate_gradient(self, ab):
        traj = run(ab, RunConfig("eagv", "fixed", iters=300, alpha0=0.5))
        for r in traj.records:
            assert r.grad_norm_sq <= r.bound
