"""Leapfrog step, subsample schedules, symmetric sweeps, and fast propagation."""
import math

import numpy as np
import pytest

from subhmc.core import ConfigurationError, DivergenceError, PhaseState, ZeroPotential
from subhmc.integrate import (
    FixedBatch,
    Full,
    PartialSymmetricSweep,
    PerStepRandom,
    PerTrajectoryRandom,
    SymmetricSweep,
    endpoint_error,
    integrate,
    leapfrog_step,
    matrix_power_2x2,
    propagate_fixed_center,
    propagate_per_step_centers,
    record_to_csv,
    step_matrix,
    symmetric_sweep,
)
from subhmc.model import (
    ModelConfig,
    QuadraticForm,
    QuadraticPotential,
    exact_flow,
    make_context,
    to_quadratic,
)
from subhmc.core import substream

# A unit-stiffness instance: sigma^2 = 2N and s^2 = 2 give posterior curvature
# N/sigma^2 + 1/s^2 = 1, so the exact flow has angular frequency 1 and the
# usual step-size grids sit comfortably inside the stability region.
GENTLE = dict(sigma=math.sqrt(1000.0), s=math.sqrt(2.0), N=500, D=1, mu_true=(1.0,))


@pytest.fixture(scope="module")
def gentle_ctx():
    return make_context(ModelConfig(seed=202, **GENTLE), J=25)


@pytest.fixture(scope="module")
def default_ctx():
    return make_context(ModelConfig(seed=101, D=1, mu_true=(1.0,)), J=25)


def full_form(ctx):
    return to_quadratic(ctx.full)


class TestLeapfrogStep:
    def test_hand_evaluated_unit_oscillator(self):
        pot = QuadraticPotential(QuadraticForm(np.array([1.0]), np.array([0.0])))
        out = leapfrog_step(PhaseState(np.array([1.0]), np.array([0.0])), 0.1, pot)
        assert out.q[0] == pytest.approx(0.995, abs=1e-15)
        assert out.p[0] == pytest.approx(-0.09975, abs=1e-15)

    def test_zero_potential_is_pure_drift(self):
        s = PhaseState(np.array([1.0, -2.0]), np.array([0.5, 2.0]))
        out = leapfrog_step(s, 0.3, ZeroPotential())
        assert np.array_equal(out.q, s.q + 0.3 * s.p)
        assert np.array_equal(out.p, s.p)

    def test_vanishing_step_is_identity(self):
        pot = QuadraticPotential(QuadraticForm(np.array([2.0]), np.array([0.5])))
        s = PhaseState(np.array([1.2]), np.array([-0.4]))
        out = leapfrog_step(s, 1e-8, pot)
        assert abs(out.q[0] - s.q[0]) < 1e-7
        assert abs(out.p[0] - s.p[0]) < 1e-7

    def test_non_finite_result_raises(self):
        class BadOracle:
            def value(self, q):
                return float("nan")

            def gradient(self, q):
                return np.full_like(q, np.nan)

            def cost_units(self):
                return 0

        s = PhaseState(np.array([1.0]), np.array([0.0]))
        with pytest.raises(DivergenceError):
            leapfrog_step(s, 0.1, BadOracle())

    def test_nonpositive_step_rejected(self):
        pot = ZeroPotential()
        s = PhaseState(np.array([1.0]), np.array([0.0]))
        with pytest.raises(ConfigurationError):
            leapfrog_step(s, 0.0, pot)


class TestIntegrateFull:
    def test_energy_stays_within_second_order_band(self, gentle_ctx):
        c = gentle_ctx.full_center[0]
        s0 = PhaseState(np.array([c + 1.0]), np.array([0.0]))
        rec = integrate(s0, 0.01, 100, Full(), gentle_ctx)
        h0 = rec.steps[0].h_full
        assert max(abs(e.h_full - h0) for e in rec.steps) < 1e-3

    def test_richardson_halving_ratio(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        s0 = PhaseState(np.array([qf.center[0] + 1.0]), np.array([0.5]))
        errors = {}
        for eps in (0.04, 0.02):
            L = round(1.0 / eps)
            rec = integrate(s0, eps, L, Full(), gentle_ctx)
            errors[eps] = endpoint_error(rec, exact_flow(qf, s0, rec.elapsed_time))
        assert 3.5 <= errors[0.04] / errors[0.02] <= 4.5

    def test_small_step_endpoint_error(self, default_ctx):
        # Amplitude chosen small: the phase-error rate omega^3 eps^2 / 24
        # times the momentum scale omega bounds the distance only for
        # near-center starts at this stiffness.
        qf = full_form(default_ctx)
        s0 = PhaseState(np.array([qf.center[0] + 0.01]), np.array([0.05]))
        rec = integrate(s0, 1e-3, 1000, Full(), default_ctx)
        assert endpoint_error(rec, exact_flow(qf, s0, 1.0)) < 1e-5

    def test_cost_counts_two_gradients_per_step(self, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        rec = integrate(s0, 0.01, 50, Full(), default_ctx)
        assert rec.total_cost_units == 2 * 500 * 50
        rec_b = integrate(s0, 0.01, 50, FixedBatch(3), default_ctx)
        assert rec_b.total_cost_units == 2 * 20 * 50

    def test_record_shape(self, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        rec = integrate(s0, 0.01, 7, Full(), default_ctx)
        assert rec.n_steps == 7
        assert len(rec.steps) == 8
        assert rec.elapsed_time == pytest.approx(0.07, rel=1e-12)
        assert [e.index for e in rec.steps] == list(range(8))


class TestIntegrateValidation:
    def test_zero_steps_rejected(self, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        with pytest.raises(ConfigurationError):
            integrate(s0, 0.01, 0, Full(), default_ctx)

    def test_random_schedule_requires_rng(self, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        with pytest.raises(ConfigurationError):
            integrate(s0, 0.01, 5, PerStepRandom((1, 2)), default_ctx)

    def test_batch_index_validated(self, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        with pytest.raises(ConfigurationError):
            integrate(s0, 0.01, 5, FixedBatch(26), default_ctx)

    def test_unstable_step_raises_divergence(self, default_ctx):
        s0 = PhaseState(np.array([2.0]), np.array([0.0]))
        with pytest.raises(DivergenceError):
            integrate(s0, 1.0, 500, Full(), default_ctx)


class TestReversibility:
    def test_full_forward_backward_recovers_state(self, default_ctx):
        rng = np.random.default_rng(77)
        for _ in range(5):
            s0 = PhaseState(rng.standard_normal(1), rng.standard_normal(1))
            fwd = integrate(s0, 0.01, 100, Full(), default_ctx)
            back = integrate(fwd.final_state.negate_momentum(), 0.01, 100, Full(), default_ctx)
            recovered = back.final_state.negate_momentum()
            assert np.max(np.abs(recovered.q - s0.q)) < 1e-8
            assert np.max(np.abs(recovered.p - s0.p)) < 1e-8

    def test_per_step_schedule_reverses_under_reversed_batches(self, default_ctx):
        s0 = PhaseState(np.array([0.3]), np.array([-0.6]))
        fwd = integrate(s0, 0.01, 60, PerStepRandom((1, 2, 3, 4, 5)), default_ctx,
                        rng=substream(5, 1))
        js = [e.batch for e in fwd.steps[1:]]
        state = fwd.final_state.negate_momentum()
        for j in reversed(js):
            state = leapfrog_step(state, 0.01, default_ctx.scaled_batch(j))
        recovered = state.negate_momentum()
        assert np.max(np.abs(recovered.q - s0.q)) < 1e-8
        assert np.max(np.abs(recovered.p - s0.p)) < 1e-8


class TestVolumePreservation:
    @pytest.mark.parametrize("fixture", ["default_ctx", "gentle_ctx"])
    def test_per_dimension_determinant_is_one(self, fixture, request):
        ctx = request.getfixturevalue(fixture)
        for pot in (ctx.full, ctx.scaled_batch(2)):
            base = PhaseState(np.array([0.7]), np.array([-0.2]))
            out0 = leapfrog_step(base, 0.05, pot)
            # The map is affine on a quadratic target, so unit basis
            # perturbations recover the Jacobian exactly.
            out_q = leapfrog_step(PhaseState(base.q + 1.0, base.p), 0.05, pot)
            out_p = leapfrog_step(PhaseState(base.q, base.p + 1.0), 0.05, pot)
            jac = np.array(
                [
                    [out_q.q[0] - out0.q[0], out_p.q[0] - out0.q[0]],
                    [out_q.p[0] - out0.p[0], out_p.p[0] - out0.p[0]],
                ]
            )
            det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
            assert abs(det - 1.0) < 1e-12


class TestBiasPlateaus:
    def test_fixed_batch_error_floor_survives_step_refinement(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        s0 = PhaseState(np.array([qf.center[0] + 1.0]), np.array([0.0]))
        errs = {}
        for eps in (0.04, 0.005):
            L = round(1.0 / eps)
            rec = integrate(s0, eps, L, FixedBatch(1), gentle_ctx)
            errs[eps] = endpoint_error(rec, exact_flow(qf, s0, rec.elapsed_time))
        assert errs[0.005] > 0.5 * errs[0.04]

    def test_fixed_batch_plateau_equals_exact_biased_flow_gap(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        biased = to_quadratic(gentle_ctx.scaled_batch(1))
        s0 = PhaseState(np.array([qf.center[0] + 1.0]), np.array([0.0]))
        rec = integrate(s0, 1e-3, 1000, FixedBatch(1), gentle_ctx)
        measured = endpoint_error(rec, exact_flow(qf, s0, 1.0))
        exact_gap = _distance(exact_flow(biased, s0, 1.0), exact_flow(qf, s0, 1.0))
        assert measured == pytest.approx(exact_gap, rel=0.10)

    def test_per_step_pool_plateau_equals_pool_average_flow_gap(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        pool = (1, 2, 3, 4, 5)
        pool_center = gentle_ctx.centers[[j - 1 for j in pool]].mean(axis=0)
        pool_form = QuadraticForm(qf.stiffness, pool_center)
        s0 = PhaseState(np.array([qf.center[0] + 1.0]), np.array([0.0]))
        errors = []
        for k in range(8):
            rec = integrate(
                s0, 2.5e-4, 4000, PerStepRandom(pool), gentle_ctx,
                rng=substream(900, k),
            )
            errors.append(endpoint_error(rec, exact_flow(qf, s0, 1.0)))
        exact_gap = _distance(exact_flow(pool_form, s0, 1.0), exact_flow(qf, s0, 1.0))
        assert np.mean(errors) == pytest.approx(exact_gap, rel=0.10)

    def test_per_step_resampling_reduces_mean_error(self, default_ctx):
        qf = full_form(default_ctx)
        pool = (1, 2, 3, 4, 5)
        s0 = PhaseState(np.array([qf.center[0] + 0.5]), np.array([0.0]))
        exact = exact_flow(qf, s0, 1.0)
        per_step, per_traj = [], []
        for k in range(100):
            rec_s = integrate(s0, 0.01, 100, PerStepRandom(pool), default_ctx,
                              rng=substream(31, k))
            rec_t = integrate(s0, 0.01, 100, PerTrajectoryRandom(pool), default_ctx,
                              rng=substream(32, k))
            per_step.append(endpoint_error(rec_s, exact))
            per_traj.append(endpoint_error(rec_t, exact))
        assert np.mean(per_step) <= np.mean(per_traj)

    def test_close_loop_appends_one_step_with_first_batch(self, default_ctx):
        s0 = PhaseState(np.array([0.5]), np.array([0.0]))
        rec = integrate(s0, 0.01, 10, PerStepRandom((1, 2, 3), close_loop=True),
                        default_ctx, rng=substream(8, 0))
        assert rec.n_steps == 11
        assert rec.steps[-1].batch == rec.steps[1].batch


class TestSymmetricSweep:
    def test_single_batch_sweep_is_two_full_steps(self):
        ctx = make_context(ModelConfig(seed=55, mu_true=(1.0,)), J=1)
        s0 = PhaseState(np.array([1.4]), np.array([-0.3]))
        swept = symmetric_sweep(s0, 0.01, 1, (1,), ctx)
        stepped = integrate(s0, 0.01, 2, Full(), ctx)
        assert np.array_equal(swept.final_state.q, stepped.final_state.q)
        assert np.array_equal(swept.final_state.p, stepped.final_state.p)

    def test_sweep_is_reversible(self, gentle_ctx):
        batches = tuple(range(1, 26))
        s0 = PhaseState(np.array([2.0]), np.array([0.7]))
        fwd = symmetric_sweep(s0, 0.02, 3, batches, gentle_ctx)
        back = symmetric_sweep(fwd.final_state.negate_momentum(), 0.02, 3, batches,
                               gentle_ctx)
        recovered = back.final_state.negate_momentum()
        assert np.max(np.abs(recovered.q - s0.q)) < 1e-8
        assert np.max(np.abs(recovered.p - s0.p)) < 1e-8

    def test_coarse_states_hug_a_level_set(self, gentle_ctx):
        batches = tuple(range(1, 26))
        s0 = PhaseState(np.array([gentle_ctx.full_center[0] + 1.0]), np.array([0.0]))
        spreads = {}
        for eps in (0.02, 0.01):
            rec = symmetric_sweep(s0, eps, 500, batches, gentle_ctx)
            coarse_h = np.array([e.h_full for e in rec.steps[:: 2 * 25]])
            spreads[eps] = np.max(np.abs(coarse_h - np.median(coarse_h)))
        assert 3.5 <= spreads[0.02] / spreads[0.01] <= 4.5

    def test_full_sweep_error_decays_with_step(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        batches = tuple(range(1, 26))
        s0 = PhaseState(np.array([qf.center[0] + 1.0]), np.array([0.0]))
        errs = {}
        for eps in (0.05, 0.00625):
            sweeps = max(1, round(1.0 / (2 * eps)))
            rec = symmetric_sweep(s0, eps, sweeps, batches, gentle_ctx)
            errs[eps] = endpoint_error(rec, exact_flow(qf, s0, rec.elapsed_time))
        assert errs[0.00625] < 0.3 * errs[0.05]

    def test_partial_sweep_keeps_bias_floor(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        sublist = (1, 2, 3, 4, 5)
        s0 = PhaseState(np.array([qf.center[0] + 1.0]), np.array([0.0]))
        errs = {}
        for eps in (0.05, 0.00625):
            sweeps = max(1, round(1.0 / (2 * eps)))
            rec = symmetric_sweep(s0, eps, sweeps, sublist, gentle_ctx)
            errs[eps] = endpoint_error(rec, exact_flow(qf, s0, rec.elapsed_time))
        assert errs[0.00625] > 0.5 * errs[0.05]

    def test_sweep_elapsed_time_is_two_eps_per_sweep(self, gentle_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        rec = symmetric_sweep(s0, 0.02, 7, tuple(range(1, 26)), gentle_ctx)
        assert rec.elapsed_time == pytest.approx(7 * 2 * 0.02, rel=1e-9)
        assert rec.n_steps == 7 * 50

    def test_integrate_delegates_sweep_schedules(self, gentle_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        rec = integrate(s0, 0.02, 100, SymmetricSweep(tuple(range(1, 26))), gentle_ctx)
        assert rec.n_steps == 100  # 2 sweeps of 50 sub-steps
        rec_p = integrate(s0, 0.02, 20, PartialSymmetricSweep((1, 2, 3, 4, 5)),
                          gentle_ctx)
        assert rec_p.n_steps == 20  # 2 sweeps of 10 sub-steps


class TestEndpointError:
    def test_identical_states(self, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        rec = integrate(s0, 0.01, 1, Full(), default_ctx)
        assert endpoint_error(rec, rec.final_state) == 0.0

    def test_three_four_five(self, default_ctx):
        s0 = PhaseState(np.array([0.0]), np.array([0.0]))
        rec = integrate(s0, 1e-9, 1, Full(), default_ctx)
        target = PhaseState(rec.final_state.q + 3.0, rec.final_state.p + 4.0)
        assert endpoint_error(rec, target) == pytest.approx(5.0, rel=1e-12)


class TestFastPropagation:
    def test_step_matrix_matches_leapfrog(self):
        lam, eps = 3.7, 0.05
        pot = QuadraticPotential(QuadraticForm(np.array([lam]), np.array([0.4])))
        s = PhaseState(np.array([1.1]), np.array([-0.6]))
        M = step_matrix(lam, eps)
        dq = s.q[0] - 0.4
        stepped = leapfrog_step(s, eps, pot)
        assert M[0, 0] * dq + M[0, 1] * s.p[0] + 0.4 == pytest.approx(
            stepped.q[0], abs=1e-14
        )
        assert M[1, 0] * dq + M[1, 1] * s.p[0] == pytest.approx(
            stepped.p[0], abs=1e-14
        )

    def test_step_matrix_determinant_exact(self):
        for lam, eps in [(1.0, 0.1), (126.0, 0.01), (0.5, 0.2)]:
            M = step_matrix(lam, eps)
            assert abs(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0] - 1.0) < 1e-15

    def test_matrix_power_binary_exponentiation(self):
        M = step_matrix(2.0, 0.05)
        direct = np.eye(2)
        for _ in range(13):
            direct = direct @ M
        assert np.allclose(matrix_power_2x2(M, 13), direct, atol=1e-14)

    def test_fixed_center_propagation_matches_recorded(self, gentle_ctx):
        qf = full_form(gentle_ctx)
        s0 = PhaseState(np.array([qf.center[0] + 0.8]), np.array([0.3]))
        rec = integrate(s0, 0.01, 137, Full(), gentle_ctx)
        fast = propagate_fixed_center(s0, 0.01, 137, gentle_ctx.lam, qf.center)
        assert np.max(np.abs(fast.q - rec.final_state.q)) < 1e-10
        assert np.max(np.abs(fast.p - rec.final_state.p)) < 1e-10

    def test_per_step_propagation_matches_recorded(self, default_ctx):
        s0 = PhaseState(np.array([0.4]), np.array([-0.1]))
        rec = integrate(s0, 0.01, 64, PerStepRandom((1, 2, 3, 4, 5)), default_ctx,
                        rng=substream(12, 3))
        js = [e.batch for e in rec.steps[1:]]
        centers = default_ctx.centers[[j - 1 for j in js]]
        fast = propagate_per_step_centers(s0, 0.01, default_ctx.lam, centers)
        assert np.max(np.abs(fast.q - rec.final_state.q)) < 1e-10
        assert np.max(np.abs(fast.p - rec.final_state.p)) < 1e-10


class TestRecordCsv:
    def test_narrow_and_wide_headers(self, tmp_path, default_ctx):
        s0 = PhaseState(np.array([1.0]), np.array([0.0]))
        rec = integrate(s0, 0.01, 3, FixedBatch(2), default_ctx)
        narrow = record_to_csv(rec, tmp_path / "n.csv")
        lines = narrow.read_text().splitlines()
        assert lines[0] == "step,batch,q0,p0,H_full,H_sched"
        assert len(lines) == 5
        assert lines[1].startswith("0,,")
        assert lines[2].split(",")[1] == "2"

    def test_wide_format_lists_all_coordinates(self, tmp_path):
        ctx = make_context(ModelConfig(D=3, seed=9, mu_true=(0.0, 1.0, 2.0)), J=25)
        s0 = PhaseState(np.zeros(3), np.ones(3))
        rec = integrate(s0, 0.01, 2, Full(), ctx)
        wide = record_to_csv(rec, tmp_path / "w.csv", wide=True)
        header = wide.read_text().splitlines()[0].split(",")
        assert header == [
            "step", "batch", "q0", "p0", "H_full", "H_sched",
            "q1", "q2", "p1", "p2",
        ]


def _distance(a: PhaseState, b: PhaseState) -> float:
    return float(np.sqrt(np.sum((a.q - b.q) ** 2) + np.sum((a.p - b.p) ** 2)))
