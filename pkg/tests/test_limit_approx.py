"""Approximating sequences: ramp clocks, compositions, bounds, diagnostics."""

import math

import numpy as np
import pytest

from impulse_gc import (
    AcClock,
    AcSegment,
    ApproxRecord,
    ApproxSequenceReport,
    Box,
    ControlPath,
    IntegratorConfig,
    Jump,
    Modulus,
    OrdinaryControl,
    Trajectory,
    VectorFieldSet,
    approximate_sequence,
    brockett_fields,
    check_equiuniformity,
    check_psi2_condition,
    complete_graph,
    compose_controls,
    default_test_grid,
    gronwall_bound,
    ramp_clock,
    ramp_windows,
    solve_caratheodory,
    time_side_control,
    time_side_input,
    two_leg_bridge,
    whitney_tail_fix,
)


def _step_completion(v=None, **kw):
    u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
    return complete_graph(u, v, **kw)


class TestAcClock:
    def test_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            AcClock([0.0, 1.0], [0.0, 0.0])
        with pytest.raises(ValueError, match="1-D"):
            AcClock([0.0], [0.0])

    def test_value_inverse_round_trip(self):
        ac = AcClock([0.0, 0.5, 1.0], [0.0, 1.5, 2.0])
        ts = np.linspace(0.0, 1.0, 17)
        assert np.allclose(ac.inverse(ac.value(ts)), ts)
        assert ac.min_slope() == pytest.approx(1.0)
        assert ac.domain == (0.0, 1.0)
        assert ac.range == (0.0, 2.0)

    def test_domain_guards(self):
        ac = AcClock([0.0, 1.0], [0.0, 2.0])
        with pytest.raises(ValueError, match="domain"):
            ac.value(1.5)
        with pytest.raises(ValueError, match="range"):
            ac.inverse(2.5)


class TestRampWindows:
    def test_interior_jump_window(self):
        clock = _step_completion().clock
        windows = ramp_windows(clock, 10)
        assert len(windows) == 1
        wlo, whi, f = windows[0]
        # width 1 fiber: delta = w / (2k) = 0.05, placed left of the jump
        assert (wlo, whi) == pytest.approx((0.45, 0.5))
        assert f.time == 0.5

    def test_initial_jump_window_opens_right(self):
        u = ControlPath([Jump(0.0, [0.0], [1.0]), AcSegment([0.0, 1.0], [[1.0], [1.0]])])
        clock = complete_graph(u).clock
        (wlo, whi, f) = ramp_windows(clock, 10)[0]
        assert (wlo, whi) == pytest.approx((0.0, 0.05))

    def test_half_gap_cap(self):
        u = ControlPath(
            [
                AcSegment([0.0, 0.4], [[0.0], [0.0]]),
                Jump(0.4, [0.0], [1.0]),
                AcSegment([0.4, 0.5], [[1.0], [1.0]]),
                Jump(0.5, [1.0], [2.0]),
                AcSegment([0.5, 1.0], [[2.0], [2.0]]),
            ]
        )
        clock = complete_graph(u).clock
        windows = ramp_windows(clock, 1)
        # at k=1 the nominal half-width 0.5 exceeds half the 0.1 gap
        assert windows[1][1] - windows[1][0] == pytest.approx(0.05)

    def test_k_validation(self):
        clock = _step_completion().clock
        with pytest.raises(ValueError, match="at least 1"):
            ramp_windows(clock, 0)


class TestRampClock:
    def test_matches_clock_off_windows(self):
        clock = _step_completion().clock
        ac = ramp_clock(clock, 10)
        for t in (0.0, 0.2, 0.45, 0.5, 0.7, 1.0):
            assert ac.value(t) == pytest.approx(clock.value(t), abs=1e-12)

    def test_window_slope(self):
        clock = _step_completion().clock
        ac = ramp_clock(clock, 10)
        slope = (ac.value(0.5) - ac.value(0.45)) / 0.05
        assert slope == pytest.approx(21.0)
        assert ac.min_slope() >= 1.0 - 1e-12

    def test_pointwise_convergence_at_fixed_time(self):
        clock = _step_completion().clock
        gaps = []
        for k in (1, 4, 16, 64):
            ac = ramp_clock(clock, k)
            gaps.append(abs(ac.value(0.49) - clock.value(0.49)))
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[-1] == 0.0

    def test_initial_jump_anchor_survives(self):
        u = ControlPath([Jump(0.0, [0.0], [1.0]), AcSegment([0.0, 1.0], [[1.0], [1.0]])])
        clock = complete_graph(u).clock
        ac = ramp_clock(clock, 10)
        assert ac.value(0.0) == pytest.approx(0.0)
        assert ac.value(0.05) == pytest.approx(clock.value(0.05))


class TestComposeControls:
    def test_scalar_variation_exact(self):
        res = _step_completion()
        ac = ramp_clock(res.clock, 4)
        u_k, v_k = compose_controls(res.spacetime, ac)
        assert u_k.is_absolutely_continuous
        assert u_k.total_variation == 1.0
        # off the window the composition reproduces the control
        assert u_k.value(0.2)[0] == 0.0
        assert u_k.value(0.8)[0] == 1.0

    def test_staircase_variation_exact(self):
        u = ControlPath.step(1.0, 0.5, [0.0, 0.0], [1.0, 1.0])
        res = complete_graph(u, bridge=lambda t, a, b: two_leg_bridge(a, b))
        ac = ramp_clock(res.clock, 8)
        u_k, _ = compose_controls(res.spacetime, ac)
        # corner preimages round trip through the clock at ulp accuracy
        assert u_k.total_variation == pytest.approx(2.0, abs=1e-12)

    def test_input_composition(self):
        v = OrdinaryControl([0.0, 0.5, 1.0], [[2.0], [8.0]])
        res = _step_completion(v)
        ac = ramp_clock(res.clock, 10)
        _, v_k = compose_controls(res.spacetime, ac)
        assert v_k.value1(0.2)[0] == pytest.approx(2.0)
        # inside the window the pulled-back input is the frozen fiber value
        assert v_k.value1(0.47)[0] == pytest.approx(8.0)

    def test_requires_full_range(self):
        res = _step_completion()
        ac = AcClock([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError, match="full parameter range"):
            compose_controls(res.spacetime, ac)


class TestTimeSide:
    def test_control_round_trip(self):
        u = ControlPath(
            [
                AcSegment([0.0, 0.5], [[0.0], [0.25]]),
                Jump(0.5, [0.25], [1.0]),
                AcSegment([0.5, 1.0], [[1.0], [1.0]]),
            ]
        )
        res = complete_graph(u)
        back = time_side_control(res.spacetime, res.clock)
        assert back.jump_times() == pytest.approx([0.5])
        ts = np.linspace(0.0, 1.0, 41)
        assert np.allclose(back.values(ts), u.values(ts))
        assert back.total_variation == pytest.approx(u.total_variation)

    def test_input_round_trip(self):
        v = OrdinaryControl([0.0, 0.25, 1.0], [[3.0], [-1.0]])
        res = _step_completion(v)
        back = time_side_input(res.spacetime, res.clock)
        mids = np.array([0.1, 0.3, 0.6, 0.9])
        assert np.allclose(back.values1(mids), v.values1(mids))


class TestPsi2Condition:
    def test_proof_construction_is_exact(self):
        v = OrdinaryControl([0.0, 0.5, 1.0], [[2.0], [8.0]], [[1.0], [0.5]])
        res = _step_completion(v)
        ac = ramp_clock(res.clock, 6)
        u_k, v_k = compose_controls(res.spacetime, ac)
        assert check_psi2_condition(v_k, ac, res.spacetime, u_k.total_variation) == 0.0

    def test_constant_mismatch_scales_with_window(self):
        v = OrdinaryControl([0.0, 1.0], [[0.0]], [[1.0]])
        res = _step_completion(v)
        ac = ramp_clock(res.clock, 6)
        v_zero = OrdinaryControl(ac.t, np.zeros((ac.t.size - 1, 1)))
        gap_full = check_psi2_condition(v_zero, ac, res.spacetime, 1.0)
        assert gap_full == pytest.approx(2.0)
        gap_half = check_psi2_condition(v_zero, ac, res.spacetime, 0.5)
        assert gap_half == pytest.approx(1.5)


def _input_driven_fields(lipschitz=0.0):
    return VectorFieldSet(
        n=1,
        m=1,
        g0=lambda x, u, v: np.array([v[0]]),
        g_impulse=[lambda x, u, v: np.ones(1)],
        lipschitz=lipschitz,
        growth=5.0,
        v_modulus=Modulus.linear(1.0),
    )


class TestGronwallBound:
    def _solutions(self, fields, v, v_k):
        u = ControlPath.constant([0.0], 1.0)
        grid = np.linspace(0.0, 1.0, 21)
        x_v = solve_caratheodory(fields, [0.0], u, v, grid=grid)
        x_vk = solve_caratheodory(fields, [0.0], u, v_k, grid=grid)
        return u, grid, x_v, x_vk

    def test_bound_holds_with_unit_modulus(self):
        fields = _input_driven_fields()
        v = OrdinaryControl([0.0, 1.0], [[1.0]])
        v_k = OrdinaryControl([0.0, 0.5, 1.0], [[1.5], [0.5]])
        u, grid, x_v, x_vk = self._solutions(fields, v, v_k)
        rec = gronwall_bound(fields, u, v_k, v, x_v, x_vk, grid)
        assert rec.rhs == pytest.approx(0.5)
        assert rec.tolerance == pytest.approx(1e-6)
        assert rec.lhs == pytest.approx(0.25)
        assert rec.holds

    def test_identical_inputs_zero_bound(self):
        fields = _input_driven_fields()
        v = OrdinaryControl([0.0, 1.0], [[1.0]])
        u, grid, x_v, x_vk = self._solutions(fields, v, v)
        rec = gronwall_bound(fields, u, v, v, x_v, x_vk, grid)
        assert rec.rhs == 0.0
        assert rec.log_rhs == -math.inf
        assert rec.holds

    def test_overflowing_exponent_reports_infinite_bound(self):
        fields = _input_driven_fields(lipschitz=500.0)
        v = OrdinaryControl([0.0, 1.0], [[1.0]])
        v_k = OrdinaryControl([0.0, 0.5, 1.0], [[1.5], [0.5]])
        u, grid, x_v, x_vk = self._solutions(fields, v, v_k)
        rec = gronwall_bound(fields, u, v_k, v, x_v, x_vk, grid)
        assert math.isinf(rec.rhs)
        assert math.isinf(rec.tolerance)
        assert rec.holds

    def test_v2_dependent_channels_rejected(self):
        fields = VectorFieldSet(
            n=1,
            m=1,
            g0=lambda x, u, v: np.zeros(1),
            g_impulse=[lambda x, u, v: np.array([v[0]])],
            lipschitz=1.0,
            growth=5.0,
            v2_active=True,
        )
        v = OrdinaryControl([0.0, 1.0], [[1.0]])
        u = ControlPath.constant([0.0], 1.0)
        x = solve_caratheodory(fields, [0.0], u, v)
        with pytest.raises(ValueError, match="independent"):
            gronwall_bound(fields, u, v, v, x, x)


class TestWhitneyTailFix:
    def test_scalar_tail(self):
        u = ControlPath.constant([0.0], 1.0)
        box = Box([0.0], [1.0])
        fixed = whitney_tail_fix(u, 0.9, [0.6], box)
        assert fixed.value(0.9)[0] == pytest.approx(0.0)
        assert fixed.value(1.0)[0] == pytest.approx(0.6)
        assert fixed.total_variation == pytest.approx(0.6)
        assert fixed.is_absolutely_continuous

    def test_planar_tail_adds_diagonal_variation(self):
        u = ControlPath.constant([0.0, 0.0], 1.0)
        box = Box([0.0, 0.0], [1.0, 1.0])
        fixed = whitney_tail_fix(u, 0.5, [1.0, 1.0], box)
        assert fixed.total_variation == pytest.approx(math.sqrt(2.0))

    def test_on_target_tail_is_constant(self):
        u = ControlPath.constant([0.25], 1.0)
        fixed = whitney_tail_fix(u, 0.5, [0.25], Box([0.0], [1.0]))
        assert fixed.total_variation == 0.0
        assert fixed.value(1.0)[0] == 0.25

    def test_validation(self):
        u = ControlPath.constant([0.0], 1.0)
        box = Box([0.0], [1.0])
        with pytest.raises(ValueError, match="strictly before"):
            whitney_tail_fix(u, 1.0, [0.5], box)
        bv = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        with pytest.raises(ValueError, match="absolutely continuous"):
            whitney_tail_fix(bv, 0.9, [0.5], box)


class TestEquiuniformity:
    def _ramp_pair(self):
        u = ControlPath([AcSegment([0.0, 1.0], [[0.0], [1.0]])])
        ts = np.linspace(0.0, 1.0, 11)
        x = Trajectory(ts, np.zeros((ts.size, 1)))
        return x, u

    def test_matched_length_deviation(self):
        records = check_equiuniformity([self._ramp_pair()], [1.0])
        (rec,) = records
        assert rec.reached
        # t + Var reaches 1 at t = 0.5 on the unit ramp
        assert rec.tau == pytest.approx(0.5)
        assert rec.deviation == pytest.approx(0.5)

    def test_threshold_beyond_length_unreached(self):
        records = check_equiuniformity([self._ramp_pair()], [1.0, 5.0])
        assert records[0].reached
        assert not records[1].reached
        assert math.isnan(records[1].tau)

    def test_thresholds_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            check_equiuniformity([self._ramp_pair()], [2.0, 1.0])


class TestDefaultTestGrid:
    def test_window_interior_excluded(self):
        clock = _step_completion().clock
        grid = default_test_grid(clock, 10, n=801)
        inside = (grid > 0.45 + 1e-12) & (grid < 0.5 - 1e-12)
        assert not np.any(inside)
        assert np.any(np.abs(grid - 0.5) < 1e-15)
        assert grid[0] == 0.0 and grid[-1] == 1.0


class TestApproximateSequence:
    def test_validation(self):
        res = _step_completion()
        fields = _input_driven_fields()
        with pytest.raises(ValueError, match="strictly increasing"):
            approximate_sequence(fields, [0.0], res.spacetime, res.clock, [4, 2])
        with pytest.raises(ValueError, match="nonempty"):
            approximate_sequence(fields, [0.0], res.spacetime, res.clock, [])

    def test_report_validation(self):
        rec = ApproxRecord(2, 1.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError, match="at least one"):
            ApproxSequenceReport([], [0.0, 1.0])
        bad = ApproxRecord(1, 1.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError, match="nonnegative"):
            ApproxSequenceReport([bad], [0.0, 1.0])
        with pytest.raises(ValueError, match="sorted"):
            ApproxSequenceReport([rec, rec], [0.0, 1.0])

    def test_brockett_sweep_converges(self):
        fields = brockett_fields()
        u = ControlPath.step(1.0, 0.5, [0.0, 0.0], [1.0, 1.0])
        res = complete_graph(u, bridge=lambda t, a, b: two_leg_bridge(a, b))
        cfg = IntegratorConfig(steps_per_unit=256)
        report = approximate_sequence(
            fields, [0.0, 0.0, 0.0], res.spacetime, res.clock, [2, 8], cfg=cfg
        )
        assert [r.k for r in report.records] == [2, 8]
        sups = report.sup_distances()
        assert sups[1] <= sups[0]
        for r in report.records:
            assert r.var_uk == pytest.approx(2.0)
            assert r.psi2_gap == pytest.approx(0.0, abs=1e-12)
            assert r.l1_u >= 0.0
            assert r.gronwall_lhs <= r.gronwall_rhs + 1e-6
        rows = report.csv_rows()
        assert len(rows) == 2 and len(rows[0]) == len(report.csv_header)
        payload = report.to_json()
        assert payload["columns"][0] == "k"
        assert payload["records"][0]["k"] == 2
