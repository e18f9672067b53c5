"""Completion construction: space-time controls, clocks, bridges, normalization."""

import json

import numpy as np
import pytest

from impulse_gc import (
    AcSegment,
    Box,
    Clock,
    ControlPath,
    Fiber,
    Jump,
    OrdinaryControl,
    Reparametrization,
    SpaceTimeControl,
    StarUnion,
    complete_graph,
    normalize_feasible,
    two_leg_bridge,
    whitney_bridge,
)


def _lshape(constant=1.5):
    arms = [Box([0.0, 0.0], [1.0, 3.0]), Box([0.0, 0.0], [3.0, 1.0])]
    return StarUnion(arms, center=[0.5, 0.5], whitney_constant=constant)


class TestSpaceTimeControl:
    def test_feasible_unit_speed(self):
        # pure control motion at speed one: t frozen, |du|/ds = 1
        stc = SpaceTimeControl([0.0, 1.0], [0.0, 0.0], [[0.0], [1.0]], [[0.0]], [[0.0]])
        assert stc.feasible
        assert stc.horizon == 1.0
        assert stc.time_horizon == 0.0
        assert stc.n_cells == 1

    def test_slow_cell_not_feasible(self):
        stc = SpaceTimeControl([0.0, 2.0], [0.0, 0.5], [[0.0], [0.5]], [[0.0]], [[0.0]])
        assert not stc.feasible
        assert stc.cell_speeds()[0] == pytest.approx(0.5)

    def test_speed_cap_enforced(self):
        with pytest.raises(ValueError, match="speed"):
            SpaceTimeControl([0.0, 1.0], [0.0, 1.0], [[0.0], [1.0]], [[0.0]], [[0.0]])

    def test_must_start_at_origin(self):
        with pytest.raises(ValueError, match="start"):
            SpaceTimeControl([0.1, 1.0], [0.0, 0.9], [[0.0], [0.0]], [[0.0]], [[0.0]])
        with pytest.raises(ValueError, match="start"):
            SpaceTimeControl([0.0, 1.0], [0.5, 1.0], [[0.0], [0.5]], [[0.0]], [[0.0]])

    def test_time_monotone(self):
        with pytest.raises(ValueError, match="nondecreasing"):
            SpaceTimeControl(
                [0.0, 1.0, 2.0], [0.0, 0.5, 0.2], [[0.0], [0.5], [0.5]], [[0.0], [0.0]], [[0.0], [0.0]]
            )

    def test_cell_input_lookup(self):
        stc = SpaceTimeControl(
            [0.0, 1.0, 2.0],
            [0.0, 1.0, 2.0],
            [[0.0], [0.0], [0.0]],
            [[3.0], [7.0]],
            [[-1.0], [-2.0]],
        )
        assert stc.v1_at(0.5)[0] == 3.0
        assert stc.v1_at(1.5)[0] == 7.0
        # node between cells belongs to the right cell, horizon clamps left
        assert stc.v1_at(1.0)[0] == 7.0
        assert stc.v1_at(2.0)[0] == 7.0
        assert stc.v2_at(0.5)[0] == -1.0

    def test_refined_exact(self):
        stc = SpaceTimeControl([0.0, 2.0], [0.0, 1.0], [[0.0], [1.0]], [[4.0]], [[5.0]])
        fine = stc.refined(min_cells=8)
        assert fine.n_cells >= 8
        assert fine.feasible == stc.feasible
        ss = np.linspace(0.0, 2.0, 33)
        assert np.allclose(fine.time_at(ss), stc.time_at(ss))
        assert np.allclose(fine.control_at(ss), stc.control_at(ss))
        assert np.all(fine.v1 == 4.0)
        assert np.all(fine.v2 == 5.0)

    def test_refined_fiber_spans(self):
        stc = SpaceTimeControl(
            [0.0, 1.0, 2.0, 3.0],
            [0.0, 1.0, 1.0, 2.0],
            [[0.0], [0.0], [1.0], [1.0]],
            [[0.0], [0.0], [0.0]],
            [[0.0], [0.0], [0.0]],
        )
        fine = stc.refined(fiber_spans=[(1.0, 2.0)], min_fiber_cells=6)
        inside = (fine.s[:-1] >= 1.0 - 1e-12) & (fine.s[1:] <= 2.0 + 1e-12)
        assert int(np.sum(inside)) >= 6

    def test_json_round_trip(self):
        stc = SpaceTimeControl(
            [0.0, 1.0, 2.5],
            [0.0, 0.0, 1.5],
            [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]],
            [[2.0], [3.0]],
            [[0.5], [0.25]],
        )
        back = SpaceTimeControl.from_json(json.loads(stc.dumps()))
        assert np.allclose(back.s, stc.s)
        assert np.allclose(back.t, stc.t)
        assert np.allclose(back.u, stc.u)
        assert np.allclose(back.v1, stc.v1)
        assert np.allclose(back.v2, stc.v2)

    def test_from_json_validation(self):
        with pytest.raises(ValueError, match="'S'"):
            SpaceTimeControl.from_json({"samples": [[0, 0, 0, 0, 0]]})
        good = SpaceTimeControl(
            [0.0, 1.0], [0.0, 0.5], [[0.0], [0.5]], [[0.0]], [[0.0]]
        ).to_json()
        bad = dict(good)
        bad["control_dim"] = 3
        with pytest.raises(ValueError, match="dimensions"):
            SpaceTimeControl.from_json(bad)
        lying = dict(good)
        lying["S"] = 9.0
        with pytest.raises(ValueError, match="disagrees"):
            SpaceTimeControl.from_json(lying)


class TestBridges:
    def test_straight_in_box(self):
        verts = whitney_bridge([0.0, 0.0], [1.0, 1.0], Box([0.0, 0.0], [1.0, 1.0]))
        assert verts.shape == (2, 2)
        assert np.allclose(verts, [[0.0, 0.0], [1.0, 1.0]])

    def test_equal_endpoints_single_vertex(self):
        verts = whitney_bridge([0.5, 0.5], [0.5, 0.5], Box([0.0, 0.0], [1.0, 1.0]))
        assert verts.shape == (1, 2)

    def test_star_union_routes_through_center(self):
        # arm tip to arm tip: straight chord leaves the L, the two legs
        # through (0.5, 0.5) have length 4 against a gap of sqrt(8)
        verts = whitney_bridge([0.5, 2.5], [2.5, 0.5], _lshape(1.5))
        assert verts.shape == (3, 2)
        assert np.allclose(verts[1], [0.5, 0.5])
        length = np.sum(np.linalg.norm(np.diff(verts, axis=0), axis=1))
        assert length == pytest.approx(4.0)

    def test_star_union_tight_constant_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            whitney_bridge([0.5, 2.5], [2.5, 0.5], _lshape(1.3))

    def test_endpoint_outside_set_rejected(self):
        with pytest.raises(ValueError, match="leaves the control set"):
            whitney_bridge([0.0, 0.0], [2.0, 2.0], Box([0.0, 0.0], [1.0, 1.0]))

    def test_center_endpoint_drops_leg(self):
        verts = whitney_bridge([0.5, 0.5], [2.5, 0.5], _lshape(1.5))
        assert verts.shape == (2, 2)

    def test_two_leg_staircase(self):
        verts = two_leg_bridge([0.0, 0.0], [1.0, 1.0])
        assert np.allclose(verts, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])

    def test_two_leg_skips_unchanged_coordinates(self):
        verts = two_leg_bridge([0.0, 5.0], [1.0, 5.0])
        assert verts.shape == (2, 2)
        verts = two_leg_bridge([2.0, 3.0], [2.0, 3.0])
        assert verts.shape == (1, 2)


class TestCompleteGraph:
    def test_unit_jump_clock(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        res = complete_graph(u)
        assert res.total_length == pytest.approx(2.0)
        assert res.spacetime.feasible
        clock = res.clock
        assert clock.value(0.25) == pytest.approx(0.25)
        assert clock.value(0.5) == pytest.approx(1.5)
        assert clock.left_value(0.5) == pytest.approx(0.5)
        assert clock.value(1.0) == pytest.approx(2.0)
        assert clock.jump_times() == [0.5]
        f = clock.fibers[0]
        assert (f.s_lo, f.s_hi) == (0.5, 1.5)

    def test_initial_jump_anchor(self):
        u = ControlPath([Jump(0.0, [0.0], [1.0]), AcSegment([0.0, 1.0], [[1.0], [1.0]])])
        res = complete_graph(u)
        clock = res.clock
        # clock(0) stays at zero so the first control value is the pre-jump one
        assert clock.value(0.0) == 0.0
        assert clock.left_value(0.0) == 0.0
        assert clock.value(1e-6) == pytest.approx(1.0 + 1e-6)
        assert clock.value(1.0) == pytest.approx(2.0)
        assert res.spacetime.control_at(0.0)[0] == 0.0
        assert res.spacetime.control_at(1.0)[0] == 1.0

    def test_terminal_jump_right_end(self):
        u = ControlPath([AcSegment([0.0, 1.0], [[0.0], [0.0]]), Jump(1.0, [0.0], [1.0])])
        res = complete_graph(u)
        clock = res.clock
        assert clock.value(1.0) == pytest.approx(2.0)
        assert clock.left_value(1.0) == pytest.approx(1.0)
        assert clock.horizon == 1.0
        assert clock.final_value == pytest.approx(2.0)

    def test_two_jump_path(self):
        u = ControlPath(
            [
                Jump(0.0, [0.0], [0.5]),
                AcSegment([0.0, 1.0], [[0.5], [0.5]]),
                Jump(1.0, [0.5], [1.5]),
            ]
        )
        res = complete_graph(u)
        assert res.total_length == pytest.approx(2.5)
        clock = res.clock
        assert clock.value(0.0) == 0.0
        assert clock.value(0.5) == pytest.approx(1.0)
        assert clock.value(1.0) == pytest.approx(2.5)
        assert clock.left_value(1.0) == pytest.approx(1.5)
        assert clock.jump_times() == [0.0, 1.0]

    def test_ac_control_no_fibers(self):
        u = ControlPath([AcSegment([0.0, 1.0, 2.0], [[0.0], [1.0], [0.0]])])
        res = complete_graph(u)
        assert res.clock.fibers == []
        assert res.total_length == pytest.approx(4.0)
        assert res.spacetime.feasible

    def test_input_frozen_on_fiber(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        v = OrdinaryControl([0.0, 0.5, 1.0], [[2.0], [8.0]])
        res = complete_graph(u, v)
        stc = res.spacetime
        # cells inside the fiber [0.5, 1.5] carry v evaluated at the jump time
        assert stc.v1_at(1.0)[0] == pytest.approx(8.0)
        assert stc.v2_at(1.0)[0] == pytest.approx(8.0)
        # before the jump the input follows its own cell value
        assert stc.v1_at(0.25)[0] == pytest.approx(2.0)

    def test_fiber_v2_override(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        v = OrdinaryControl([0.0, 1.0], [[2.0]])
        res = complete_graph(u, v, fiber_v2={0.5: 9.0})
        stc = res.spacetime
        assert stc.v2_at(1.0)[0] == pytest.approx(9.0)
        assert stc.v1_at(1.0)[0] == pytest.approx(2.0)
        # off the fiber both components still follow v
        assert stc.v2_at(0.25)[0] == pytest.approx(2.0)

    def test_bridges_recorded(self):
        u = ControlPath.step(1.0, 0.5, [0.0, 0.0], [1.0, 1.0])
        res = complete_graph(u, bridge=lambda t, a, b: two_leg_bridge(a, b))
        assert set(res.bridges) == {0.5}
        assert np.allclose(res.bridges[0.5], [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        assert res.total_length == pytest.approx(3.0)
        assert res.spacetime.feasible

    def test_bridge_mapping_and_mismatch(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        res = complete_graph(u, bridge={0.5: [[0.0], [0.25], [1.0]]})
        assert res.total_length == pytest.approx(2.0)
        with pytest.raises(ValueError, match="does not match"):
            complete_graph(u, bridge={0.5: [[0.0], [2.0]]})
        with pytest.raises(ValueError, match="no bridge"):
            complete_graph(u, bridge={0.75: [[0.0], [1.0]]})

    def test_control_set_bridging(self):
        u = ControlPath.step(1.0, 0.5, [0.5, 2.5], [2.5, 0.5])
        res = complete_graph(u, control_set=_lshape(1.5))
        # the star detour is longer than the jump, so S = T + bridge length
        assert res.total_length == pytest.approx(1.0 + 4.0)
        assert res.spacetime.feasible
        assert res.clock.fibers[0].width == pytest.approx(4.0)

    def test_horizon_mismatch_rejected(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        v = OrdinaryControl([0.0, 2.0], [[1.0]])
        with pytest.raises(ValueError, match="horizons"):
            complete_graph(u, v)

    def test_input_edges_split_cells(self):
        u = ControlPath([AcSegment([0.0, 2.0], [[0.0], [2.0]])])
        v = OrdinaryControl([0.0, 1.0, 2.0], [[3.0], [5.0]])
        res = complete_graph(u, v)
        stc = res.spacetime
        # the input switch at t=1 must land on a cell edge (s=2 on the graph)
        assert stc.v1_at(1.9)[0] == 3.0
        assert stc.v1_at(2.1)[0] == 5.0

    def test_min_fiber_cells_refinement(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        res = complete_graph(u, min_fiber_cells=8)
        stc = res.spacetime
        inside = (stc.s[:-1] >= 0.5 - 1e-12) & (stc.s[1:] <= 1.5 + 1e-12)
        assert int(np.sum(inside)) >= 8
        assert stc.feasible


class TestClockJson:
    def _round_trip(self, clock):
        back = Clock.from_json(json.loads(clock.dumps()))
        lo, hi = clock.domain
        ts = np.linspace(lo, hi, 41)
        assert np.allclose(back.values(ts), clock.values(ts))
        assert back.jump_times() == pytest.approx(clock.jump_times())
        for f, g in zip(back.fibers, clock.fibers):
            assert (f.s_lo, f.s_hi) == pytest.approx((g.s_lo, g.s_hi))
        return back

    def test_interior_jump(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        self._round_trip(complete_graph(u).clock)

    def test_initial_jump(self):
        u = ControlPath([Jump(0.0, [0.0], [1.0]), AcSegment([0.0, 1.0], [[1.0], [1.0]])])
        back = self._round_trip(complete_graph(u).clock)
        assert back.value(0.0) == 0.0

    def test_terminal_jump(self):
        u = ControlPath([AcSegment([0.0, 1.0], [[0.0], [0.0]]), Jump(1.0, [0.0], [1.0])])
        back = self._round_trip(complete_graph(u).clock)
        assert back.value(1.0) == pytest.approx(2.0)

    def test_initial_and_terminal_jumps(self):
        u = ControlPath(
            [
                Jump(0.0, [0.0], [0.5]),
                AcSegment([0.0, 1.0], [[0.5], [0.5]]),
                Jump(1.0, [0.5], [1.5]),
            ]
        )
        self._round_trip(complete_graph(u).clock)

    def test_needs_two_pairs(self):
        with pytest.raises(ValueError, match="two pairs"):
            Clock.from_json([[0.0, 0.0]])


class TestClockBasics:
    def test_domain_guard(self):
        clock = complete_graph(ControlPath.step(1.0, 0.5, [0.0], [1.0])).clock
        with pytest.raises(ValueError, match="domain"):
            clock.value(1.5)

    def test_fiber_width_positive(self):
        with pytest.raises(ValueError, match="positive width"):
            Fiber(0.5, 1.0, 1.0)

    def test_stretch_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            Clock([([0.0, 0.0], [0.0, 1.0])])
        with pytest.raises(ValueError, match="at least one stretch"):
            Clock([])


class TestNormalize:
    def test_half_speed_compresses(self):
        stc = SpaceTimeControl([0.0, 4.0], [0.0, 1.0], [[0.0], [1.0]], [[0.0]], [[0.0]])
        out, rep = normalize_feasible(stc)
        assert out.feasible
        assert out.horizon == pytest.approx(2.0)
        assert out.time_horizon == pytest.approx(1.0)
        assert rep.forward(4.0) == pytest.approx(2.0)
        assert rep.right_inverse(2.0) == pytest.approx(4.0)

    def test_dead_arc_excised(self):
        stc = SpaceTimeControl(
            [0.0, 2.0, 3.0, 5.0],
            [0.0, 1.0, 1.0, 2.0],
            [[0.0], [1.0], [1.0], [2.0]],
            [[4.0], [5.0], [6.0]],
            [[4.0], [5.0], [6.0]],
        )
        out, rep = normalize_feasible(stc)
        assert out.feasible
        assert out.n_cells == 2
        assert out.horizon == pytest.approx(4.0)
        # the dead cell's input row disappears with it
        assert np.allclose(out.v1[:, 0], [4.0, 6.0])
        # both ends of the dead arc land on the same new parameter,
        # and the right inverse picks the rightmost preimage
        assert rep.forward(2.0) == pytest.approx(2.0)
        assert rep.forward(3.0) == pytest.approx(2.0)
        assert rep.right_inverse(2.0) == pytest.approx(3.0)

    def test_feasible_control_untouched(self):
        res = complete_graph(ControlPath.step(1.0, 0.5, [0.0], [1.0]))
        out, rep = normalize_feasible(res.spacetime)
        assert out.horizon == pytest.approx(res.spacetime.horizon)
        ss = np.linspace(0.0, 2.0, 21)
        assert np.allclose(rep.forward(ss), ss)

    def test_zero_length_rejected(self):
        stc = SpaceTimeControl([0.0, 1.0], [0.0, 0.0], [[0.0], [0.0]], [[0.0]], [[0.0]])
        assert not stc.feasible
        with pytest.raises(ValueError, match="zero total length"):
            normalize_feasible(stc)

    def test_apply_to_clock_transports_fibers(self):
        u = ControlPath.step(1.0, 0.5, [0.0], [1.0])
        res = complete_graph(u)
        # slow the whole graph down by doubling the parameter, then normalize
        stc = res.spacetime
        slowed = SpaceTimeControl(2.0 * stc.s, stc.t, stc.u, stc.v1, stc.v2)
        slow_clock = Clock(
            [(t, 2.0 * s) for t, s in res.clock.stretches],
            [Fiber(f.time, 2.0 * f.s_lo, 2.0 * f.s_hi) for f in res.clock.fibers],
        )
        out, rep = normalize_feasible(slowed)
        moved = rep.apply_to_clock(slow_clock)
        assert out.feasible
        ts = np.linspace(0.0, 1.0, 21)
        assert np.allclose(moved.values(ts), res.clock.values(ts))
        assert moved.fibers[0].width == pytest.approx(1.0)

    def test_apply_to_clock_drops_collapsed_fiber(self):
        rep = Reparametrization(np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.0, 1.0, 1.0, 2.0]))
        clock = Clock(
            [([0.0, 0.5], [0.0, 1.0]), ([0.5, 1.0], [2.0, 3.0])],
            [Fiber(0.5, 1.0, 2.0)],
        )
        moved = rep.apply_to_clock(clock)
        assert moved.fibers == []
        assert moved.value(1.0) == pytest.approx(2.0)
