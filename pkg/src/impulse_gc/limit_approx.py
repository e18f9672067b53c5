"""Absolutely continuous approximation of graph-completion solutions.

A jumpy clock is approximated by strictly increasing piecewise-linear maps
whose slope never drops below one: each fiber skip of the clock is replaced
by a steep ramp in a shrinking time window next to the jump.  Composing the
completed graph with these maps yields absolutely continuous controls whose
variation equals the graph's exactly, together with the matching ordinary
inputs.  The rest of the module is diagnostics for the resulting sequences:
sup-distance sweeps, L1 gaps, the fiber-input discrepancy after a change of
variables to the graph parameter, a Gronwall-type comparison bound, a
bounded-variation tail repair, and an equiuniformity probe near the final
time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bv_controls import AcSegment, ControlPath, Jump, OrdinaryControl, sup_distance
from .graph_completion import whitney_bridge
from .ode_engine import (
    IntegratorConfig,
    reconstruct_solution,
    solve_caratheodory,
    solve_spacetime,
)

__all__ = [
    "AcClock",
    "ramp_windows",
    "ramp_clock",
    "compose_controls",
    "time_side_control",
    "time_side_input",
    "default_test_grid",
    "ApproxRecord",
    "ApproxSequenceReport",
    "approximate_sequence",
    "check_psi2_condition",
    "GronwallRecord",
    "gronwall_bound",
    "whitney_tail_fix",
    "EquiuniformityRecord",
    "check_equiuniformity",
]

_EXP_CAP = 700.0  # beyond this the bound is reported as infinite


class AcClock:
    """Piecewise-linear strictly increasing map from time to the parameter."""

    def __init__(self, t_nodes, s_nodes):
        t_nodes = np.asarray(t_nodes, dtype=float)
        s_nodes = np.asarray(s_nodes, dtype=float)
        if t_nodes.shape != s_nodes.shape or t_nodes.ndim != 1 or t_nodes.size < 2:
            raise ValueError("need equal-length 1-D node arrays with >= 2 entries")
        if np.any(np.diff(t_nodes) <= 0) or np.any(np.diff(s_nodes) <= 0):
            raise ValueError("clock nodes must be strictly increasing")
        self.t = t_nodes
        self.s = s_nodes

    @property
    def domain(self):
        return float(self.t[0]), float(self.t[-1])

    @property
    def range(self):
        return float(self.s[0]), float(self.s[-1])

    def min_slope(self):
        return float(np.min(np.diff(self.s) / np.diff(self.t)))

    def value(self, ts):
        ts = np.asarray(ts, dtype=float)
        lo, hi = self.domain
        if np.any(ts < lo - 1e-9) or np.any(ts > hi + 1e-9):
            raise ValueError("time outside the clock domain")
        return np.interp(np.clip(ts, lo, hi), self.t, self.s)

    def inverse(self, ss):
        ss = np.asarray(ss, dtype=float)
        lo, hi = self.range
        if np.any(ss < lo - 1e-9) or np.any(ss > hi + 1e-9):
            raise ValueError("parameter outside the clock range")
        return np.interp(np.clip(ss, lo, hi), self.s, self.t)


def ramp_windows(clock, k):
    """Time windows in which the k-th approximating clock differs from ``clock``.

    Each fiber of width ``w`` gets a window of width
    ``min(w / (2k), half the gap to the adjacent jump or domain end)``, placed
    left of the jump time, except for a jump at the domain start whose window
    opens to the right so the initial anchor survives.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    lo, hi = clock.domain
    times = [f.time for f in clock.fibers]
    out = []
    for i, f in enumerate(clock.fibers):
        if f.time <= lo + 1e-15:
            nxt = times[i + 1] if i + 1 < len(times) else hi
            delta = min(f.width / (2.0 * k), 0.5 * (nxt - f.time))
            window = (f.time, f.time + delta, f)
        else:
            prev = times[i - 1] if i > 0 else lo
            delta = min(f.width / (2.0 * k), 0.5 * (f.time - prev))
            window = (f.time - delta, f.time, f)
        if delta <= 0:
            raise ValueError("fiber has no room for a ramp window")
        out.append(window)
    return out


def ramp_clock(clock, k):
    """Strictly increasing AC surrogate for a jumpy clock.

    Agrees with ``clock`` outside the ramp windows and rises linearly across
    each window onto the fiber's far end, so the slope is at least one
    everywhere and the surrogate converges pointwise to ``clock`` as ``k``
    grows (with exact agreement at every jump time).
    """
    windows = ramp_windows(clock, k)
    lo = clock.domain[0]

    def keep(t):
        for wlo, whi, f in windows:
            if f.time <= lo + 1e-15:
                if wlo - 1e-15 <= t < whi - 1e-15:
                    return False
            elif wlo + 1e-15 < t <= whi + 1e-15:
                return False
        return True

    pts = []
    for t_nodes, s_nodes in clock.stretches:
        pts.extend((float(t), float(s)) for t, s in zip(t_nodes, s_nodes) if keep(t))
    for wlo, whi, f in windows:
        if f.time <= lo + 1e-15:
            pts.append((wlo, f.s_lo))
            pts.append((whi, float(clock.value(whi))))
        else:
            pts.append((wlo, float(clock.value(wlo))))
            pts.append((whi, f.s_hi))
    pts.sort()
    t_out, s_out = [], []
    for t, s in pts:
        if t_out and t - t_out[-1] <= 1e-15:
            continue
        t_out.append(t)
        s_out.append(s)
    ac = AcClock(np.asarray(t_out), np.asarray(s_out))
    if ac.min_slope() < 1.0 - 1e-9:
        raise AssertionError("ramp construction lost the unit slope floor")
    return ac


def _dedupe(knots, lo, hi):
    knots = np.union1d(np.clip(knots, lo, hi), [lo, hi])
    keep = np.concatenate([[True], np.diff(knots) > 1e-12])
    knots = knots[keep]
    knots[-1] = hi
    return knots


def compose_controls(stc, ac_clock):
    """Pull a space-time control back to time through an AC clock.

    The control polyline is sampled at the clock nodes and at the preimages
    of every graph node, so its total variation equals the graph's exactly;
    the ordinary inputs are exact piecewise-constant compositions.
    """
    t0, T = ac_clock.domain
    s_lo, s_hi = ac_clock.range
    if abs(t0) > 1e-12 or abs(s_lo) > 1e-12 or abs(s_hi - stc.horizon) > 1e-9:
        raise ValueError("clock must map [0, T] onto the full parameter range")
    knots = _dedupe(np.union1d(ac_clock.t, ac_clock.inverse(stc.s)), 0.0, T)
    svals = ac_clock.value(knots)
    u_k = ControlPath.from_samples(knots, stc.control_at(svals))
    mid_s = ac_clock.value(0.5 * (knots[:-1] + knots[1:]))
    v_k = OrdinaryControl(knots, stc.v1_at(mid_s), stc.v2_at(mid_s))
    return u_k, v_k


def time_side_control(stc, clock):
    """The BV control in time represented by a completion: AC stretches from
    the graph between fibers, one jump per fiber."""
    pieces = []
    for t_nodes, s_nodes in clock.stretches:
        if t_nodes.size < 2:
            continue
        inside = stc.s[(stc.s > s_nodes[0] + 1e-12) & (stc.s < s_nodes[-1] - 1e-12)]
        ts = np.union1d(t_nodes, np.interp(inside, s_nodes, t_nodes))
        ss = np.interp(ts, t_nodes, s_nodes)
        pieces.append((float(ts[0]), 1, AcSegment(ts, stc.control_at(ss))))
    for f in clock.fibers:
        jump = Jump(f.time, stc.control_at(f.s_lo), stc.control_at(f.s_hi))
        pieces.append((f.time, 0, jump))
    pieces.sort(key=lambda entry: (entry[0], entry[1]))
    return ControlPath([p for _, _, p in pieces])


def time_side_input(stc, clock):
    """The ordinary input in time represented by a completion (fibers carry
    no time measure, so only the stretches contribute cells)."""
    edges = []
    for t_nodes, s_nodes in clock.stretches:
        if t_nodes.size < 2:
            edges.append(float(t_nodes[0]))
            continue
        inside = stc.s[(stc.s > s_nodes[0] + 1e-12) & (stc.s < s_nodes[-1] - 1e-12)]
        edges.extend(np.union1d(t_nodes, np.interp(inside, s_nodes, t_nodes)).tolist())
    edges = _dedupe(np.asarray(sorted(set(edges))), clock.domain[0], clock.horizon)
    mids = 0.5 * (edges[:-1] + edges[1:])
    mid_s = clock.values(mids)
    return OrdinaryControl(edges, stc.v1_at(mid_s), stc.v2_at(mid_s))


def default_test_grid(clock, k, n=801):
    """Uniform grid on the clock domain with points inside the k-th ramp
    windows removed (jump times themselves stay), so sup-distance probes
    measure convergence rather than the transient inside the ramps."""
    lo, hi = clock.domain
    base = np.linspace(lo, hi, n)
    windows = ramp_windows(clock, k)
    keep = np.ones(base.size, dtype=bool)
    for wlo, whi, f in windows:
        inside = (base > wlo - 1e-12) & (base < whi + 1e-12)
        inside &= np.abs(base - f.time) > 1e-12
        keep &= ~inside
    grid = np.union1d(base[keep], [f.time for f in clock.fibers] + [lo, hi])
    return grid


def _l1_control_distance(a, b, refine=8):
    """L1 distance between two control paths by midpoint quadrature on the
    union of their breakpoints (jumps are null sets and do not contribute)."""
    if abs(a.horizon - b.horizon) > 1e-9:
        raise ValueError("control horizons disagree")
    edges = np.union1d(a.breakpoints(), b.breakpoints())
    fine = np.concatenate(
        [np.linspace(edges[i], edges[i + 1], refine + 1)[:-1] for i in range(edges.size - 1)]
        + [edges[-1:]]
    )
    mids = 0.5 * (fine[:-1] + fine[1:])
    gap = np.linalg.norm(a.values(mids) - b.values(mids), axis=1)
    return float(np.sum(gap * np.diff(fine)))


def check_psi2_condition(v_k, ac_clock, stc, var_budget):
    """L1 gap, over the graph parameter, between the pulled-back channel
    input and the graph's own channel input.

    The comparison window is ``[0, T + var_budget]`` intersected with the
    clock range; with the budget equal to the pulled-back control's variation
    the window is exactly ``[0, S]``.  Exact for piecewise-constant data.
    """
    T = ac_clock.domain[1]
    W = min(T + float(var_budget), ac_clock.range[1], stc.horizon)
    if W <= 0:
        return 0.0
    s_edges = np.union1d(ac_clock.value(v_k.edges), stc.s)
    s_edges = _dedupe(s_edges[(s_edges >= -1e-12) & (s_edges <= W + 1e-12)], 0.0, W)
    mids = 0.5 * (s_edges[:-1] + s_edges[1:])
    a = v_k.values2(ac_clock.inverse(mids))
    b = stc.v2_at(mids)
    gap = np.linalg.norm(a - b, axis=1)
    return float(np.sum(gap * np.diff(s_edges)))


@dataclass(frozen=True)
class GronwallRecord:
    lhs: float
    rhs: float
    log_rhs: float
    tolerance: float

    @property
    def holds(self):
        if math.isinf(self.rhs) or math.isinf(self.tolerance):
            return True
        return self.lhs <= self.rhs + self.tolerance


def gronwall_bound(fields, u_k, v_k, v, x_with_v, x_with_vk, grid=None):
    """Comparison bound between solutions sharing a control but differing in
    the ordinary input.

    The left side is the sup-distance of the two trajectories; the right side
    is the integrated input modulus amplified by the exponential of
    ``(m + 1) * L * (T + Var(u_k))``, evaluated in log space because the
    exponent overflows for rough controls (the bound is then infinite and
    holds trivially).  Requires channels that ignore the ordinary input.
    """
    if fields.v2_active:
        raise ValueError("comparison bound needs channels independent of the ordinary input")
    lhs = sup_distance(x_with_v, x_with_vk, grid)
    edges = np.union1d(v_k.edges, v.edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    gap = np.linalg.norm(v_k.values1(mids) - v.values1(mids), axis=1)
    integral = float(np.sum(fields.v_modulus(gap) * np.diff(edges)))
    exponent = (fields.m + 1) * fields.lipschitz * (u_k.horizon + u_k.total_variation)
    if integral > 0:
        log_rhs = math.log(integral) + exponent
        rhs = math.exp(log_rhs) if log_rhs < _EXP_CAP else math.inf
    else:
        log_rhs = -math.inf
        rhs = 0.0
    tolerance = 1e-6 * (math.exp(exponent) if exponent < _EXP_CAP else math.inf)
    return GronwallRecord(lhs, rhs, log_rhs, tolerance)


def whitney_tail_fix(u_k, tau, target, control_set):
    """Replace the tail of an AC control with a bridge to a prescribed value.

    The result equals ``u_k`` on ``[0, tau]`` and follows the time-rescaled
    bridge from ``u_k(tau)`` to ``target`` on ``[tau, T]``; the added
    variation is the bridge length, at most the set's bridging constant times
    the distance covered.
    """
    T = u_k.horizon
    if not tau < T - 1e-12:
        raise ValueError("the repair time must lie strictly before the horizon")
    if not u_k.is_absolutely_continuous:
        raise ValueError("tail repair expects an absolutely continuous control")
    anchor = u_k.value(tau)
    verts = whitney_bridge(anchor, np.asarray(target, dtype=float), control_set)
    head = u_k.restrict(0.0, tau)
    if verts.shape[0] == 1:
        tail = AcSegment([tau, T], np.vstack([anchor, anchor]))
    else:
        legs = np.linalg.norm(np.diff(verts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(legs)])
        tail = AcSegment(tau + (T - tau) * cum / cum[-1], verts)
    return ControlPath(head.pieces + [tail])


@dataclass(frozen=True)
class EquiuniformityRecord:
    threshold: float
    index: int
    reached: bool
    tau: float
    deviation: float


def check_equiuniformity(items, thresholds):
    """Deviation from the final state/control value at matched graph lengths.

    For each pair ``(x_k, u_k)`` and each threshold, finds the time at which
    ``t + Var_[0,t](u_k)`` reaches the threshold and reports
    ``max(|x_k - x_k(T)|, |u_k - u_k(T)|)`` there.  Thresholds beyond the
    pair's total length are recorded as unreached.  Diagnostic only.
    """
    thresholds = [float(s) for s in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    out = []
    for idx, (x_k, u_k) in enumerate(items):
        T = u_k.horizon
        bp = u_k.breakpoints()
        length = bp + np.array([u_k.variation_at(t) for t in bp])
        xT = x_k.value(T)
        uT = u_k.value(T)
        for sb in thresholds:
            if sb > length[-1] + 1e-12:
                out.append(EquiuniformityRecord(sb, idx, False, math.nan, math.nan))
                continue
            tau = float(np.interp(sb, length, bp))
            dev = max(
                float(np.linalg.norm(x_k.value(tau) - xT)),
                float(np.linalg.norm(u_k.value(tau) - uT)),
            )
            out.append(EquiuniformityRecord(sb, idx, True, tau, dev))
    return out


@dataclass(frozen=True)
class ApproxRecord:
    k: int
    var_uk: float
    sup_dist: float
    l1_u: float
    l1_v: float
    psi2_gap: float
    gronwall_lhs: float
    gronwall_rhs: float


class ApproxSequenceReport:
    """Per-k convergence diagnostics of an approximating sequence."""

    csv_header = [
        "k",
        "var_uk",
        "sup_dist",
        "l1_u",
        "l1_v",
        "psi2_gap",
        "gronwall_lhs",
        "gronwall_rhs",
    ]

    def __init__(self, records, grid):
        records = list(records)
        if not records:
            raise ValueError("report needs at least one record")
        ks = [r.k for r in records]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("records must be sorted by strictly increasing k")
        for r in records:
            for name in ("var_uk", "sup_dist", "l1_u", "l1_v", "psi2_gap"):
                val = getattr(r, name)
                if not math.isnan(val) and val < -1e-12:
                    raise ValueError(f"{name} must be nonnegative")
        self.records = records
        self.grid = np.asarray(grid, dtype=float)

    def csv_rows(self):
        rows = []
        for r in self.records:
            rows.append(
                [r.k, r.var_uk, r.sup_dist, r.l1_u, r.l1_v, r.psi2_gap, r.gronwall_lhs, r.gronwall_rhs]
            )
        return rows

    def to_json(self):
        return {
            "columns": list(self.csv_header),
            "records": [
                {name: getattr(r, name) for name in self.csv_header} for r in self.records
            ],
        }

    def sup_distances(self):
        return [r.sup_dist for r in self.records]


def approximate_sequence(fields, x0, stc, clock, ks, cfg=None, grid=None):
    """Run the ramp-clock sweep against the reconstructed completion solution.

    For each ``k``: build the ramp clock, pull the graph back to an AC
    control pair, solve the time-side system, and record variation, sup
    distance on the test grid, L1 input gaps, the fiber-input discrepancy,
    and (when the channels ignore the ordinary input) the comparison bound
    sides.
    """
    ks = [int(k) for k in ks]
    if any(b <= a for a, b in zip(ks, ks[1:])) or not ks:
        raise ValueError("ks must be nonempty and strictly increasing")
    if not stc.feasible:
        raise ValueError("the sweep needs a feasible space-time control")
    cfg = cfg or IntegratorConfig()
    if grid is None:
        grid = default_test_grid(clock, min(ks))
    grid = np.asarray(grid, dtype=float)
    path = solve_spacetime(fields, x0, stc, cfg)
    reference = reconstruct_solution(path, clock, grid)
    u_bv = time_side_control(stc, clock)
    v_time = time_side_input(stc, clock)
    records = []
    for k in ks:
        ac = ramp_clock(clock, k)
        u_k, v_k = compose_controls(stc, ac)
        x_k = solve_caratheodory(fields, x0, u_k, v_k, cfg, grid=grid)
        sup_d = sup_distance(x_k, reference, grid)
        l1_u = _l1_control_distance(u_k, u_bv)
        l1_v = v_k.l1_distance(v_time)
        psi2 = check_psi2_condition(v_k, ac, stc, u_k.total_variation)
        if fields.v2_active:
            g_lhs, g_rhs = math.nan, math.nan
        else:
            x_hat = solve_caratheodory(fields, x0, u_k, v_time, cfg, grid=grid)
            rec = gronwall_bound(fields, u_k, v_k, v_time, x_hat, x_k, grid)
            g_lhs, g_rhs = rec.lhs, rec.rhs
        records.append(
            ApproxRecord(
                k,
                u_k.total_variation,
                sup_d,
                l1_u,
                l1_v,
                psi2,
                g_lhs,
                g_rhs,
            )
        )
    return ApproxSequenceReport(records, grid)
