"""Fixed-step RK4 integration aligned to the breakpoints of the inputs.

All solvers subdivide between consecutive breakpoints of the data (control
polyline nodes, input grid edges, requested output times), so every
discontinuity of the derivative lands on a step boundary and the classical
order of the scheme is preserved on each cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bv_controls import OrdinaryControl, sup_distance
from .core_types import JumpRecord, ParamPath, Trajectory

__all__ = [
    "IntegratorConfig",
    "DivergenceError",
    "solve_caratheodory",
    "solve_spacetime",
    "reconstruct_solution",
    "self_convergence_check",
    "ConvergenceReport",
]

#: states beyond this magnitude abort the run
OVERFLOW_GUARD = 1e12


class DivergenceError(RuntimeError):
    """The state left the admissible range during integration."""

    def __init__(self, where, magnitude):
        super().__init__(
            f"state magnitude {magnitude:.3e} exceeded {OVERFLOW_GUARD:.0e} at {where:.6g}"
        )
        self.where = where
        self.magnitude = magnitude


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step configuration.

    ``steps_per_unit`` counts steps per unit of the independent variable
    before breakpoint splitting; ``atol`` is the accuracy yardstick used by
    convergence and equivalence checks, not a step controller.
    """

    steps_per_unit: int = 2048
    atol: float = 1e-6
    method: str = "rk4"

    def __post_init__(self):
        if self.steps_per_unit < 1:
            raise ValueError("steps_per_unit must be at least 1")
        if self.atol <= 0:
            raise ValueError("atol must be positive")
        if self.method != "rk4":
            raise ValueError("only the rk4 method is provided")


def _merge_breakpoints(parts, lo, hi):
    nodes = np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts if p is not None])
    nodes = nodes[(nodes >= lo - 1e-12) & (nodes <= hi + 1e-12)]
    nodes = np.union1d(np.clip(nodes, lo, hi), [lo, hi])
    keep = np.concatenate([[True], np.diff(nodes) > 1e-12])
    nodes = nodes[keep]
    if nodes[-1] < hi:
        nodes[-1] = hi
    return nodes


def _run_cells(nodes, x0, cell_rhs, steps_per_unit):
    """March RK4 across breakpoint cells, recording every substep."""
    x = np.asarray(x0, dtype=float).copy()
    times = [float(nodes[0])]
    states = [x.copy()]
    for i in range(nodes.size - 1):
        a = float(nodes[i])
        b = float(nodes[i + 1])
        w = b - a
        f = cell_rhs(i)
        nsub = max(1, int(math.ceil(w * steps_per_unit - 1e-9)))
        h = w / nsub
        for j in range(nsub):
            t = a + j * h
            k1 = f(t, x)
            k2 = f(t + 0.5 * h, x + (0.5 * h) * k1)
            k3 = f(t + 0.5 * h, x + (0.5 * h) * k2)
            k4 = f(t + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            mag = float(np.max(np.abs(x)))
            if not np.isfinite(mag) or mag > OVERFLOW_GUARD:
                raise DivergenceError(t + h, mag)
            times.append(b if j == nsub - 1 else a + (j + 1) * h)
            states.append(x.copy())
    return np.asarray(times), np.vstack(states)


def solve_caratheodory(fields, x0, u, v=None, cfg=None, grid=None):
    """Integrate ``dx/dt = g0 + sum_i g_i du_i/dt`` for an AC control.

    The control derivative is the exact slope of each polyline cell and the
    ordinary input is frozen at its cell value, so the right-hand side is
    smooth on every integration cell.  Requested ``grid`` times are merged
    into the breakpoints and therefore carry exact (non-interpolated) nodes.
    """
    cfg = cfg or IntegratorConfig()
    if not u.is_absolutely_continuous:
        raise ValueError("Caratheodory integration needs an absolutely continuous control")
    if u.dim != fields.m:
        raise ValueError("control dimension does not match the channel count")
    x0 = np.asarray(x0, dtype=float)
    if x0.size != fields.n:
        raise ValueError("initial state dimension mismatch")
    if v is None:
        v = OrdinaryControl.zeros(u.horizon)
    if abs(v.horizon - u.horizon) > 1e-9:
        raise ValueError("control and input horizons disagree")
    nodes = _merge_breakpoints([u.breakpoints(), v.edges, grid], 0.0, u.horizon)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    du = u.slopes_at(mids)
    u_left = u.values(nodes[:-1])
    v1 = v.values1(mids)
    v2 = v.values2(mids)
    F = fields

    def cell_rhs(i):
        a = nodes[i]
        ua = u_left[i]
        dui = du[i]
        v1i = v1[i]
        v2i = v2[i]

        def f(t, x):
            return F.rhs(x, ua + dui * (t - a), dui, v1i, v2i)

        return f

    times, states = _run_cells(nodes, x0, cell_rhs, cfg.steps_per_unit)
    return Trajectory(times, states)


def solve_spacetime(fields, x0, stc, cfg=None):
    """Integrate the reparametrized system over the graph parameter.

    On each cell the drift is weighted by the time slope ``dt/ds`` and the
    channels by the control slopes ``du/ds``; fiber cells have zero time
    slope so the drift is switched off there, matching the measure-theoretic
    meaning of the completion.
    """
    cfg = cfg or IntegratorConfig()
    if stc.control_dim != fields.m:
        raise ValueError("space-time control dimension does not match the channel count")
    x0 = np.asarray(x0, dtype=float)
    if x0.size != fields.n:
        raise ValueError("initial state dimension mismatch")
    s = stc.s
    ds = np.diff(s)
    dtds = np.diff(stc.t) / ds
    duds = np.diff(stc.u, axis=0) / ds[:, None]
    u_left = stc.u[:-1]
    v1 = stc.v1
    v2 = stc.v2
    F = fields

    def cell_rhs(i):
        a = s[i]
        ua = u_left[i]
        dui = duds[i]
        wt = dtds[i]
        v1i = v1[i]
        v2i = v2[i]

        def f(sq, xi):
            return F.rhs(xi, ua + dui * (sq - a), dui, v1i, v2i, drift_weight=wt)

        return f

    s_out, states = _run_cells(s, x0, cell_rhs, cfg.steps_per_unit)
    t_out = stc.time_at(s_out)
    return ParamPath(s_out, t_out, states)


def reconstruct_solution(path, clock, grid):
    """Pull a parameter-space state path back to time through a clock.

    Jump times of the clock are merged into the output grid; each carries
    the fiber's two ends as the left limit and the committed value.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("output grid must be strictly increasing")
    lo, hi = clock.domain
    if grid[0] < lo - 1e-9 or grid[-1] > hi + 1e-9:
        raise ValueError("output grid leaves the clock domain")
    jt = [f.time for f in clock.fibers if grid[0] <= f.time <= grid[-1]]
    full = np.union1d(grid, jt)
    svals = clock.values(full)
    if svals[0] < path.s[0] - 1e-6 or svals[-1] > path.s[-1] + 1e-6:
        raise ValueError("clock range leaves the state path span")
    states = path.value(svals)
    jumps = []
    for f in clock.fibers:
        if full[0] <= f.time <= full[-1]:
            jumps.append(
                JumpRecord(f.time, path.value(f.s_lo), path.value(f.s_hi))
            )
    return Trajectory(full, states, jumps)


@dataclass(frozen=True)
class ConvergenceReport:
    observed_order: float
    error_estimate: float
    coarse_gap: float
    fine_gap: float


def self_convergence_check(fields, x0, u, v=None, cfg=None, grid=None):
    """Richardson-style order estimate from runs at h, h/2 and h/4.

    Needs smooth data across the probe grid cells; the reported order for
    the fourth-order scheme should sit near 4.  The finer runs split each
    substep of the coarse run exactly in half (scaling ``steps_per_unit``
    alone would let per-cell rounding spoil the quotient).
    """
    cfg = cfg or IntegratorConfig()
    if grid is None:
        grid = np.linspace(0.0, u.horizon, 33)
    if v is None:
        v = OrdinaryControl.zeros(u.horizon)
    nodes = _merge_breakpoints([u.breakpoints(), v.edges, grid], 0.0, u.horizon)
    base_edges = []
    for i in range(nodes.size - 1):
        w = float(nodes[i + 1] - nodes[i])
        nsub = max(1, int(math.ceil(w * cfg.steps_per_unit - 1e-9)))
        base_edges.append((float(nodes[i]), float(nodes[i + 1]), nsub))
    runs = []
    for mult in (1, 2, 4):
        edges = np.concatenate(
            [np.linspace(a, b, n * mult + 1) for a, b, n in base_edges]
        )
        runs.append(solve_caratheodory(fields, x0, u, v, cfg, grid=edges))
    d1 = sup_distance(runs[0], runs[1], grid)
    d2 = sup_distance(runs[1], runs[2], grid)
    if d2 == 0.0:
        order = float("inf") if d1 > 0 else float("nan")
    else:
        order = math.log2(d1 / d2)
    return ConvergenceReport(order, d2, d1, d2)
