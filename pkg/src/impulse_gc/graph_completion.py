"""Graph completion of bounded-variation controls.

A control with jumps is lifted to a Lipschitz path over an arc-length
parameter ``s``: absolutely continuous stretches keep their time flow, while
each jump is bridged by a path inside the control set traversed at frozen
time.  A space-time control samples the completed graph's four components
(time, control, two ordinary inputs) over ``[0, S]``; the companion clock is
the strictly increasing (generally non-surjective) map sending each time to
the parameter at which the graph passes through ``(t, u(t))``, with one
fiber per jump for the skipped parameter interval.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpaceTimeControl",
    "Clock",
    "Fiber",
    "whitney_bridge",
    "two_leg_bridge",
    "complete_graph",
    "CompletionResult",
    "normalize_feasible",
    "Reparametrization",
]

# -- space-time controls and clocks ----------------------------------------

SPEED_SLACK = 1e-9
FEASIBLE_TOL = 1e-8


class SpaceTimeControl:
    """Sampled control graph over ``[0, S]``.

    Nodes carry ``(s, t, u)`` with ``t`` nondecreasing and 1-Lipschitz in
    ``s`` and ``u`` piecewise linear.  The ordinary inputs ``v1`` and ``v2``
    are constant on each cell.  Cell speeds ``(dt + |du|) / ds`` never exceed
    one; the control is feasible when they all equal one to within
    ``FEASIBLE_TOL``.
    """

    def __init__(self, s, t, u, v1, v2):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        v1 = np.asarray(v1, dtype=float)
        v2 = np.asarray(v2, dtype=float)
        if v1.ndim == 1:
            v1 = v1[:, None]
        if v2.ndim == 1:
            v2 = v2[:, None]
        K = s.size - 1
        if K < 1:
            raise ValueError("need at least one cell")
        if t.shape != s.shape or u.shape[0] != s.size:
            raise ValueError("node arrays must align")
        if v1.shape[0] != K or v2.shape[0] != K or v1.shape != v2.shape:
            raise ValueError("cell arrays must have one row per cell")
        ds = np.diff(s)
        if np.any(ds <= 0):
            raise ValueError("parameter nodes must be strictly increasing")
        if abs(float(s[0])) > 1e-12 or abs(float(t[0])) > 1e-12:
            raise ValueError("graph must start at s = 0, t = 0")
        dt = np.diff(t)
        if np.any(dt < -1e-12):
            raise ValueError("time component must be nondecreasing")
        du = np.linalg.norm(np.diff(u, axis=0), axis=1)
        speed = (dt + du) / ds
        if np.any(speed > 1.0 + SPEED_SLACK):
            raise ValueError("cell speed exceeds one; the graph is not 1-Lipschitz")
        self.s = s
        self.t = t
        self.u = u
        self.v1 = v1
        self.v2 = v2
        self._speed = speed
        self.feasible = bool(np.all(np.abs(speed - 1.0) < FEASIBLE_TOL))

    @property
    def horizon(self):
        """Parameter horizon S."""
        return float(self.s[-1])

    @property
    def time_horizon(self):
        return float(self.t[-1])

    @property
    def control_dim(self):
        return self.u.shape[1]

    @property
    def input_dim(self):
        return self.v1.shape[1]

    @property
    def n_cells(self):
        return self.s.size - 1

    def cell_speeds(self):
        return self._speed.copy()

    def time_at(self, s):
        sq = self._clip(s)
        return np.interp(sq, self.s, self.t)

    def control_at(self, s):
        sq = np.atleast_1d(self._clip(s))
        cols = [np.interp(sq, self.s, self.u[:, i]) for i in range(self.control_dim)]
        out = np.stack(cols, axis=-1)
        return out[0] if np.isscalar(s) or np.asarray(s).ndim == 0 else out

    def _cell_index(self, s):
        idx = np.searchsorted(self.s, np.atleast_1d(self._clip(s)), side="right") - 1
        return np.clip(idx, 0, self.n_cells - 1)

    def v1_at(self, s):
        out = self.v1[self._cell_index(s)]
        return out[0] if np.isscalar(s) or np.asarray(s).ndim == 0 else out

    def v2_at(self, s):
        out = self.v2[self._cell_index(s)]
        return out[0] if np.isscalar(s) or np.asarray(s).ndim == 0 else out

    def _clip(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < -1e-9) or np.any(s > self.horizon + 1e-9):
            raise ValueError("parameter outside [0, S]")
        return np.clip(s, 0.0, self.horizon)

    def refined(self, min_cells=0, fiber_spans=(), min_fiber_cells=0):
        """Subdivide cells so the grid has at least ``min_cells`` cells and
        each span in ``fiber_spans`` (pairs ``(s_lo, s_hi)``) holds at least
        ``min_fiber_cells``.  Subdivision is exact: nodes interpolate the
        piecewise-linear graph and cell inputs are copied."""
        ds = np.diff(self.s)
        counts = np.ones(self.n_cells, dtype=int)
        if min_cells > self.n_cells:
            target = self.horizon / float(min_cells)
            counts = np.maximum(counts, np.ceil(ds / target - 1e-12).astype(int))
        for s_lo, s_hi in fiber_spans:
            inside = (self.s[:-1] >= s_lo - 1e-12) & (self.s[1:] <= s_hi + 1e-12)
            n_in = int(np.sum(inside))
            if n_in and n_in < min_fiber_cells:
                per = int(np.ceil(min_fiber_cells / n_in))
                counts[inside] = np.maximum(counts[inside], per)
        if np.all(counts == 1):
            return self
        new_s = [np.array([self.s[0]])]
        for i, c in enumerate(counts):
            new_s.append(np.linspace(self.s[i], self.s[i + 1], c + 1)[1:])
        s = np.concatenate(new_s)
        t = np.interp(s, self.s, self.t)
        u = np.stack([np.interp(s, self.s, self.u[:, j]) for j in range(self.control_dim)], axis=-1)
        v1 = np.repeat(self.v1, counts, axis=0)
        v2 = np.repeat(self.v2, counts, axis=0)
        return SpaceTimeControl(s, t, u, v1, v2)

    def to_json(self):
        rows = []
        last = self.n_cells - 1
        for i in range(self.s.size):
            c = min(i, last)  # the last node repeats the final cell inputs
            rows.append(
                [float(self.s[i]), float(self.t[i])]
                + [float(a) for a in self.u[i]]
                + [float(a) for a in self.v1[c]]
                + [float(a) for a in self.v2[c]]
            )
        return {
            "S": self.horizon,
            "control_dim": self.control_dim,
            "input_dim": self.input_dim,
            "samples": rows,
        }

    @classmethod
    def from_json(cls, payload):
        if not isinstance(payload, dict) or "samples" not in payload or "S" not in payload:
            raise ValueError("space-time control JSON needs keys 'S' and 'samples'")
        rows = np.asarray(payload["samples"], dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise ValueError("need at least two sample rows")
        m = int(payload.get("control_dim", 0))
        l = int(payload.get("input_dim", 0))
        if m < 1 or l < 1 or rows.shape[1] != 2 + m + 2 * l:
            raise ValueError("sample rows do not match declared dimensions")
        s = rows[:, 0]
        t = rows[:, 1]
        u = rows[:, 2 : 2 + m]
        v1 = rows[:-1, 2 + m : 2 + m + l]
        v2 = rows[:-1, 2 + m + l :]
        stc = cls(s, t, u, v1, v2)
        if abs(stc.horizon - float(payload["S"])) > 1e-9 * (1.0 + abs(float(payload["S"]))):
            raise ValueError("declared S disagrees with the sample rows")
        return stc

    def dumps(self):
        return json.dumps(self.to_json())


class Fiber:
    """Parameter interval a clock skips at a jump time."""

    __slots__ = ("time", "s_lo", "s_hi")

    def __init__(self, time, s_lo, s_hi):
        if s_hi <= s_lo:
            raise ValueError("fiber must have positive width")
        self.time = float(time)
        self.s_lo = float(s_lo)
        self.s_hi = float(s_hi)

    @property
    def width(self):
        return self.s_hi - self.s_lo

    def __repr__(self):
        return f"Fiber(t={self.time}, s=[{self.s_lo}, {self.s_hi}])"


class Clock:
    """Strictly increasing sampled map from time into the graph parameter.

    Stored as contiguous absolutely continuous stretches (piecewise-linear
    node pairs) separated by fibers.  At an interior or terminal jump time
    the clock selects the fiber's right end; a fiber at t = 0 keeps
    ``clock(0) = 0`` so the initial control value stays anchored.
    """

    def __init__(self, stretches, fibers=()):
        self.stretches = []
        for t_nodes, s_nodes in stretches:
            t_nodes = np.asarray(t_nodes, dtype=float)
            s_nodes = np.asarray(s_nodes, dtype=float)
            if t_nodes.shape != s_nodes.shape or t_nodes.ndim != 1 or t_nodes.size < 1:
                raise ValueError("stretch node arrays must be equal-length 1-D")
            if np.any(np.diff(t_nodes) <= 0):
                raise ValueError("stretch times must be strictly increasing")
            if np.any(np.diff(s_nodes) <= 0):
                raise ValueError("clock values must be strictly increasing")
            self.stretches.append((t_nodes, s_nodes))
        if not self.stretches:
            raise ValueError("a clock needs at least one stretch")
        self.fibers = sorted((f for f in fibers), key=lambda f: f.time)
        # stretches must be ordered and separated exactly by the fibers
        starts = [st[0][0] for st in self.stretches]
        if sorted(starts) != starts:
            raise ValueError("stretches out of order")

    @property
    def domain(self):
        return float(self.stretches[0][0][0]), float(self.stretches[-1][0][-1])

    @property
    def horizon(self):
        return float(self.stretches[-1][0][-1])

    @property
    def final_value(self):
        return float(self.stretches[-1][1][-1])

    def _locate(self, t):
        lo, hi = self.domain
        if t < lo - 1e-12 or t > hi + 1e-12:
            raise ValueError("time outside the clock domain")
        t = min(max(t, lo), hi)
        chosen = self.stretches[0]
        for t_nodes, s_nodes in self.stretches:
            if t_nodes[0] <= t + 1e-15:
                chosen = (t_nodes, s_nodes)
            else:
                break
        return t, chosen

    def value(self, t):
        """Clock at ``t``: right end of the fiber at jump times, except t = 0."""
        t = float(t)
        if self.fibers and abs(t - self.fibers[0].time) <= 1e-15 and self.fibers[0].time == self.domain[0]:
            return self.fibers[0].s_lo
        t, (t_nodes, s_nodes) = self._locate(t)
        return float(np.interp(t, t_nodes, s_nodes))

    def left_value(self, t):
        """Left limit of the clock at ``t`` (fiber start at a jump time)."""
        t = float(t)
        for f in self.fibers:
            if abs(t - f.time) <= 1e-15:
                return f.s_lo
        return self.value(t)

    def values(self, ts):
        return np.array([self.value(t) for t in np.atleast_1d(np.asarray(ts, dtype=float))])

    def jump_times(self):
        return [f.time for f in self.fibers]

    def to_json(self):
        pairs = []
        fiber_at = {f.time: f for f in self.fibers}
        for t_nodes, s_nodes in self.stretches:
            f = fiber_at.get(float(t_nodes[0]))
            if f is not None:
                # the fiber start is already present unless the fiber opens the domain
                if not pairs or abs(pairs[-1][0] - f.time) > 1e-15:
                    pairs.append([float(f.time), float(f.s_lo)])
            for t, s in zip(t_nodes, s_nodes):
                t = float(t)
                s = float(s)
                if pairs and abs(pairs[-1][0] - t) <= 1e-15 and abs(pairs[-1][1] - s) <= 1e-15:
                    continue
                pairs.append([t, s])
        # a terminal fiber has no following stretch node, emit both ends
        if self.fibers and self.fibers[-1].time >= self.stretches[-1][0][-1] - 1e-15:
            last = self.fibers[-1]
            if abs(pairs[-1][0] - last.time) > 1e-15 or abs(pairs[-1][1] - last.s_hi) > 1e-15:
                pairs.append([float(last.time), float(last.s_hi)])
        return pairs

    @classmethod
    def from_json(cls, pairs):
        pairs = [(float(t), float(s)) for t, s in pairs]
        if len(pairs) < 2:
            raise ValueError("clock JSON needs at least two pairs")
        stretches = []
        fibers = []
        cur_t = [pairs[0][0]]
        cur_s = [pairs[0][1]]
        for t, s in pairs[1:]:
            if abs(t - cur_t[-1]) <= 1e-15:
                fibers.append(Fiber(t, cur_s[-1], s))
                if len(cur_t) > 1:
                    stretches.append((np.array(cur_t), np.array(cur_s)))
                cur_t, cur_s = [t], [s]
            else:
                cur_t.append(t)
                cur_s.append(s)
        stretches.append((np.array(cur_t), np.array(cur_s)))
        return cls(stretches, fibers)

    def dumps(self):
        return json.dumps(self.to_json())


# -- completion construction ------------------------------------------------

_BRIDGE_PROBES = 9


def _check_inside(points, control_set, what):
    for p in points:
        if not control_set.contains(p, tol=1e-7):
            raise ValueError(f"{what} leaves the control set at {np.asarray(p)}")


def _probe_segment(a, b):
    lam = np.linspace(0.0, 1.0, _BRIDGE_PROBES)[1:-1, None]
    return (1.0 - lam) * a + lam * b


def whitney_bridge(left, right, control_set):
    """Bridge a jump inside the control set with bounded length.

    Convex sets use the straight segment; star-shaped unions route through
    the star center.  The resulting polyline length must stay within the
    set's bridging constant times the jump size, otherwise the set does not
    support completions of this jump and a ``ValueError`` is raised.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    gap = float(np.linalg.norm(right - left))
    _check_inside([left, right], control_set, "bridge endpoint")
    if gap == 0.0:
        return np.vstack([left])
    if control_set.convex:
        verts = np.vstack([left, right])
    else:
        center = np.asarray(control_set.star_center(), dtype=float)
        verts = np.vstack([left, center, right])
        # drop a zero-length leg when an endpoint sits at the center
        keep = np.concatenate([[True], np.linalg.norm(np.diff(verts, axis=0), axis=1) > 1e-12])
        verts = verts[keep]
    length = float(np.sum(np.linalg.norm(np.diff(verts, axis=0), axis=1)))
    if length > control_set.whitney_constant * gap + 1e-9:
        raise ValueError(
            f"bridge length {length:.6g} exceeds allowed "
            f"{control_set.whitney_constant:.6g} * {gap:.6g}"
        )
    for i in range(len(verts) - 1):
        _check_inside(_probe_segment(verts[i], verts[i + 1]), control_set, "bridge segment")
    return verts


def two_leg_bridge(left, right):
    """Axis-ordered staircase bridge: one leg per changed coordinate.

    Useful for probing path dependence of jump resolutions; it is exempt
    from any length bound tied to a control set.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    verts = [left]
    cur = left.copy()
    for i in range(left.size):
        if cur[i] != right[i]:
            cur = cur.copy()
            cur[i] = right[i]
            verts.append(cur)
    return np.vstack(verts)


@dataclass(frozen=True)
class CompletionResult:
    """A feasible space-time control plus the clock that replays it in time."""

    spacetime: SpaceTimeControl
    clock: Clock
    bridges: dict = field(default_factory=dict)

    @property
    def total_length(self):
        return self.spacetime.horizon


def _bridge_for(jump, control_set, bridge):
    if bridge is not None:
        if callable(bridge):
            verts = bridge(jump.time, jump.left, jump.right)
        else:
            verts = bridge.get(jump.time)
            if verts is None:
                raise ValueError(f"no bridge supplied for the jump at t={jump.time:.6g}")
        verts = np.atleast_2d(np.asarray(verts, dtype=float))
        if not np.allclose(verts[0], jump.left, atol=1e-9) or not np.allclose(
            verts[-1], jump.right, atol=1e-9
        ):
            raise ValueError(f"bridge at t={jump.time:.6g} does not match the jump endpoints")
        return verts
    if control_set is not None:
        return whitney_bridge(jump.left, jump.right, control_set)
    return np.vstack([jump.left, jump.right])


def complete_graph(
    u,
    v=None,
    control_set=None,
    bridge=None,
    fiber_v2=None,
    min_cells=0,
    min_fiber_cells=0,
):
    """Build the canonical arc-length completion of a BV control.

    Stretches advance the parameter by ``dt + |du|`` and fibers by the
    bridge length, so the speed constraint holds with equality everywhere.
    ``bridge`` may be a callable ``(time, left, right) -> vertices`` or a
    mapping from jump time to vertices; by default jumps are bridged through
    ``control_set`` (straight segment when no set is given).  ``fiber_v2``
    optionally remaps the second ordinary-input component on fibers, keyed
    by jump time; elsewhere both components follow ``v``.
    """
    if not hasattr(u, "pieces"):
        raise TypeError("expected a ControlPath")
    from .bv_controls import OrdinaryControl
    if v is None:
        v = OrdinaryControl.zeros(u.horizon)
    if abs(v.horizon - u.horizon) > 1e-9:
        raise ValueError("control and input horizons disagree")
    fiber_v2 = dict(fiber_v2 or {})

    s_nodes = [0.0]
    t_nodes = [0.0]
    u_nodes = [np.asarray(u.initial_value, dtype=float)]
    v1_cells = []
    v2_cells = []
    stretches = []
    fibers = []
    bridges_used = {}
    ldim = v.dim

    def _v_at(tau):
        return v.values1([tau])[0], v.values2([tau])[0]

    def emit_node(s, t, uval):
        s_nodes.append(s)
        t_nodes.append(t)
        u_nodes.append(np.asarray(uval, dtype=float))

    for piece in u.pieces:
        if hasattr(piece, "magnitude"):
            tau = piece.time
            verts = _bridge_for(piece, control_set, bridge)
            bridges_used[tau] = verts
            fv1, fv2 = _v_at(tau)
            override = fiber_v2.get(tau)
            if override is not None:
                fv2 = np.broadcast_to(np.asarray(override, dtype=float), (ldim,)).copy()
            s_lo = s_nodes[-1]
            for q in range(1, len(verts)):
                step = float(np.linalg.norm(verts[q] - verts[q - 1]))
                if step <= 1e-15:
                    continue
                emit_node(s_nodes[-1] + step, tau, verts[q])
                v1_cells.append(fv1)
                v2_cells.append(fv2)
            fibers.append(Fiber(tau, s_lo, s_nodes[-1]))
        else:
            seg_t = piece.times
            seg_u = piece.values
            edges = np.union1d(seg_t, v.edges[(v.edges > seg_t[0]) & (v.edges < seg_t[-1])])
            uvals = np.vstack([np.interp(edges, seg_t, seg_u[:, j]) for j in range(u.dim)]).T
            mids = 0.5 * (edges[:-1] + edges[1:])
            vm1 = v.values1(mids)
            vm2 = v.values2(mids)
            first = len(s_nodes) - 1
            for q in range(1, edges.size):
                dt = float(edges[q] - edges[q - 1])
                dnorm = float(np.linalg.norm(uvals[q] - uvals[q - 1]))
                emit_node(s_nodes[-1] + dt + dnorm, edges[q], uvals[q])
                v1_cells.append(vm1[q - 1])
                v2_cells.append(vm2[q - 1])
            stretches.append(
                (np.asarray(t_nodes[first:]), np.asarray(s_nodes[first:]))
            )

    if hasattr(u.pieces[-1], "magnitude"):
        # terminal jump: pin the clock's right end to the fiber top
        stretches.append((np.asarray([u.horizon]), np.asarray([s_nodes[-1]])))

    stc = SpaceTimeControl(
        np.asarray(s_nodes),
        np.asarray(t_nodes),
        np.vstack(u_nodes),
        np.vstack(v1_cells),
        np.vstack(v2_cells),
    )
    if min_cells or min_fiber_cells:
        spans = [(f.s_lo, f.s_hi) for f in fibers]
        stc = stc.refined(min_cells=min_cells, fiber_spans=spans, min_fiber_cells=min_fiber_cells)
    clock = Clock(stretches, fibers)
    return CompletionResult(stc, clock, bridges_used)


@dataclass(frozen=True)
class Reparametrization:
    """Monotone map between an old and a new graph parameter."""

    old_nodes: np.ndarray
    new_nodes: np.ndarray

    def forward(self, s):
        return np.interp(np.asarray(s, dtype=float), self.old_nodes, self.new_nodes)

    def right_inverse(self, s_new):
        # on collapsed intervals this picks the rightmost preimage
        new, idx = np.unique(self.new_nodes[::-1], return_index=True)
        old = self.old_nodes[::-1][idx]
        return np.interp(np.asarray(s_new, dtype=float), new, old)

    def apply_to_clock(self, clock):
        stretches = [(t.copy(), self.forward(s)) for t, s in clock.stretches]
        fibers = []
        for f in clock.fibers:
            lo = float(self.forward(f.s_lo))
            hi = float(self.forward(f.s_hi))
            if hi - lo > 1e-15:
                fibers.append(Fiber(f.time, lo, hi))
        return Clock(stretches, fibers)


def normalize_feasible(stc):
    """Rescale a feasible space-time control to unit speed.

    Cells moving slower than the constraint are compressed and dead cells
    (no time and no control motion) are excised.  Returns the normalized
    control together with the parameter map, whose ``apply_to_clock``
    transports any clock built on the old parameter.
    """
    dt = np.diff(stc.t)
    dlen = dt + np.linalg.norm(np.diff(stc.u, axis=0), axis=1)
    new_s = np.concatenate([[0.0], np.cumsum(dlen)])
    if new_s[-1] <= 0:
        raise ValueError("control path has zero total length")
    keep = dlen > 1e-15
    if not np.any(keep):
        raise ValueError("control path has zero total length")
    node_keep = np.concatenate([[True], keep])
    out = SpaceTimeControl(
        new_s[node_keep],
        stc.t[node_keep],
        stc.u[node_keep],
        stc.v1[keep],
        stc.v2[keep],
    )
    return out, Reparametrization(stc.s.copy(), new_s)
