"""Bounded-variation control paths and piecewise-constant ordinary controls.

A control path is an ordered tiling of the horizon into absolutely
continuous stretches (piecewise-linear polylines) and finitely many jumps.
The pointwise value is right continuous at interior and terminal jumps; a
jump at t = 0 keeps the declared initial value, so ``u(0)`` is always the
anchor the dynamics start from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph_completion import Clock, SpaceTimeControl
from .core_types import ParamPath

__all__ = [
    "AcSegment",
    "Jump",
    "ControlPath",
    "OrdinaryControl",
    "variation",
    "sup_distance",
    "arc_length_param",
    "ArcLengthResult",
]

_TIME_TOL = 1e-12
_MATCH_TOL = 1e-9


class AcSegment:
    """Absolutely continuous stretch sampled as a polyline."""

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or times.size < 2 or values.shape[0] != times.size:
            raise ValueError("segment needs >= 2 aligned samples")
        if np.any(np.diff(times) <= 0):
            raise ValueError("segment times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("segment samples must be finite")
        self.times = times
        self.values = values
        seg = np.linalg.norm(np.diff(values, axis=0), axis=1)
        self._cumvar = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def start(self):
        return float(self.times[0])

    @property
    def end(self):
        return float(self.times[-1])

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def total_variation(self):
        return float(self._cumvar[-1])

    def variation_to(self, t):
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        idx = min(max(idx, 0), self.times.size - 2)
        dt = self.times[idx + 1] - self.times[idx]
        frac = (t - self.times[idx]) / dt
        frac = min(max(frac, 0.0), 1.0)
        return float(self._cumvar[idx] + frac * (self._cumvar[idx + 1] - self._cumvar[idx]))


class Jump:
    """Instantaneous transition of the control value at one time."""

    def __init__(self, time, left, right):
        left = np.atleast_1d(np.asarray(left, dtype=float))
        right = np.atleast_1d(np.asarray(right, dtype=float))
        if left.shape != right.shape or left.ndim != 1:
            raise ValueError("jump endpoints must be equal-length vectors")
        mag = float(np.linalg.norm(right - left))
        if mag <= 0.0:
            raise ValueError("jump must actually move the control value")
        self.time = float(time)
        self.left = left
        self.right = right
        self.magnitude = mag

    @property
    def dim(self):
        return self.left.size


class ControlPath:
    """Finitely many jumps threaded between absolutely continuous stretches."""

    def __init__(self, pieces):
        pieces = list(pieces)
        if not pieces:
            raise ValueError("a control path needs at least one piece")
        dim = pieces[0].dim
        cursor = None
        prev_val = None
        prev_was_jump = False
        for p in pieces:
            if p.dim != dim:
                raise ValueError("piece dimensions disagree")
            if isinstance(p, AcSegment):
                start, end_val = p.start, p.values[-1]
                if cursor is None:
                    if abs(start) > _TIME_TOL:
                        raise ValueError("first piece must start at t = 0")
                elif abs(start - cursor) > _TIME_TOL:
                    raise ValueError("pieces must tile the horizon without gaps")
                if prev_val is not None and np.linalg.norm(p.values[0] - prev_val) > _MATCH_TOL:
                    raise ValueError("adjacent piece values must match")
                cursor = p.end
                prev_val = end_val
                prev_was_jump = False
            elif isinstance(p, Jump):
                if prev_was_jump:
                    raise ValueError("merge simultaneous jumps into one")
                if cursor is None:
                    if abs(p.time) > _TIME_TOL:
                        raise ValueError("first piece must start at t = 0")
                elif abs(p.time - cursor) > _TIME_TOL:
                    raise ValueError("jump must sit at the current piece boundary")
                if prev_val is not None and np.linalg.norm(p.left - prev_val) > _MATCH_TOL:
                    raise ValueError("jump left value must match the preceding piece")
                cursor = p.time
                prev_val = p.right
                prev_was_jump = True
            else:
                raise TypeError("pieces must be AcSegment or Jump instances")
        if cursor is None or cursor <= 0.0:
            raise ValueError("the path must span a positive horizon")
        self.pieces = pieces
        self.dim = dim
        self.horizon = float(cursor)
        first = pieces[0]
        self.initial_value = (first.left if isinstance(first, Jump) else first.values[0]).copy()
        self._build_tables()

    def _build_tables(self):
        # evaluation knots: AC nodes plus both jump endpoints (left then right)
        knot_t, knot_u = [], []
        var_events = []  # (time, cumulative variation right after it)
        cum = 0.0
        for p in self.pieces:
            if isinstance(p, AcSegment):
                ts, us = p.times, p.values
                if knot_t and abs(ts[0] - knot_t[-1]) <= _TIME_TOL:
                    ts, us = ts[1:], us[1:]
                knot_t.extend(ts.tolist())
                for row in us:
                    knot_u.append(row)
                base = cum
                for i in range(p.times.size):
                    var_events.append((p.times[i], base + p._cumvar[i]))
                cum = base + p.total_variation
            else:
                knot_t.append(p.time)
                knot_u.append(p.left)
                knot_t.append(p.time)
                knot_u.append(p.right)
                if p.time > 0.0:
                    cum += p.magnitude
                    var_events.append((p.time, cum))
                else:
                    # an initial jump contributes to Var_[0,t] only for t > 0
                    self._initial_jump_var = p.magnitude
        self._knot_t = np.asarray(knot_t, dtype=float)
        self._knot_u = np.asarray(knot_u, dtype=float)
        self._jump_times = [p.time for p in self.pieces if isinstance(p, Jump)]
        self._segments = [p for p in self.pieces if isinstance(p, AcSegment)]

    # -- queries ---------------------------------------------------------

    @property
    def is_absolutely_continuous(self):
        return not self._jump_times

    def jumps(self):
        return [p for p in self.pieces if isinstance(p, Jump)]

    def jump_times(self):
        return list(self._jump_times)

    def breakpoints(self):
        """All sample times and jump times, sorted and unique."""
        return np.unique(self._knot_t)

    def values(self, ts):
        """Pointwise values on an array of times (right value at jumps, left at 0)."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if np.any(ts < -1e-9) or np.any(ts > self.horizon + 1e-9):
            raise ValueError("query time outside [0, T]")
        tq = np.clip(ts, 0.0, self.horizon)
        kt, ku = self._knot_t, self._knot_u
        idx = np.searchsorted(kt, tq, side="right") - 1
        idx = np.clip(idx, 0, kt.size - 2)
        dt = kt[idx + 1] - kt[idx]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(dt > 0, (tq - kt[idx]) / np.where(dt > 0, dt, 1.0), 1.0)
        frac = np.clip(frac, 0.0, 1.0)
        out = ku[idx] + frac[:, None] * (ku[idx + 1] - ku[idx])
        for p in self.pieces:
            if isinstance(p, Jump):
                at = np.abs(tq - p.time) <= _TIME_TOL
                if np.any(at):
                    out[at] = p.left if p.time == 0.0 else p.right
        return out

    def value(self, t):
        return self.values([t])[0]

    def slopes_at(self, ts):
        """Polyline derivative at interior query times (one cell each).

        Queries must avoid jump times; callers pass cell midpoints of a grid
        refined by :meth:`breakpoints`, where the derivative is constant.
        """
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((ts.size, self.dim))
        for seg in self._segments:
            inside = (ts >= seg.start - 1e-15) & (ts <= seg.end + 1e-15)
            if not np.any(inside):
                continue
            idx = np.searchsorted(seg.times, ts[inside], side="right") - 1
            idx = np.clip(idx, 0, seg.times.size - 2)
            dt = (seg.times[idx + 1] - seg.times[idx])[:, None]
            out[inside] = (seg.values[idx + 1] - seg.values[idx]) / dt
        return out

    def variation_at(self, t):
        t = float(t)
        if t < -1e-9 or t > self.horizon + 1e-9:
            raise ValueError("variation query outside [0, T]")
        t = min(max(t, 0.0), self.horizon)
        total = 0.0
        if t > 0.0:
            total += getattr(self, "_initial_jump_var", 0.0)
        for p in self.pieces:
            if isinstance(p, AcSegment):
                if t >= p.end - _TIME_TOL:
                    total += p.total_variation
                elif t > p.start + _TIME_TOL:
                    total += p.variation_to(t)
                    break
                else:
                    break
            else:
                if p.time == 0.0:
                    continue  # handled above
                if t >= p.time - _TIME_TOL:
                    total += p.magnitude
                else:
                    break
        return total

    @property
    def total_variation(self):
        return self.variation_at(self.horizon)

    def restrict(self, a, b):
        """The path on ``[a, b]``, re-anchored at ``a`` with its right value there."""
        if not (-1e-12 <= a < b <= self.horizon + 1e-12):
            raise ValueError("restriction window must satisfy 0 <= a < b <= T")
        a = max(a, 0.0)
        b = min(b, self.horizon)
        pieces = []
        for p in self.pieces:
            if isinstance(p, Jump):
                keep = (a < p.time <= b) or (p.time == 0.0 and a == 0.0)
                if keep:
                    pieces.append(p)
            else:
                lo, hi = max(p.start, a), min(p.end, b)
                if hi - lo <= _TIME_TOL:
                    continue
                mask = (p.times > lo + _TIME_TOL) & (p.times < hi - _TIME_TOL)
                ts = np.concatenate([[lo], p.times[mask], [hi]])
                seg_vals = np.vstack(
                    [
                        _interp_rows(lo, p.times, p.values),
                        p.values[mask],
                        _interp_rows(hi, p.times, p.values),
                    ]
                )
                pieces.append(AcSegment(ts, seg_vals))
        if not pieces:
            raise ValueError("restriction window contains no piece")
        shifted = []
        for p in pieces:
            if isinstance(p, Jump):
                shifted.append(Jump(p.time - a, p.left, p.right))
            else:
                shifted.append(AcSegment(p.times - a, p.values))
        return ControlPath(shifted)

    # -- construction helpers -------------------------------------------

    @classmethod
    def from_samples(cls, times, values):
        return cls([AcSegment(times, values)])

    @classmethod
    def constant(cls, value, horizon):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls([AcSegment([0.0, float(horizon)], np.vstack([value, value]))])

    @classmethod
    def step(cls, horizon, jump_time, left, right):
        """Constant path with a single jump; the jump may sit at 0 or T."""
        left = np.atleast_1d(np.asarray(left, dtype=float))
        right = np.atleast_1d(np.asarray(right, dtype=float))
        pieces = []
        if jump_time > 0.0:
            pieces.append(AcSegment([0.0, jump_time], np.vstack([left, left])))
        pieces.append(Jump(jump_time, left, right))
        if jump_time < horizon:
            pieces.append(AcSegment([jump_time, horizon], np.vstack([right, right])))
        return cls(pieces)

    # -- serialization ----------------------------------------------------

    def to_json(self):
        out = []
        for p in self.pieces:
            if isinstance(p, AcSegment):
                rows = [[float(t)] + [float(a) for a in row] for t, row in zip(p.times, p.values)]
                out.append({"type": "ac", "samples": rows})
            else:
                out.append(
                    {
                        "type": "jump",
                        "t": float(p.time),
                        "left": [float(a) for a in p.left],
                        "right": [float(a) for a in p.right],
                    }
                )
        return {"horizon": self.horizon, "pieces": out}

    @classmethod
    def from_json(cls, payload):
        if not isinstance(payload, dict) or "pieces" not in payload:
            raise ValueError("control path JSON needs a 'pieces' list")
        pieces = []
        for entry in payload["pieces"]:
            kind = entry.get("type")
            if kind == "ac":
                rows = np.asarray(entry["samples"], dtype=float)
                if rows.ndim != 2 or rows.shape[1] < 2:
                    raise ValueError("ac samples must be rows [t, u1, ...]")
                pieces.append(AcSegment(rows[:, 0], rows[:, 1:]))
            elif kind == "jump":
                pieces.append(Jump(entry["t"], entry["left"], entry["right"]))
            else:
                raise ValueError(f"unknown piece type {kind!r}")
        path = cls(pieces)
        declared = payload.get("horizon")
        if declared is not None and abs(path.horizon - float(declared)) > 1e-9:
            raise ValueError("declared horizon disagrees with the pieces")
        return path

    def dumps(self):
        return json.dumps(self.to_json())


def _interp_rows(t, times, values):
    return np.array([np.interp(t, times, values[:, j]) for j in range(values.shape[1])])


class OrdinaryControl:
    """Piecewise-constant measurable input on a time grid.

    Carries the drift-side component ``v1`` and, optionally, a separate
    channel-side component ``v2``.  When ``v2`` is omitted both slots read
    the same values.
    """

    def __init__(self, edges, v1, v2=None):
        edges = np.asarray(edges, dtype=float)
        v1 = np.asarray(v1, dtype=float)
        if v1.ndim == 1:
            v1 = v1[:, None]
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing with >= 2 entries")
        if abs(float(edges[0])) > _TIME_TOL:
            raise ValueError("the input grid must start at 0")
        if v1.shape[0] != edges.size - 1:
            raise ValueError("need one value row per cell")
        if v2 is not None:
            v2 = np.asarray(v2, dtype=float)
            if v2.ndim == 1:
                v2 = v2[:, None]
            if v2.shape != v1.shape:
                raise ValueError("v2 must match v1 in shape")
        if not np.all(np.isfinite(v1)) or (v2 is not None and not np.all(np.isfinite(v2))):
            raise ValueError("input values must be finite")
        self.edges = edges
        self.v1 = v1
        self.v2 = v2

    @property
    def horizon(self):
        return float(self.edges[-1])

    @property
    def dim(self):
        return self.v1.shape[1]

    @property
    def has_v2(self):
        return self.v2 is not None

    def _cells(self, ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if np.any(ts < -1e-9) or np.any(ts > self.horizon + 1e-9):
            raise ValueError("query time outside the input horizon")
        idx = np.searchsorted(self.edges, ts, side="right") - 1
        return np.clip(idx, 0, self.v1.shape[0] - 1)

    def values1(self, ts):
        return self.v1[self._cells(ts)]

    def values2(self, ts):
        table = self.v2 if self.v2 is not None else self.v1
        return table[self._cells(ts)]

    def value1(self, t):
        return self.values1([t])[0]

    def value2(self, t):
        return self.values2([t])[0]

    def l1_norm(self, component="v1"):
        """Exact integral of the pointwise Euclidean norm."""
        table = self.v1 if component == "v1" else (self.v2 if self.v2 is not None else self.v1)
        widths = np.diff(self.edges)
        return float(np.sum(np.linalg.norm(table, axis=1) * widths))

    def l1_distance(self, other, component="v1"):
        """Exact L1 distance to another piecewise-constant input."""
        if abs(self.horizon - other.horizon) > 1e-9:
            raise ValueError("input horizons disagree")
        edges = np.union1d(self.edges, other.edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        if component == "v1":
            a, b = self.values1(mids), other.values1(mids)
        else:
            a, b = self.values2(mids), other.values2(mids)
        return float(np.sum(np.linalg.norm(a - b, axis=1) * np.diff(edges)))

    @classmethod
    def constant(cls, value, horizon, v2=None):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        v2row = None if v2 is None else np.atleast_1d(np.asarray(v2, dtype=float))[None, :]
        return cls([0.0, float(horizon)], value[None, :], v2row)

    @classmethod
    def zeros(cls, horizon, dim=1):
        return cls.constant(np.zeros(dim), horizon)

    def to_json(self):
        payload = {
            "horizon": self.horizon,
            "edges": [float(e) for e in self.edges],
            "v1": [[float(a) for a in row] for row in self.v1],
        }
        if self.v2 is not None:
            payload["v2"] = [[float(a) for a in row] for row in self.v2]
        return payload

    @classmethod
    def from_json(cls, payload):
        if not isinstance(payload, dict) or "edges" not in payload or "v1" not in payload:
            raise ValueError("ordinary control JSON needs 'edges' and 'v1'")
        return cls(payload["edges"], payload["v1"], payload.get("v2"))

    def dumps(self):
        return json.dumps(self.to_json())


# -- module-level operations ---------------------------------------------


def variation(path, t=None):
    """Total variation of a control path on ``[0, t]`` (default the horizon).

    Exact for the stored representation: polyline chord lengths plus jump
    magnitudes, a jump at time ``tau > 0`` counting from ``t = tau`` on.
    """
    if t is None:
        t = path.horizon
    return path.variation_at(t)


def sup_distance(a, b, grid=None):
    """Largest pointwise distance between two trajectories.

    With ``grid=None`` the trajectories must share their time grid exactly;
    otherwise both are evaluated on the supplied grid, which must lie inside
    both spans.
    """
    if grid is None:
        if a.times.shape != b.times.shape or np.any(np.abs(a.times - b.times) > 1e-12):
            raise ValueError("trajectories live on different grids; pass an explicit grid")
        diff = a.states - b.states
        return float(np.max(np.linalg.norm(diff, axis=1)))
    grid = np.asarray(grid, dtype=float)
    diff = a.value(grid) - b.value(grid)
    return float(np.max(np.linalg.norm(np.atleast_2d(diff), axis=1)))


@dataclass(frozen=True)
class ArcLengthResult:
    spacetime: SpaceTimeControl
    clock: Clock
    path: ParamPath | None


def arc_length_param(u, v=None, x=None):
    """Unit-speed graph parametrization of an absolutely continuous control.

    Returns the space-time control ``(t(s), u(s))`` with the ordinary input
    carried along, the clock ``t -> t + Var_[0,t](u)``, and, when a state
    trajectory is supplied, the state path over the parameter.
    """
    if not u.is_absolutely_continuous:
        raise ValueError("arc-length parametrization needs an absolutely continuous path")
    knots = u.breakpoints()
    if v is not None:
        if abs(v.horizon - u.horizon) > 1e-9:
            raise ValueError("control and input horizons disagree")
        interior = v.edges[(v.edges > 1e-12) & (v.edges < u.horizon - 1e-12)]
        knots = np.union1d(knots, interior)
    uvals = u.values(knots)
    dt = np.diff(knots)
    du = np.linalg.norm(np.diff(uvals, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(dt + du)])
    mids = 0.5 * (knots[:-1] + knots[1:])
    if v is not None:
        v1 = v.values1(mids)
        v2 = v.values2(mids)
    else:
        v1 = np.zeros((knots.size - 1, 1))
        v2 = np.zeros((knots.size - 1, 1))
    stc = SpaceTimeControl(s, knots, uvals, v1, v2)
    clock = Clock([(knots, s)])
    path = None
    if x is not None:
        path = ParamPath(s, knots, x.value(knots))
    return ArcLengthResult(stc, clock, path)
