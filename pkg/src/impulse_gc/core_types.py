"""Shared domain types: control-value sets, vector-field bundles, trajectories.

Control sets are compact geometries (boxes, balls, convex polytopes, star
unions) in which any two member points can be joined by an internal polyline
of length at most a fixed multiple of their distance; convex sets achieve
that multiple (the ``whitney_constant``) equal to one with the straight
segment.  Vector-field bundles describe dynamics affine in the control
derivative,

    dx/dt = g0(x, u, v1) + sum_i g_i(x, u, v2) * du_i/dt,

with declared Lipschitz/growth metadata that is trusted where bounds are
computed and spot-checked by :func:`check_growth_bound`.  Trajectories and
parametrized paths carry the sampled solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ControlSet",
    "Box",
    "Ball",
    "ConvexPolytope",
    "StarUnion",
    "project_to_set",
    "Modulus",
    "VectorFieldSet",
    "GrowthViolation",
    "GrowthReport",
    "check_growth_bound",
    "JumpRecord",
    "Trajectory",
    "ParamPath",
]

# -- control-set geometry --------------------------------------------------

MEMBERSHIP_TOL = 1e-9


def _point(p, dim=None):
    q = np.atleast_1d(np.asarray(p, dtype=float))
    if q.ndim != 1:
        raise ValueError("expected a 1-D point")
    if dim is not None and q.size != dim:
        raise ValueError(f"point has dimension {q.size}, set has dimension {dim}")
    return q


class ControlSet:
    """Common interface for compact control-value sets.

    Subclasses provide membership, nearest-point projection, and a star
    center from which every member point is reachable along a straight
    internal segment.
    """

    def __init__(self, dim, whitney_constant=1.0, convex=True):
        if int(dim) < 1:
            raise ValueError("set dimension must be at least 1")
        if not np.isfinite(whitney_constant) or whitney_constant < 1.0:
            raise ValueError("whitney constant must be finite and >= 1")
        self.dim = int(dim)
        self.whitney_constant = float(whitney_constant)
        self.convex = bool(convex)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        raise NotImplementedError

    def project(self, p):
        raise NotImplementedError

    def star_center(self):
        raise NotImplementedError


class Box(ControlSet):
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    def __init__(self, lo, hi, whitney_constant=1.0):
        lo = _point(lo)
        hi = _point(hi, lo.size)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(hi < lo):
            raise ValueError("box upper bounds must dominate lower bounds")
        super().__init__(lo.size, whitney_constant, convex=True)
        self.lo = lo
        self.hi = hi

    def contains(self, p, tol=MEMBERSHIP_TOL):
        q = _point(p, self.dim)
        return bool(np.all(q >= self.lo - tol) and np.all(q <= self.hi + tol))

    def project(self, p):
        return np.clip(_point(p, self.dim), self.lo, self.hi)

    def star_center(self):
        return 0.5 * (self.lo + self.hi)


class Ball(ControlSet):
    """Closed Euclidean ball of given center and radius."""

    def __init__(self, center, radius, whitney_constant=1.0):
        center = _point(center)
        if not np.all(np.isfinite(center)):
            raise ValueError("ball center must be finite")
        if not np.isfinite(radius) or radius <= 0:
            raise ValueError("ball radius must be finite and positive")
        super().__init__(center.size, whitney_constant, convex=True)
        self.center = center
        self.radius = float(radius)

    def contains(self, p, tol=MEMBERSHIP_TOL):
        q = _point(p, self.dim)
        return bool(np.linalg.norm(q - self.center) <= self.radius + tol)

    def project(self, p):
        q = _point(p, self.dim)
        d = np.linalg.norm(q - self.center)
        if d <= self.radius:
            return q
        return self.center + (self.radius / d) * (q - self.center)

    def star_center(self):
        return self.center.copy()


class ConvexPolytope(ControlSet):
    """Bounded intersection of halfspaces ``{p : A p <= b}``.

    The caller supplies an interior point; boundedness is the caller's
    responsibility (projection of far points would otherwise not settle).
    Nearest-point projection runs Dykstra's alternating scheme over the
    halfspaces, which is deterministic and needs no external solver.
    """

    def __init__(self, halfspace_matrix, offsets, interior_point, whitney_constant=1.0):
        A = np.asarray(halfspace_matrix, dtype=float)
        b = np.asarray(offsets, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != b.size:
            raise ValueError("halfspace matrix and offsets disagree")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("halfspace data must be finite")
        super().__init__(A.shape[1], whitney_constant, convex=True)
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero halfspace normal")
        self.A = A
        self.b = b
        self._row_norm_sq = norms**2
        c = _point(interior_point, self.dim)
        if not self._satisfies(c, MEMBERSHIP_TOL):
            raise ValueError("declared interior point violates a halfspace")
        self._center = c

    def _satisfies(self, q, tol):
        return bool(np.all(self.A @ q <= self.b + tol * (1.0 + np.abs(self.b))))

    def contains(self, p, tol=MEMBERSHIP_TOL):
        return self._satisfies(_point(p, self.dim), tol)

    def project(self, p, max_iter=500, tol=1e-12):
        q = _point(p, self.dim)
        if self._satisfies(q, 0.0):
            return q
        x = q.copy()
        corrections = np.zeros((self.A.shape[0], self.dim))
        for _ in range(max_iter):
            moved = 0.0
            for i in range(self.A.shape[0]):
                y = x + corrections[i]
                excess = self.A[i] @ y - self.b[i]
                if excess > 0.0:
                    step = (excess / self._row_norm_sq[i]) * self.A[i]
                    x_new = y - step
                else:
                    x_new = y
                corrections[i] = y - x_new
                moved = max(moved, float(np.max(np.abs(x_new - x))))
                x = x_new
            if moved < tol:
                break
        return x

    def star_center(self):
        return self._center.copy()


class StarUnion(ControlSet):
    """Union of member sets, star shaped about a declared center.

    Membership is membership in any member.  Projection returns the nearest
    of the member projections.  The declared ``whitney_constant`` is the
    multiple the two-leg route through the center is allowed to cost; it is
    trusted metadata, spot-checked where bridges are built.
    """

    def __init__(self, members, center, whitney_constant):
        members = list(members)
        if not members:
            raise ValueError("star union needs at least one member")
        dim = members[0].dim
        if any(m.dim != dim for m in members):
            raise ValueError("member dimensions disagree")
        super().__init__(dim, whitney_constant, convex=False)
        self.members = members
        c = _point(center, dim)
        if not any(m.contains(c) for m in members):
            raise ValueError("star center must belong to the union")
        self._center = c

    def contains(self, p, tol=MEMBERSHIP_TOL):
        q = _point(p, self.dim)
        return any(m.contains(q, tol) for m in self.members)

    def project(self, p):
        q = _point(p, self.dim)
        best = None
        best_d = np.inf
        for m in self.members:
            cand = m.project(q)
            d = np.linalg.norm(cand - q)
            if d < best_d:
                best, best_d = cand, d
        return best

    def star_center(self):
        return self._center.copy()


def project_to_set(p, control_set):
    """Nearest point of ``control_set`` to ``p``; ``p`` itself when already inside."""
    q = _point(p, control_set.dim)
    if control_set.contains(q, tol=0.0):
        return q
    return control_set.project(q)


# -- vector fields and metadata --------------------------------------------

class Modulus:
    """Nondecreasing modulus of continuity with ``w(0) = 0``.

    Either linear, ``w(r) = slope * r``, or a piecewise-linear table through
    user-supplied points.
    """

    def __init__(self, radii=None, values=None, slope=None):
        if slope is not None:
            if slope < 0:
                raise ValueError("modulus slope must be nonnegative")
            self._slope = float(slope)
            self._radii = None
            self._values = None
            return
        r = np.asarray(radii, dtype=float)
        w = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != w.shape or r.size < 1:
            raise ValueError("modulus table must be two equal 1-D arrays")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("modulus radii must be nonnegative and increasing")
        if np.any(np.diff(w) < 0) or np.any(w < 0):
            raise ValueError("modulus values must be nonnegative and nondecreasing")
        self._slope = None
        # anchor at the origin so w(0) = 0
        if r[0] > 0.0:
            r = np.concatenate([[0.0], r])
            w = np.concatenate([[0.0], w])
        self._radii = r
        self._values = w

    @classmethod
    def linear(cls, slope):
        return cls(slope=slope)

    @classmethod
    def from_table(cls, radii, values):
        return cls(radii=radii, values=values)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self._slope is not None:
            out = self._slope * r
        else:
            # beyond the table the last value extends flat
            out = np.interp(r, self._radii, self._values)
        return float(out) if out.ndim == 0 else out


@dataclass
class VectorFieldSet:
    """Drift plus impulsive channel fields with declared regularity metadata.

    ``g0(x, u, v1)`` and each ``g_impulse[i](x, u, v2)`` return length-``n``
    arrays.  When ``v2_active`` is false the impulsive fields ignore their
    third argument entirely.
    """

    n: int
    m: int
    g0: callable
    g_impulse: list
    lipschitz: float
    growth: float
    v_modulus: Modulus = field(default_factory=lambda: Modulus.linear(0.0))
    v2_active: bool = False
    name: str = ""

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("state and channel dimensions must be at least 1")
        if len(self.g_impulse) != self.m:
            raise ValueError("need exactly one impulsive field per channel")
        if self.lipschitz < 0 or self.growth <= 0:
            raise ValueError("lipschitz must be >= 0 and growth > 0")

    def rhs(self, x, u, du, v1, v2, drift_weight=1.0):
        """Affine right-hand side; ``drift_weight`` scales the drift term.

        Fiber arcs of a space-time parametrization use drift_weight 0 and
        channels with du_i = 0 are skipped, so constant stretches cost
        nothing.
        """
        if drift_weight != 0.0:
            out = drift_weight * np.asarray(self.g0(x, u, v1), dtype=float)
        else:
            out = np.zeros(self.n)
        for i in range(self.m):
            w = du[i]
            if w != 0.0:
                out = out + w * np.asarray(self.g_impulse[i](x, u, v2), dtype=float)
        return out


@dataclass(frozen=True)
class GrowthViolation:
    field_index: int  # -1 for the drift
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    magnitude: float
    bound: float


@dataclass(frozen=True)
class GrowthReport:
    n_samples: int
    max_ratio: float
    violations: list

    @property
    def ok(self):
        return not self.violations


def check_growth_bound(fields, samples):
    """Spot-check ``|g_i(x,u,v)| <= growth * (1 + |(x,u)|)`` over a sample cloud.

    ``samples`` is an iterable of ``(x, u, v)`` triples.  Failures are
    collected and reported rather than raised, since the declared constant is
    metadata and a violation means the declaration is inconsistent.
    """
    violations = []
    max_ratio = 0.0
    count = 0
    for x, u, v in samples:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        count += 1
        bound = fields.growth * (1.0 + np.hypot(np.linalg.norm(x), np.linalg.norm(u)))
        evals = [(-1, fields.g0(x, u, v))]
        evals += [(i, g(x, u, v)) for i, g in enumerate(fields.g_impulse)]
        for idx, g in evals:
            mag = float(np.linalg.norm(np.asarray(g, dtype=float)))
            max_ratio = max(max_ratio, mag / bound)
            if mag > bound:
                violations.append(GrowthViolation(idx, x, u, v, mag, bound))
    return GrowthReport(n_samples=count, max_ratio=max_ratio, violations=violations)


# -- sampled trajectories ---------------------------------------------------

@dataclass(frozen=True)
class JumpRecord:
    """State discontinuity at a single time: left limit and committed value."""

    time: float
    left: np.ndarray
    right: np.ndarray


class Trajectory:
    """States sampled on a strictly increasing time grid.

    Values between nodes interpolate linearly.  At a registered jump time the
    node state is the committed (right) value; the left limit lives in the
    jump record.
    """

    def __init__(self, times, states, jumps=None):
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if times.ndim != 1 or states.shape[0] != times.size:
            raise ValueError("times and states must align")
        if times.size < 2:
            raise ValueError("a trajectory needs at least two nodes")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(states)):
            raise ValueError("states must be finite")
        self.times = times
        self.states = states
        self.jumps = list(jumps) if jumps else []
        for j in self.jumps:
            if not (times[0] <= j.time <= times[-1]):
                raise ValueError("jump time outside the trajectory span")

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def horizon(self):
        return float(self.times[-1])

    def value(self, t):
        """State at time(s) ``t`` by linear interpolation (right value at jumps)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0] - 1e-12) or np.any(t > self.times[-1] + 1e-12):
            raise ValueError("query time outside the trajectory span")
        tq = np.clip(t, self.times[0], self.times[-1])
        cols = [np.interp(tq, self.times, self.states[:, i]) for i in range(self.dim)]
        out = np.stack(cols, axis=-1)
        return out

    def final_state(self):
        return self.states[-1].copy()

    def left_limit(self, t):
        """Left limit at ``t``; differs from value(t) only at a jump."""
        for j in self.jumps:
            if abs(j.time - t) <= 1e-12:
                return np.asarray(j.left, dtype=float).copy()
        return self.value(t)

    def csv_rows(self):
        """Rows ``t, x1..xn``; jump times emit the left limit first."""
        jump_at = {round(j.time, 15): j for j in self.jumps}
        rows = []
        for i, t in enumerate(self.times):
            j = jump_at.get(round(float(t), 15))
            if j is not None:
                rows.append([float(t)] + [float(a) for a in j.left])
            rows.append([float(t)] + [float(a) for a in self.states[i]])
        return rows

    def csv_header(self):
        return ["t"] + [f"x{i + 1}" for i in range(self.dim)]


class ParamPath:
    """State path over the graph parameter: nodes ``(s, t(s), xi(s))``."""

    def __init__(self, s, t, states):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if s.ndim != 1 or t.shape != s.shape or states.shape[0] != s.size:
            raise ValueError("parameter, time and state arrays must align")
        if np.any(np.diff(s) <= 0):
            raise ValueError("parameter nodes must be strictly increasing")
        self.s = s
        self.t = t
        self.states = states

    @property
    def dim(self):
        return self.states.shape[1]

    @property
    def horizon(self):
        return float(self.s[-1])

    def value(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < self.s[0] - 1e-9) or np.any(s > self.s[-1] + 1e-9):
            raise ValueError("query parameter outside the path span")
        sq = np.clip(s, self.s[0], self.s[-1])
        cols = [np.interp(sq, self.s, self.states[:, i]) for i in range(self.dim)]
        return np.stack(cols, axis=-1)

    def time_at(self, s):
        sq = np.clip(np.asarray(s, dtype=float), self.s[0], self.s[-1])
        return np.interp(sq, self.s, self.t)

    def final_state(self):
        return self.states[-1].copy()

    def csv_rows(self):
        return [
            [float(self.s[i]), float(self.t[i])] + [float(a) for a in self.states[i]]
            for i in range(self.s.size)
        ]

    def csv_header(self):
        return ["s", "t"] + [f"x{i + 1}" for i in range(self.dim)]
