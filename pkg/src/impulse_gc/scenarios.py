"""Built-in benchmark systems, controls, and cost functionals.

Two four/five-dimensional oscillation benchmarks with closed-form solutions
drive the cost-gap tables; the remaining scenarios are small jump benchmarks
(a scalar integrator, the nonholonomic integrator with and without a scaled
channel input, and a commutative pair of constant fields) used to probe
bridge dependence and the approximation sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bv_controls import ControlPath, OrdinaryControl
from .core_types import Box, ControlSet, Modulus, VectorFieldSet

__all__ = [
    "CUTOFF_RADIUS",
    "example21_fields",
    "example22_fields",
    "example21_controls",
    "example21_closed_form",
    "example22_closed_form",
    "example21_cost_closed_form",
    "example22_mayer_closed_form",
    "cost_bolza",
    "cost_mayer",
    "admissibility_residual",
    "brockett_fields",
    "commutative_fields",
    "scalar_integrator_fields",
    "random_ac_control",
    "Scenario",
    "builtin_scenarios",
    "scenario_by_id",
]

TWO_PI = 2.0 * math.pi

#: radius where the state cut-off starts to roll off
CUTOFF_RADIUS = 10.0


def _cutoff(x4):
    """Cubic roll-off in the first four state coordinates: one inside the
    cut-off radius, zero beyond twice the radius."""
    r = float(np.linalg.norm(x4))
    R = CUTOFF_RADIUS
    if r <= R:
        return 1.0
    if r >= 2.0 * R:
        return 0.0
    q = (r - R) / R
    return 1.0 - q * q * (3.0 - 2.0 * q)


def example21_fields():
    """Four-state oscillation benchmark: two channels rotate the control
    plane while the third and fourth states multiply exponentially; the
    drift feeds the ordinary input into the fourth state only."""

    def g0(x, u, v1):
        e = _cutoff(x[:4])
        return np.array([0.0, 0.0, 0.0, e * v1[0]])

    def g1(x, u, v2):
        e = _cutoff(x[:4])
        return np.array([e, 0.0, e * x[2] * x[1], -e * x[3] * x[1]])

    def g2(x, u, v2):
        e = _cutoff(x[:4])
        return np.array([0.0, e, -e * x[2] * x[0], e * x[3] * x[0]])

    return VectorFieldSet(
        n=4,
        m=2,
        g0=g0,
        g_impulse=[g1, g2],
        lipschitz=250.0,
        growth=200.0,
        v_modulus=Modulus.linear(1.0),
        v2_active=False,
        name="oscillation-4d",
    )


def example22_fields():
    """Five-state variant: the appended state integrates the magnitudes of
    both inputs, so a vanishing final value certifies that the approximating
    inputs themselves vanish in the limit."""

    def g0(x, u, v1):
        e = _cutoff(x[:4])
        val = float(v1[0])
        return np.array([0.0, 0.0, 0.0, e * val, abs(val) + float(np.linalg.norm(u))])

    def g1(x, u, v2):
        e = _cutoff(x[:4])
        return np.array([e, 0.0, e * x[2] * x[1], -e * x[3] * x[1], 0.0])

    def g2(x, u, v2):
        e = _cutoff(x[:4])
        return np.array([0.0, e, -e * x[2] * x[0], e * x[3] * x[0], 0.0])

    return VectorFieldSet(
        n=5,
        m=2,
        g0=g0,
        g_impulse=[g1, g2],
        lipschitz=250.0,
        growth=200.0,
        v_modulus=Modulus.linear(2.0),
        v2_active=False,
        name="oscillation-5d",
    )


def _check_oscillation_k(k):
    if k != int(k) or k < 1:
        raise ValueError("the oscillation index k must be a positive integer")
    return int(k)


def example21_controls(k, samples_per_period=None):
    """The k-th oscillating control pair on [0, 2*pi].

    The control rests at the origin for one oscillation period, then traces
    k - 1 shrinking circles; the ordinary input is a single rectangle over
    the resting period.  ``samples_per_period`` controls the polyline density;
    the default scales with the total variation so the polyline's variation
    deficit stays below 5e-4 at every k.
    """
    k = _check_oscillation_k(k)
    if samples_per_period is None:
        var = TWO_PI * (k - 1) * float(k) ** (-1.0 / 3.0)
        # chord deficit is var * (2*pi/spp)^2 / 24; keep it below 5e-4
        samples_per_period = max(256, math.ceil(TWO_PI * math.sqrt(var / 0.012)))
    if samples_per_period < 64:
        raise ValueError("need at least 64 samples per period")
    head = TWO_PI / k
    amp = float(k) ** (-1.0 / 3.0)
    rate = k * math.exp(-TWO_PI * float(k) ** (1.0 / 3.0))
    if k == 1:
        u = ControlPath.constant([0.0, 0.0], TWO_PI)
        v = OrdinaryControl([0.0, TWO_PI], [[rate]])
        return u, v
    n = (k - 1) * int(samples_per_period) + 1
    ts = np.linspace(head, TWO_PI, n)
    vals = amp * np.stack([np.cos(k * ts) - 1.0, np.sin(k * ts)], axis=1)
    vals[0] = 0.0
    vals[-1] = 0.0
    times = np.concatenate([[0.0], ts])
    values = np.vstack([[0.0, 0.0], vals])
    u = ControlPath.from_samples(times, values)
    v = OrdinaryControl([0.0, head, TWO_PI], [[rate], [0.0]])
    return u, v


def example21_closed_form(k, ts):
    """Exact solution samples for the k-th oscillating pair (four states)."""
    k = _check_oscillation_k(k)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < -1e-12) or np.any(ts > TWO_PI + 1e-12):
        raise ValueError("time must lie in [0, 2*pi]")
    head = TWO_PI / k
    amp = float(k) ** (-1.0 / 3.0)
    cbrt = float(k) ** (1.0 / 3.0)
    rate = k * math.exp(-TWO_PI * cbrt)
    out = np.zeros((ts.size, 4))
    tail = ts >= head - 1e-12
    t_head = ts[~tail]
    out[~tail, 2] = 1.0
    out[~tail, 3] = rate * t_head
    t_tail = ts[tail]
    wobble = t_tail - np.sin(k * t_tail) / k
    out[tail, 0] = amp * (np.cos(k * t_tail) - 1.0)
    out[tail, 1] = amp * np.sin(k * t_tail)
    out[tail, 2] = np.exp(-cbrt * (wobble - head))
    out[tail, 3] = TWO_PI * np.exp(cbrt * (wobble - head - TWO_PI))
    return out


def _abs_sin_integral(theta):
    """Integral of |sin| from 0 to theta (theta >= 0), exact."""
    theta = np.asarray(theta, dtype=float)
    whole = np.floor(theta / math.pi)
    frac = theta - whole * math.pi
    return 2.0 * whole + 1.0 - np.cos(frac)


def example22_closed_form(k, ts, with_input=True):
    """Exact five-state samples: the oscillating base plus the accumulated
    input magnitudes.  ``with_input=False`` gives the fixed-zero-input
    variant, whose fourth state vanishes identically."""
    k = _check_oscillation_k(k)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    base = example21_closed_form(k, ts)
    head = TWO_PI / k
    amp = float(k) ** (-1.0 / 3.0)
    rate = k * math.exp(-TWO_PI * float(k) ** (1.0 / 3.0))
    out = np.zeros((ts.size, 5))
    out[:, :4] = base
    if not with_input:
        out[:, 3] = 0.0
    u_cum = np.zeros(ts.size)
    tail = ts >= head - 1e-12
    theta = np.maximum(k * ts[tail] / 2.0 - math.pi, 0.0)
    u_cum[tail] = (4.0 * amp / k) * _abs_sin_integral(theta)
    v_cum = rate * np.minimum(ts, head) if with_input else 0.0
    out[:, 4] = u_cum + v_cum
    return out


def example21_cost_closed_form(k):
    """Exact running-plus-endpoint cost of the k-th oscillating pair."""
    k = _check_oscillation_k(k)
    cbrt = float(k) ** (1.0 / 3.0)
    l1_u = 8.0 * (k - 1) / float(k) ** (4.0 / 3.0)
    l1_v = TWO_PI * math.exp(-TWO_PI * cbrt)
    endpoint = (TWO_PI * (1.0 - math.exp(-TWO_PI * float(k) ** (-2.0 / 3.0)))) ** 2
    return l1_u + l1_v + endpoint


def example22_mayer_closed_form(k, with_input=True):
    """Exact final-state cost and admissibility residual of the k-th pair."""
    k = _check_oscillation_k(k)
    cbrt = float(k) ** (1.0 / 3.0)
    head = TWO_PI / k
    x3 = math.exp(-cbrt * (TWO_PI - head))
    l1_u = 8.0 * (k - 1) / float(k) ** (4.0 / 3.0)
    if with_input:
        x4 = TWO_PI * math.exp(-TWO_PI * float(k) ** (-2.0 / 3.0))
        residual = TWO_PI * math.exp(-TWO_PI * cbrt) + l1_u
    else:
        x4 = 0.0
        residual = l1_u
    return x3 + abs(TWO_PI - x4), residual


def _trapezoid(y, x):
    fn = getattr(np, "trapezoid", None) or np.trapz
    return float(fn(y, x))


def cost_bolza(x, u, v):
    """Running input-magnitude cost plus the squared final gap of the fourth
    state, by trapezoid quadrature on the trajectory grid."""
    if abs(u.horizon - TWO_PI) > 1e-9:
        raise ValueError("this cost is defined on the horizon 2*pi")
    grid = x.times
    running = np.linalg.norm(u.values(grid), axis=1) + np.linalg.norm(
        v.values1(grid), axis=1
    )
    endpoint = (TWO_PI - float(x.value(TWO_PI)[3])) ** 2
    return _trapezoid(running, grid) + endpoint


def cost_mayer(x):
    """Final-state cost |x3| + |2*pi - x4|."""
    xe = x.final_state()
    if xe.size < 4:
        raise ValueError("cost needs at least four state components")
    return abs(float(xe[2])) + abs(TWO_PI - float(xe[3]))


def admissibility_residual(x):
    """Magnitude of the appended fifth state at the final time."""
    xe = x.final_state()
    if xe.size < 5:
        raise ValueError("residual needs the appended fifth state")
    return abs(float(xe[4]))


def scalar_integrator_fields():
    """One state driven directly by the single control derivative."""

    def g0(x, u, v1):
        return np.zeros(1)

    def g1(x, u, v2):
        return np.ones(1)

    return VectorFieldSet(
        n=1,
        m=1,
        g0=g0,
        g_impulse=[g1],
        lipschitz=0.0,
        growth=2.0,
        name="scalar-integrator",
    )


def brockett_fields(drift=False, v_scaled=False):
    """The nonholonomic integrator: two channels move the plane while the
    third state picks up the signed area.

    With ``drift`` the third state also integrates ``v1 * (1 + x1)``; with
    ``v_scaled`` both channels are scaled by ``1 + v2/2``, making the jump
    outcome depend on the channel-side ordinary input.
    """

    def scale(v2):
        return 1.0 + 0.5 * float(v2[0]) if v_scaled else 1.0

    def g0(x, u, v1):
        if not drift:
            return np.zeros(3)
        return np.array([0.0, 0.0, float(v1[0]) * (1.0 + x[0])])

    def g1(x, u, v2):
        c = scale(v2)
        return np.array([c, 0.0, -c * x[1]])

    def g2(x, u, v2):
        c = scale(v2)
        return np.array([0.0, c, c * x[0]])

    return VectorFieldSet(
        n=3,
        m=2,
        g0=g0,
        g_impulse=[g1, g2],
        lipschitz=3.0,
        growth=6.0,
        v_modulus=Modulus.linear(3.0),
        v2_active=v_scaled,
        name="area-integrator" + ("-drift" if drift else "") + ("-scaled" if v_scaled else ""),
    )


def commutative_fields():
    """Two constant channel fields; all brackets vanish, so jump outcomes
    cannot depend on the bridge."""

    def g0(x, u, v1):
        return np.zeros(3)

    def g1(x, u, v2):
        return np.array([1.0, 0.0, 0.5])

    def g2(x, u, v2):
        return np.array([0.0, 1.0, -0.25])

    return VectorFieldSet(
        n=3,
        m=2,
        g0=g0,
        g_impulse=[g1, g2],
        lipschitz=0.0,
        growth=2.0,
        name="constant-pair",
    )


def random_ac_control(rng, horizon, dim, scale, n_nodes=24, anchor=None):
    """Random polyline control anchored at a prescribed initial value."""
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    times = np.linspace(0.0, float(horizon), int(n_nodes))
    values = rng.uniform(-scale, scale, size=(int(n_nodes), int(dim)))
    values[0] = 0.0 if anchor is None else np.asarray(anchor, dtype=float)
    return ControlPath.from_samples(times, values)


@dataclass(frozen=True)
class Scenario:
    """A named benchmark: fields, initial data, geometry, cost tag, and the
    declared acceptance tolerance and sweep for its convergence checks."""

    identifier: str
    fields: VectorFieldSet
    x0: np.ndarray
    u0: np.ndarray
    horizon: float
    control_set: ControlSet
    input_set: ControlSet
    cost: str = "none"
    constraint: str = ""
    tolerance: float = 1e-6
    sweep: tuple = ()
    synthetic: bool = False
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "u0", np.asarray(self.u0, dtype=float))
        if self.x0.size != self.fields.n:
            raise ValueError("initial state does not match the field dimension")
        if self.u0.size != self.fields.m or self.control_set.dim != self.fields.m:
            raise ValueError("control data does not match the channel count")
        if not self.control_set.contains(self.u0):
            raise ValueError("initial control value lies outside the control set")
        if self.cost not in ("none", "bolza", "mayer"):
            raise ValueError("cost tag must be none, bolza, or mayer")
        if list(self.sweep) != sorted(set(int(k) for k in self.sweep)):
            raise ValueError("sweep must be strictly increasing")

    def manifest(self):
        return {
            "id": self.identifier,
            "system": self.fields.name,
            "state_dim": self.fields.n,
            "channels": self.fields.m,
            "horizon": float(self.horizon),
            "cost": self.cost,
            "constraint": self.constraint,
            "tolerance": float(self.tolerance),
            "sweep": [int(k) for k in self.sweep],
            "synthetic": bool(self.synthetic),
            "notes": self.notes,
        }


def builtin_scenarios():
    """The six named benchmarks with their declared tolerances and sweeps."""
    box2 = Box([-2.0, -2.0], [2.0, 2.0])
    vbox = Box([-2.0], [2.0])
    scenarios = [
        Scenario(
            "example-2.1",
            example21_fields(),
            np.array([0.0, 0.0, 1.0, 0.0]),
            np.array([0.0, 0.0]),
            TWO_PI,
            box2,
            Box([-1.0], [1.0]),
            cost="bolza",
            tolerance=5e-3,
            sweep=(8, 16, 32),
            notes="oscillating sequence with closed-form solution and running cost",
        ),
        Scenario(
            "example-2.2",
            example22_fields(),
            np.array([0.0, 0.0, 1.0, 0.0, 0.0]),
            np.array([0.0, 0.0]),
            TWO_PI,
            box2,
            Box([-1.0], [1.0]),
            cost="mayer",
            constraint="final fifth state = 0 (reported as a residual)",
            tolerance=1e-2,
            sweep=(8, 16, 32),
            notes="final-state cost with an appended input-magnitude state",
        ),
        Scenario(
            "brockett",
            brockett_fields(),
            np.zeros(3),
            np.array([0.0, 0.0]),
            1.0,
            box2,
            vbox,
            tolerance=1e-3,
            notes="jump outcome depends on the bridge (area integrator)",
        ),
        Scenario(
            "scalar-jump",
            scalar_integrator_fields(),
            np.zeros(1),
            np.array([0.0]),
            1.0,
            Box([0.0], [1.0]),
            vbox,
            tolerance=1e-6,
            notes="unit jump integrates to a unit step",
        ),
        Scenario(
            "commutative-pair",
            commutative_fields(),
            np.zeros(3),
            np.array([0.0, 0.0]),
            1.0,
            box2,
            vbox,
            tolerance=4e-6,
            notes="constant channels: bridge-independent jumps",
        ),
        Scenario(
            "brockett-v2-jump",
            brockett_fields(drift=True, v_scaled=True),
            np.zeros(3),
            np.array([0.0, 0.0]),
            1.0,
            box2,
            vbox,
            tolerance=1e-2,
            sweep=(16, 64, 256),
            synthetic=True,
            notes="synthetic showcase: channel scale 1 + v2/2 makes the jump input-dependent",
        ),
    ]
    return scenarios


def scenario_by_id(identifier):
    for sc in builtin_scenarios():
        if sc.identifier == identifier:
            return sc
    raise KeyError(f"unknown scenario {identifier!r}")
