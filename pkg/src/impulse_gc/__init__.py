"""Numerics for control systems driven by derivatives of jumping inputs.

The package builds graph completions of bounded-variation controls, solves
the reparametrized dynamics with a fixed-step integrator, reconstructs the
time-side solution with its jump records, and manufactures absolutely
continuous approximating sequences whose solutions converge to the completed
one.  Built-in benchmark scenarios exercise the cost-gap phenomena between
regular, limit, and extended solution classes.
"""

from .bv_controls import (
    AcSegment,
    ArcLengthResult,
    ControlPath,
    Jump,
    OrdinaryControl,
    arc_length_param,
    sup_distance,
    variation,
)
from .core_types import (
    Ball,
    Box,
    ControlSet,
    ConvexPolytope,
    GrowthReport,
    JumpRecord,
    Modulus,
    ParamPath,
    StarUnion,
    Trajectory,
    VectorFieldSet,
    check_growth_bound,
    project_to_set,
)
from .graph_completion import (
    Clock,
    CompletionResult,
    Fiber,
    Reparametrization,
    SpaceTimeControl,
    complete_graph,
    normalize_feasible,
    two_leg_bridge,
    whitney_bridge,
)
from .limit_approx import (
    AcClock,
    ApproxRecord,
    ApproxSequenceReport,
    EquiuniformityRecord,
    GronwallRecord,
    approximate_sequence,
    check_equiuniformity,
    check_psi2_condition,
    compose_controls,
    default_test_grid,
    gronwall_bound,
    ramp_clock,
    ramp_windows,
    time_side_control,
    time_side_input,
    whitney_tail_fix,
)
from .ode_engine import (
    ConvergenceReport,
    DivergenceError,
    IntegratorConfig,
    reconstruct_solution,
    self_convergence_check,
    solve_caratheodory,
    solve_spacetime,
)
from .scenarios import (
    Scenario,
    admissibility_residual,
    brockett_fields,
    builtin_scenarios,
    commutative_fields,
    cost_bolza,
    cost_mayer,
    example21_closed_form,
    example21_controls,
    example21_cost_closed_form,
    example21_fields,
    example22_closed_form,
    example22_fields,
    example22_mayer_closed_form,
    random_ac_control,
    scalar_integrator_fields,
    scenario_by_id,
)

__version__ = "0.1.0"

__all__ = [
    "AcClock",
    "AcSegment",
    "ApproxRecord",
    "ApproxSequenceReport",
    "ArcLengthResult",
    "Ball",
    "Box",
    "Clock",
    "CompletionResult",
    "ControlPath",
    "ControlSet",
    "ConvergenceReport",
    "ConvexPolytope",
    "DivergenceError",
    "EquiuniformityRecord",
    "Fiber",
    "GronwallRecord",
    "GrowthReport",
    "IntegratorConfig",
    "Jump",
    "JumpRecord",
    "Modulus",
    "OrdinaryControl",
    "ParamPath",
    "Reparametrization",
    "Scenario",
    "SpaceTimeControl",
    "StarUnion",
    "Trajectory",
    "VectorFieldSet",
    "__version__",
    "admissibility_residual",
    "approximate_sequence",
    "arc_length_param",
    "brockett_fields",
    "builtin_scenarios",
    "check_equiuniformity",
    "check_growth_bound",
    "check_psi2_condition",
    "commutative_fields",
    "complete_graph",
    "compose_controls",
    "cost_bolza",
    "cost_mayer",
    "default_test_grid",
    "example21_closed_form",
    "example21_controls",
    "example21_cost_closed_form",
    "example21_fields",
    "example22_closed_form",
    "example22_fields",
    "example22_mayer_closed_form",
    "gronwall_bound",
    "normalize_feasible",
    "project_to_set",
    "ramp_clock",
    "ramp_windows",
    "random_ac_control",
    "reconstruct_solution",
    "scalar_integrator_fields",
    "scenario_by_id",
    "self_convergence_check",
    "solve_caratheodory",
    "solve_spacetime",
    "sup_distance",
    "time_side_control",
    "time_side_input",
    "two_leg_bridge",
    "variation",
    "whitney_bridge",
    "whitney_tail_fix",
]
