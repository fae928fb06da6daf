"""Rolling-horizon intervention planning over a simulated PMESII country.

The library pairs a stochastic ground-truth simulator (the "plant") with a
deliberately imperfect planner model, a degraded observation channel, a
receding-horizon controller, a phased five-cell wargame engine, and a
two-timescale next-state planning layer, plus a CLI / HTTP harness for
experiments and live sessions.
"""

from .domain import (
    Action,
    ActionPlan,
    MismatchSpec,
    Objective,
    ObservationSource,
    PMESII_CATEGORIES,
    PmesiiState,
    PmesiiVariable,
    Scenario,
    horizon_schedule,
    load_scenario,
    validate_plan,
    validate_scenario,
    weighted_distance,
)
from .forecast import (
    ForecastTrajectory,
    ModelParams,
    derive_model,
    forecast,
    forecast_error,
    objective_cost,
    one_step_error,
    recalibrate,
)
from .mpc import (
    EpisodeRecord,
    PlanConstraints,
    ReplanPolicy,
    ReplanReason,
    RunLog,
    enumerate_plans,
    evaluate_plan,
    optimize_plan,
    run_closed_loop,
    run_open_loop,
    should_replan,
)
from .plant import (
    CrisisEvent,
    PlantParams,
    Trajectory,
    crisis_flags,
    simulate_plant,
    step_plant,
)
from .reporting import EstimatedState, ObservationReport, fuse, observe
from .scenarios import demo_document, demo_scenario, perfect_scenario

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
