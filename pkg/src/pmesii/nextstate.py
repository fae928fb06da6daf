"""Two-timescale planning: long-horizon end-state direction, short-horizon
next-state plans.

The end state is an ordered path of machine-checkable milestones (per-
variable threshold conjunctions with target months). Each planning window:
assess progress against the path, form several teams with different
assumption sets (model variants / objective weightings), optimize one
candidate plan per team, score each by Monte Carlo feasibility and
quantile risk, select, and issue the winning plan as a frozen directive
for execution until the milestone month.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .domain import (
    ActionPlan,
    Objective,
    PmesiiState,
    Scenario,
    WEEKS_PER_MONTH,
    make_rng,
)
from .errors import ConstraintError, EmptyInputError, RangeError
from .forecast import ForecastTrajectory, derive_model, forecast
from .mpc import PlanConstraints, optimize_plan
from .plant import rollout_family
from .reporting import EstimatedState

NEXT_STATE_MIN_MONTHS = 3
NEXT_STATE_MAX_MONTHS = 5


@dataclass(frozen=True)
class ThresholdTerm:
    variable_id: str
    op: str  # ">=" or "<="
    bound: float

    def __post_init__(self):
        if self.op not in (">=", "<="):
            raise RangeError(f"threshold op must be >= or <=, got {self.op!r}")
        if not 0.0 <= self.bound <= 1.0:
            raise RangeError(f"threshold bound {self.bound} outside [0, 1]")

    def margin(self, value: float) -> float:
        return value - self.bound if self.op == ">=" else self.bound - value


@dataclass(frozen=True)
class MilestonePredicate:
    """Favorable conditions defining one next state, due by target_month."""

    id: str
    description: str
    terms: tuple[ThresholdTerm, ...]
    target_month: int

    def __post_init__(self):
        if not self.terms:
            raise RangeError(f"milestone {self.id!r} needs at least one term")

    def margin(self, values, scenario: Scenario) -> float:
        """Signed satisfaction margin: min over terms; >= 0 means satisfied."""
        vals = values.values if isinstance(values, (PmesiiState, EstimatedState)) else values
        return min(t.margin(float(vals[scenario.index_of(t.variable_id)])) for t in self.terms)


@dataclass(frozen=True)
class EndStatePath:
    """Ordered milestones stepping toward the end state."""

    milestones: tuple[MilestonePredicate, ...]
    horizon_months: int = 36

    def __post_init__(self):
        months = [m.target_month for m in self.milestones]
        if any(b <= a for a, b in zip(months, months[1:])):
            raise RangeError("milestone target months must be strictly increasing")


@dataclass(frozen=True)
class ProgressReport:
    margins: tuple[tuple[str, float], ...]
    satisfied: tuple[tuple[str, bool], ...]
    score: float


def assess_progress(estimate, path: EndStatePath, scenario: Scenario) -> ProgressReport:
    """Milestone margins plus an aggregate score: the recency-weighted
    fraction of satisfied milestones (later milestones weigh more, weight
    i+1 for the i-th)."""
    margins = []
    sats = []
    num = 0.0
    den = 0.0
    for i, m in enumerate(path.milestones):
        margin = m.margin(estimate, scenario)
        margins.append((m.id, margin))
        sat = margin >= 0.0
        sats.append((m.id, sat))
        weight = i + 1
        den += weight
        if sat:
            num += weight
    return ProgressReport(
        margins=tuple(margins),
        satisfied=tuple(sats),
        score=num / den if den else 0.0,
    )


# ---------------------------------------------------------------------------
# Alternative strategies from differing assumption sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionSet:
    """A team's planning assumptions: its own model variant and priorities."""

    id: str
    mismatch_level: float | None = None
    mismatch_seed: int | None = None
    weight_overrides: tuple[tuple[str, float], ...] = ()
    action_cost_weight: float | None = None

    def objective(self, scenario: Scenario, base: Objective | None = None) -> Objective:
        obj = base if base is not None else scenario.objective
        if not self.weight_overrides and self.action_cost_weight is None:
            return obj
        weights = obj.weights.copy()
        for vid, w in self.weight_overrides:
            weights[scenario.index_of(vid)] = w
        return Objective(
            goal=obj.goal,
            weights=weights,
            action_cost_weight=(
                obj.action_cost_weight if self.action_cost_weight is None
                else self.action_cost_weight
            ),
            discount=obj.discount,
        )

    def model(self, scenario: Scenario):
        return derive_model(
            scenario.plant,
            scenario.mismatch.level if self.mismatch_level is None else self.mismatch_level,
            scenario.mismatch.seed if self.mismatch_seed is None else self.mismatch_seed,
            scenario.mismatch.prune_threshold,
        )


@dataclass(frozen=True)
class StrategyAlternative:
    team_id: str
    assumption_id: str
    milestone: MilestonePredicate
    plan: ActionPlan
    predicted: ForecastTrajectory
    predicted_cost: float
    feasibility: float | None = None
    risk: float | None = None

    def scored(self, feasibility: float, risk: float) -> "StrategyAlternative":
        if not 0.0 <= feasibility <= 1.0:
            raise RangeError(f"feasibility {feasibility} outside [0, 1]")
        return replace(self, feasibility=feasibility, risk=risk)


def milestone_objective(scenario: Scenario, milestone: MilestonePredicate,
                        slack: float = 0.1, boost: float = 4.0) -> Objective:
    """Window objective aimed at the next state: milestone variables get the
    milestone bound (plus slack on the satisfying side) as their goal and at
    least ``boost`` weight; the action charge is softened because a
    next-state window is about reaching conditions, not economizing."""
    obj = scenario.objective
    goal = obj.goal.copy()
    weights = obj.weights.copy()
    for t in milestone.terms:
        i = scenario.index_of(t.variable_id)
        target = t.bound + slack if t.op == ">=" else t.bound - slack
        goal[i] = float(np.clip(target, 0.0, 1.0))
        weights[i] = max(weights[i], boost)
    return Objective(goal=goal, weights=weights,
                     action_cost_weight=min(obj.action_cost_weight, 0.02),
                     discount=obj.discount)


def plan_alternatives(estimate, milestone: MilestonePredicate, variants,
                      scenario: Scenario, seed, current_month: int = 0,
                      restarts: int = 4) -> list[StrategyAlternative]:
    """One optimized plan per assumption set, each under its own model.

    Plans optimize the milestone-targeted window objective (with each
    variant's weight overrides applied on top). Needs at least two variants
    (several teams); warns when the milestone window falls outside the
    expected 3-5 month band.
    """
    variants = list(variants)
    if len(variants) < 2:
        raise RangeError("need at least 2 assumption sets (several planning teams)")
    window = milestone.target_month - current_month
    if window < 1:
        raise RangeError("milestone target month is not ahead of the current month")
    if not NEXT_STATE_MIN_MONTHS <= window <= NEXT_STATE_MAX_MONTHS:
        warnings.warn(
            f"next-state window of {window} months is outside the usual "
            f"{NEXT_STATE_MIN_MONTHS}-{NEXT_STATE_MAX_MONTHS} month band"
        )
    start = estimate.as_state() if isinstance(estimate, EstimatedState) else estimate
    ids = tuple(a.id for a in scenario.actions)
    base = milestone_objective(scenario, milestone)
    out = []
    for k, variant in enumerate(variants):
        model = variant.model(scenario)
        objective = variant.objective(scenario, base=base)
        cons = PlanConstraints.from_scenario(
            scenario, start_month=current_month, horizon_months=window, restarts=restarts
        )
        # same search seed for every team: identical assumptions must yield
        # identical plans; diversity comes from the assumptions themselves
        plan = optimize_plan(model, start, objective, cons, (seed, 7))
        predicted = forecast(
            model, start, plan, window * WEEKS_PER_MONTH, ids, objective=objective
        )
        out.append(
            StrategyAlternative(
                team_id=f"team_{k}",
                assumption_id=variant.id,
                milestone=milestone,
                plan=plan,
                predicted=predicted,
                predicted_cost=float(predicted.predicted_cost),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Monte Carlo risk and feasibility
# ---------------------------------------------------------------------------

class PlantSampler:
    """Family of plausible plants around the scenario's true parameters:
    multiplicative parameter spread plus the scenario's weekly shocks."""

    def __init__(self, scenario: Scenario, parameter_spread: float = 0.2):
        self.scenario = scenario
        self.spread = parameter_spread

    def draw(self, trials: int, weeks: int, seed):
        rng = make_rng(seed)
        p = self.scenario.plant
        n, m = p.n, p.m

        def spreaded(base, size):
            eta = rng.uniform(-1.0, 1.0, size=size)
            return base * (1.0 + self.spread * eta)

        As = spreaded(p.A, (trials, n, n))
        Bs = spreaded(p.B, (trials, n, m))
        cs = spreaded(p.c, (trials, n))
        shocks = rng.normal(0.0, 1.0, size=(trials, weeks, n)) * p.sigma
        bound = 3.0 * p.sigma
        shocks = np.clip(shocks, -bound, bound)
        return As, Bs, cs, shocks


def assess_risk_feasibility(alternative: StrategyAlternative, sampler: PlantSampler,
                            trials: int, seed, start, scenario: Scenario,
                            current_month: int = 0) -> tuple[float, float]:
    """Monte Carlo over plant draws executing the plan open-loop.

    feasibility: fraction of draws whose end state satisfies the milestone.
    risk: 90th-percentile shortfall of the worst term margin (0 when the
    90th percentile of draws satisfies the milestone).
    """
    if trials < 1:
        raise RangeError("trials must be >= 1")
    start_state = start.as_state() if isinstance(start, EstimatedState) else start
    weeks = (alternative.milestone.target_month - current_month) * WEEKS_PER_MONTH
    ids = tuple(a.id for a in scenario.actions)
    from .plant import weekly_controls

    controls = weekly_controls(alternative.plan, ids, start_state.week, weeks)
    As, Bs, cs, shocks = sampler.draw(trials, weeks, seed)
    values = rollout_family(As, Bs, cs, start_state.values, controls, shocks)
    finals = values[:, -1, :]
    idx = {t.variable_id: scenario.index_of(t.variable_id) for t in alternative.milestone.terms}
    margins = np.full(trials, np.inf)
    for t in alternative.milestone.terms:
        col = finals[:, idx[t.variable_id]]
        term_margin = col - t.bound if t.op == ">=" else t.bound - col
        margins = np.minimum(margins, term_margin)
    feasibility = float(np.mean(margins >= 0.0))
    shortfalls = np.sort(np.maximum(0.0, -margins))
    risk = float(np.percentile(shortfalls, 90.0, method="linear"))
    return feasibility, risk


@dataclass(frozen=True)
class SelectionWeights:
    cost: float = 1.0
    infeasibility: float = 1.0
    risk: float = 1.0


def select_strategy(alternatives, weights: SelectionWeights = SelectionWeights()):
    """Minimize cost*w1 + (1-feasibility)*w2 + risk*w3; ties go to the
    lowest team id."""
    alternatives = list(alternatives)
    if not alternatives:
        raise EmptyInputError("no alternatives to select from")
    for alt in alternatives:
        if alt.feasibility is None or alt.risk is None:
            raise ConstraintError(f"{alt.team_id} has not been risk/feasibility scored")

    def score(alt: StrategyAlternative) -> float:
        return (
            weights.cost * alt.predicted_cost
            + weights.infeasibility * (1.0 - alt.feasibility)
            + weights.risk * alt.risk
        )

    return min(alternatives, key=lambda alt: (score(alt), alt.team_id))


# ---------------------------------------------------------------------------
# Directives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectiveRecord:
    position: int
    team_id: str
    assumption_id: str
    start_month: int
    end_month: int
    plan: ActionPlan
    content_hash: str


def _directive_hash(team_id: str, assumption_id: str, start_month: int,
                    end_month: int, plan: ActionPlan) -> str:
    body = json.dumps(
        {
            "team": team_id,
            "assumptions": assumption_id,
            "window": [start_month, end_month],
            "activations": [list(a) for a in plan.activations],
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


class DirectiveLog:
    """Issued next-state directives; one open window at a time."""

    def __init__(self):
        self.records: list[DirectiveRecord] = []

    def open_window(self, current_month: int) -> DirectiveRecord | None:
        if self.records and self.records[-1].end_month > current_month:
            return self.records[-1]
        return None


def issue_next_state_plan(chosen: StrategyAlternative, log: DirectiveLog,
                          current_month: int) -> DirectiveRecord:
    """Freeze the selected plan as the active directive for the coming
    window; re-issuing while a window is open is rejected."""
    existing = log.open_window(current_month)
    if existing is not None:
        raise ConstraintError(
            f"directive for window ending month {existing.end_month} is still open"
        )
    end_month = chosen.milestone.target_month
    rec = DirectiveRecord(
        position=len(log.records),
        team_id=chosen.team_id,
        assumption_id=chosen.assumption_id,
        start_month=current_month,
        end_month=end_month,
        plan=chosen.plan,
        content_hash=_directive_hash(chosen.team_id, chosen.assumption_id,
                                     current_month, end_month, chosen.plan),
    )
    log.records.append(rec)
    return rec


def alternatives_csv(alternatives, chosen, target) -> None:
    """team_id, assumption_id, predicted_cost, feasibility, risk, selected."""
    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["team_id", "assumption_id", "predicted_cost", "feasibility",
                    "risk", "selected"])
        for alt in alternatives:
            w.writerow([
                alt.team_id,
                alt.assumption_id,
                repr(float(alt.predicted_cost)),
                "" if alt.feasibility is None else repr(float(alt.feasibility)),
                "" if alt.risk is None else repr(float(alt.risk)),
                int(chosen is not None and alt.team_id == chosen.team_id),
            ])
    finally:
        if own:
            fh.close()


# ---------------------------------------------------------------------------
# Multi-window campaign (the jagged path toward the end state)
# ---------------------------------------------------------------------------

def end_state_path(scenario: Scenario, n_windows: int = 4, window_months: int = 4,
                   variable_ids=None) -> EndStatePath:
    """A default path: the heaviest-weighted variables step linearly from
    their initial values toward the objective goals."""
    if variable_ids is None:
        order = np.argsort(-scenario.objective.weights)
        variable_ids = [scenario.variables[i].id for i in order[:4]]
    milestones = []
    for w in range(1, n_windows + 1):
        frac = w / n_windows
        terms = []
        for vid in variable_ids:
            i = scenario.index_of(vid)
            start = scenario.variables[i].value
            goal = scenario.objective.goal[i]
            # step 60% of the remaining gap by the final window, with slack
            bound = start + (goal - start) * 0.6 * frac - 0.07
            terms.append(ThresholdTerm(variable_id=vid, op=">=",
                                       bound=float(np.clip(bound, 0.0, 1.0))))
        milestones.append(
            MilestonePredicate(
                id=f"next_state_{w}",
                description=f"stepping stone {w} of {n_windows}",
                terms=tuple(terms),
                target_month=w * window_months,
            )
        )
    return EndStatePath(milestones=tuple(milestones),
                        horizon_months=n_windows * window_months)


@dataclass
class WindowResult:
    index: int
    milestone_id: str
    chosen_team: str
    progress_before: float
    progress_after: float
    margin_after: float


@dataclass
class CampaignResult:
    windows: list[WindowResult]
    directives: DirectiveLog
    start_score: float
    end_score: float


def run_campaign(scenario: Scenario, path: EndStatePath | None = None,
                 variants=None, trials: int = 300, seed: int = 0,
                 restarts: int = 2) -> CampaignResult:
    """Execute consecutive next-state windows on the live plant.

    Each window plans alternatives from the current (observed) state,
    scores them, selects, issues the directive, then executes it open-loop
    on the true plant until the milestone month. Progress is scored per
    window; across a campaign it moves jaggedly but toward the end state.
    """
    from .plant import step_values, weekly_controls, draw_shocks, crisis_shock_matrix
    from .reporting import fuse, observe

    path = path or end_state_path(scenario)
    if variants is None:
        variants = [
            AssumptionSet(id="baseline"),
            AssumptionSet(id="alt_model", mismatch_seed=scenario.mismatch.seed + 1),
            AssumptionSet(id="security_first", weight_overrides=(("security_control", 2.5),)),
        ]
    total_weeks = path.milestones[-1].target_month * WEEKS_PER_MONTH
    shocks = draw_shocks(scenario.plant, total_weeks, (seed, 0)) + crisis_shock_matrix(
        scenario.plant, 0, total_weeks
    )
    ids = tuple(a.id for a in scenario.actions)
    sampler = PlantSampler(scenario)
    log = DirectiveLog()
    x = scenario.initial_state().values.copy()
    week = 0
    prev_est = None
    windows: list[WindowResult] = []
    start_score = end_score = 0.0
    for w_idx, milestone in enumerate(path.milestones):
        current_month = week // WEEKS_PER_MONTH
        reports = [
            observe(PmesiiState(week=week, values=x), scenario.sources, s.id,
                    (seed, 1, week, k))
            for k, s in enumerate(scenario.sources)
        ]
        estimate = fuse(reports, scenario.initial_state().values, previous=prev_est)
        prev_est = estimate
        before = assess_progress(estimate, path, scenario)
        if w_idx == 0:
            start_score = before.score
        est_state = PmesiiState(week=week, values=estimate.values)
        alts = plan_alternatives(est_state, milestone, variants, scenario,
                                 (seed, 2, w_idx), current_month=current_month,
                                 restarts=restarts)
        scored = [
            alt.scored(*assess_risk_feasibility(alt, sampler, trials, (seed, 3, w_idx, k),
                                                est_state, scenario, current_month))
            for k, alt in enumerate(alts)
        ]
        chosen = select_strategy(scored)
        issue_next_state_plan(chosen, log, current_month)
        target_week = milestone.target_month * WEEKS_PER_MONTH
        controls = weekly_controls(chosen.plan, ids, week, target_week - week)
        for t in range(week, target_week):
            x = step_values(x, scenario.plant.A, scenario.plant.B, scenario.plant.c,
                            controls[t - week], shocks[t])
        week = target_week
        reports = [
            observe(PmesiiState(week=week, values=x), scenario.sources, s.id,
                    (seed, 1, week, k))
            for k, s in enumerate(scenario.sources)
        ]
        estimate = fuse(reports, scenario.initial_state().values, previous=prev_est)
        prev_est = estimate
        after = assess_progress(estimate, path, scenario)
        end_score = after.score
        windows.append(
            WindowResult(
                index=w_idx,
                milestone_id=milestone.id,
                chosen_team=chosen.team_id,
                progress_before=before.score,
                progress_after=after.score,
                margin_after=milestone.margin(estimate, scenario),
            )
        )
    return CampaignResult(windows=windows, directives=log,
                          start_score=start_score, end_score=end_score)
