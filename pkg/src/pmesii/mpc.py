"""Receding-horizon control: plan, execute a slice, reassess, replan.

A run covers the scenario horizon week by week. Every week the channel
reports are fused into a situation estimate; a replan fires on a scripted
crisis, on estimate-vs-forecast deviation past the threshold, or when the
replan period elapses (priority CRISIS > DEVIATION > PERIODIC). Each
replan re-optimizes the remaining planning window from the current
estimate under the planner's (imperfect) model, never touching already
executed controls.

Plan optimization is seeded local search: greedy insertion from the empty
plan, then first-improvement over an add/remove/shift-one-activation
neighborhood, with random restarts. Candidate neighborhoods are evaluated
as one batched rollout for speed; the final winner is re-scored with the
scalar evaluator so the returned cost is exactly reproducible by
``evaluate_plan``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .domain import (
    Action,
    ActionPlan,
    Activation,
    Objective,
    PmesiiState,
    Scenario,
    WEEKS_PER_MONTH,
    make_rng,
    validate_plan,
    weighted_distance,
)
from .errors import ConstraintError, DimensionError
from .forecast import ModelParams, derive_model, objective_cost
from .plant import (
    crisis_shock_matrix,
    draw_shocks,
    rollout,
    rollout_batch,
    step_values,
    weekly_controls,
)
from .reporting import fuse, observe

DEFAULT_RESTARTS = 4


class ReplanReason(str, Enum):
    PERIODIC = "PERIODIC"
    DEVIATION = "DEVIATION"
    CRISIS = "CRISIS"
    NONE = "NONE"


@dataclass(frozen=True)
class ReplanPolicy:
    """When to revisit the plan."""

    period_months: int
    deviation_tau: float = math.inf
    crisis_triggers: bool = True

    def __post_init__(self):
        if self.period_months < 1:
            raise ConstraintError("replan period must be >= 1 month")
        if self.deviation_tau < 0:
            raise ConstraintError("deviation threshold must be >= 0")


def should_replan(week: int, last_replan_week: int, deviation: float,
                  crisis_pending: bool, policy: ReplanPolicy) -> tuple[bool, ReplanReason]:
    """Fixed trigger priority: CRISIS > DEVIATION > PERIODIC."""
    if week < last_replan_week:
        raise ConstraintError("week precedes the last replan week")
    if crisis_pending and policy.crisis_triggers:
        return True, ReplanReason.CRISIS
    if deviation > policy.deviation_tau:
        return True, ReplanReason.DEVIATION
    if week - last_replan_week >= WEEKS_PER_MONTH * policy.period_months:
        return True, ReplanReason.PERIODIC
    return False, ReplanReason.NONE


# ---------------------------------------------------------------------------
# Plan evaluation
# ---------------------------------------------------------------------------

def evaluate_plan(model: ModelParams, start: PmesiiState, plan: ActionPlan,
                  objective: Objective, scenario: Scenario, weeks: int | None = None) -> float:
    """Deterministic-forecast cost of a plan: discounted quadratic goal
    deviation plus the action-month charge. Validates the plan first."""
    validate_plan(plan, scenario, actor="Blue")
    ids = tuple(a.id for a in scenario.actions)
    if weeks is None:
        weeks = plan.end_month * WEEKS_PER_MONTH - start.week
    if weeks < 0:
        raise DimensionError("plan window ends before the start state's week")
    controls = weekly_controls(plan, ids, start.week, weeks)
    values = rollout(model.A, model.B, model.c, start.values, controls, None)
    return objective_cost(values, objective, plan.action_months())


@dataclass(frozen=True)
class PlanConstraints:
    """Search space for the optimizer: window, resources, and catalog.

    ``action_ids`` is the full control-column order of the model;
    ``catalog`` the subset of actions the plan may schedule.
    """

    start_month: int
    horizon_months: int
    budget: float
    concurrency_cap: int
    catalog: tuple[Action, ...]
    action_ids: tuple[str, ...]
    restarts: int = DEFAULT_RESTARTS
    warm_start: tuple[Activation, ...] | None = None

    @classmethod
    def from_scenario(cls, scenario: Scenario, start_month: int = 0,
                      horizon_months: int | None = None, budget: float | None = None,
                      restarts: int = DEFAULT_RESTARTS,
                      warm_start: tuple | None = None) -> "PlanConstraints":
        return cls(
            start_month=start_month,
            horizon_months=scenario.horizon_months if horizon_months is None else horizon_months,
            budget=scenario.budget if budget is None else budget,
            concurrency_cap=scenario.concurrency_cap,
            catalog=scenario.actions_for("Blue"),
            action_ids=tuple(a.id for a in scenario.actions),
            restarts=restarts,
            warm_start=warm_start,
        )

    @property
    def end_month(self) -> int:
        return self.start_month + self.horizon_months


class _PlanSearch:
    """Shared machinery for one optimize_plan call (cost cache, batching)."""

    def __init__(self, model: ModelParams, start: PmesiiState, objective: Objective,
                 cons: PlanConstraints):
        self.model = model
        self.start = start
        self.objective = objective
        self.cons = cons
        self.weeks = cons.end_month * WEEKS_PER_MONTH - start.week
        self.cost_of = {a.id: a.cost for a in cons.catalog}
        self.column = {aid: k for k, aid in enumerate(cons.action_ids)}
        self.m = len(cons.action_ids)
        self._cache: dict[tuple, float] = {}
        # all candidate activations, canonically ordered
        self.candidates: list[tuple[str, int, int]] = []
        for a in sorted(cons.catalog, key=lambda a: a.id):
            for s in range(cons.start_month, cons.end_month):
                for e in range(s + a.min_duration_months - 1, cons.end_month):
                    self.candidates.append((a.id, s, e))

    # -- feasibility ------------------------------------------------------

    def spend(self, activations) -> float:
        return sum((e - s + 1) * self.cost_of[aid] for aid, s, e in activations)

    def feasible(self, activations) -> bool:
        if self.spend(activations) > self.cons.budget + 1e-9:
            return False
        used = [aid for aid, _, _ in activations]
        if len(set(used)) != len(used):
            return False
        for month in range(self.cons.start_month, self.cons.end_month):
            if sum(1 for _, s, e in activations if s <= month <= e) > self.cons.concurrency_cap:
                return False
        return True

    # -- costing ----------------------------------------------------------

    def _controls(self, activations) -> np.ndarray:
        out = np.zeros((self.weeks, self.m))
        for aid, s, e in activations:
            w0 = max(s * WEEKS_PER_MONTH, self.start.week)
            w1 = min((e + 1) * WEEKS_PER_MONTH, self.start.week + self.weeks)
            if w1 > w0:
                out[w0 - self.start.week : w1 - self.start.week, self.column[aid]] = 1.0
        return out

    def batch_costs(self, plans: list[tuple]) -> np.ndarray:
        """Costs for a list of activation tuples; cached entries reused."""
        costs = np.empty(len(plans))
        todo = []
        for i, acts in enumerate(plans):
            cached = self._cache.get(acts)
            if cached is None:
                todo.append(i)
            else:
                costs[i] = cached
        if todo:
            stack = np.stack([self._controls(plans[i]) for i in todo])
            values = rollout_batch(self.model.A, self.model.B, self.model.c,
                                   self.start.values, stack)
            dev = values - self.objective.goal
            per_week = (dev * dev) @ self.objective.weights
            discounts = self.objective.discount ** np.arange(self.weeks + 1)
            state_costs = per_week @ discounts
            for j, i in enumerate(todo):
                acts = plans[i]
                months = sum(e - s + 1 for _, s, e in acts)
                c = float(state_costs[j] + self.objective.action_cost_weight * months)
                self._cache[acts] = c
                costs[i] = c
        return costs

    def scalar_cost(self, activations) -> float:
        """Single-path cost, identical arithmetic to evaluate_plan."""
        controls = self._controls(activations)
        values = rollout(self.model.A, self.model.B, self.model.c, self.start.values,
                         controls, None)
        months = sum(e - s + 1 for _, s, e in activations)
        return objective_cost(values, self.objective, months)

    # -- moves ------------------------------------------------------------

    def neighbors(self, acts: tuple) -> list[tuple]:
        used = {aid for aid, _, _ in acts}
        out = []
        for cand in self.candidates:
            if cand[0] in used:
                continue
            nxt = tuple(sorted(acts + (cand,)))
            if self.feasible(nxt):
                out.append(nxt)
        for a in acts:
            out.append(tuple(x for x in acts if x != a))
        for a in acts:
            aid, s, e = a
            rest = tuple(x for x in acts if x != a)
            for ds in (-1, 1):
                s2, e2 = s + ds, e + ds
                if self.cons.start_month <= s2 and e2 < self.cons.end_month:
                    nxt = tuple(sorted(rest + ((aid, s2, e2),)))
                    if self.feasible(nxt):
                        out.append(nxt)
        return out

    def greedy(self, acts: tuple = ()) -> tuple:
        """Repeatedly insert the best single activation while it improves."""
        current = acts
        current_cost = self.batch_costs([current])[0]
        while True:
            used = {aid for aid, _, _ in current}
            adds = [
                tuple(sorted(current + (cand,)))
                for cand in self.candidates
                if cand[0] not in used and self.feasible(tuple(sorted(current + (cand,))))
            ]
            if not adds:
                return current
            costs = self.batch_costs(adds)
            best = int(np.argmin(costs))
            if costs[best] < current_cost:
                current, current_cost = adds[best], costs[best]
            else:
                return current

    def local_search(self, acts: tuple, rng: np.random.Generator) -> tuple:
        """First-improvement descent over the add/remove/shift neighborhood."""
        current = acts
        current_cost = self.batch_costs([current])[0]
        while True:
            moves = self.neighbors(current)
            if not moves:
                return current
            order = rng.permutation(len(moves))
            costs = self.batch_costs([moves[i] for i in order])
            improved = np.flatnonzero(costs < current_cost)
            if improved.size == 0:
                return current
            pick = int(order[improved[0]])
            current = moves[pick]
            current_cost = costs[improved[0]]

    def random_start(self, rng: np.random.Generator) -> tuple:
        order = rng.permutation(len(self.candidates))
        acts: tuple = ()
        used: set[str] = set()
        for i in order:
            cand = self.candidates[int(i)]
            if cand[0] in used or rng.random() >= 0.5:
                continue
            nxt = tuple(sorted(acts + (cand,)))
            if self.feasible(nxt):
                acts = nxt
                used.add(cand[0])
        return acts


def optimize_plan(model: ModelParams, start: PmesiiState, objective: Objective,
                  constraints: PlanConstraints, seed) -> ActionPlan:
    """Seeded local search over action schedules in the constraint window.

    The returned plan is feasible and never costs more than the empty plan
    under the same model (the empty plan is always a candidate).
    """
    if constraints.budget < -1e-9:
        raise ConstraintError("negative budget leaves no feasible plan")
    search = _PlanSearch(model, start, objective, constraints)
    rng = make_rng(seed)
    finalists: list[tuple] = [()]
    if constraints.warm_start is not None and search.feasible(constraints.warm_start):
        warm = tuple(sorted(constraints.warm_start))
        finalists.append(warm)
        finalists.append(search.local_search(search.greedy(warm), rng))
    for restart in range(max(1, constraints.restarts)):
        base = search.greedy(()) if restart == 0 else search.random_start(rng)
        finalists.append(search.local_search(base, rng))
    # Final selection by scalar cost so the result is exactly what
    # evaluate_plan reports; ties break on canonical activation order.
    best = min(set(finalists), key=lambda acts: (search.scalar_cost(acts), acts))
    return ActionPlan(
        start_month=constraints.start_month,
        horizon_months=constraints.horizon_months,
        activations=best,
    )


def enumerate_plans(constraints: PlanConstraints):
    """Yield every feasible plan using at most one activation per action.

    Test oracle companion to optimize_plan; intended for small instances
    (a few hundred schedules).
    """
    search_catalog = sorted(constraints.catalog, key=lambda a: a.id)
    windows_per_action = []
    for a in search_catalog:
        opts: list[tuple | None] = [None]
        for s in range(constraints.start_month, constraints.end_month):
            for e in range(s + a.min_duration_months - 1, constraints.end_month):
                opts.append((a.id, s, e))
        windows_per_action.append(opts)
    cost_of = {a.id: a.cost for a in search_catalog}

    def feasible(acts) -> bool:
        spend = sum((e - s + 1) * cost_of[aid] for aid, s, e in acts)
        if spend > constraints.budget + 1e-9:
            return False
        for month in range(constraints.start_month, constraints.end_month):
            if sum(1 for _, s, e in acts if s <= month <= e) > constraints.concurrency_cap:
                return False
        return True

    def rec(i: int, acts: tuple):
        if i == len(windows_per_action):
            if feasible(acts):
                yield ActionPlan(
                    start_month=constraints.start_month,
                    horizon_months=constraints.horizon_months,
                    activations=acts,
                )
            return
        for opt in windows_per_action[i]:
            nxt = acts if opt is None else tuple(sorted(acts + (opt,)))
            yield from rec(i + 1, nxt)

    yield from rec(0, ())


# ---------------------------------------------------------------------------
# Closed/open loop runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpisodeRecord:
    index: int
    week: int
    start_month: int
    reason: ReplanReason
    plan: ActionPlan
    predicted_cost: float
    optimized: bool


@dataclass
class RunLog:
    """Complete audit record of one closed- or open-loop run."""

    variable_ids: tuple[str, ...]
    true_values: np.ndarray      # (T+1, n)
    est_values: np.ndarray       # (T+1, n)
    pred_values: np.ndarray      # (T+1, n)
    replan_flags: np.ndarray     # (T+1,) bool
    replan_reasons: list[ReplanReason]
    episode_of_week: np.ndarray  # (T+1,) int
    active_actions: list[tuple[str, ...]]
    episodes: list[EpisodeRecord]
    final_cost: float
    executed_action_months: int
    open_loop: bool
    seed: object = None

    @property
    def weeks(self) -> int:
        return self.true_values.shape[0] - 1

    def to_csv(self, target) -> None:
        """One row per (week, variable); columns fixed by the export contract."""
        own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
        fh = open(target, "w", newline="", encoding="utf-8") if own else target
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([
                "week", "var_id", "true_value", "est_value", "pred_value",
                "replan_flag", "replan_reason", "episode", "active_actions",
            ])
            for t in range(self.true_values.shape[0]):
                actions = ";".join(self.active_actions[t])
                for i, vid in enumerate(self.variable_ids):
                    w.writerow([
                        t,
                        vid,
                        repr(float(self.true_values[t, i])),
                        repr(float(self.est_values[t, i])),
                        repr(float(self.pred_values[t, i])),
                        int(self.replan_flags[t]),
                        self.replan_reasons[t].value,
                        int(self.episode_of_week[t]),
                        actions,
                    ])
        finally:
            if own:
                fh.close()

    def csv_text(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def _plan_action_months_from(plan: ActionPlan, month: int) -> int:
    return sum(max(0, e - max(s, month) + 1) for _, s, e in plan.activations)


def _schedule_remainder(monthly_active: list[set[str]], scenario: Scenario,
                        start_month: int) -> tuple[Activation, ...]:
    """The incumbent schedule from ``start_month`` on, as activations.

    Used to warm-start a replan search so staying the course is always a
    candidate. Contiguous runs shorter than an action's minimum duration
    (clipped in-flight activations) are dropped.
    """
    out: list[Activation] = []
    H = len(monthly_active)
    ids = sorted({aid for months in monthly_active[start_month:] for aid in months})
    for aid in ids:
        min_dur = scenario.action(aid).min_duration_months
        month = start_month
        while month < H:
            if aid in monthly_active[month]:
                run_start = month
                while month < H and aid in monthly_active[month]:
                    month += 1
                if month - run_start >= min_dur:
                    out.append((aid, run_start, month - 1))
            else:
                month += 1
    return tuple(sorted(out))


def run_closed_loop(scenario: Scenario, seed: int, *, open_loop: bool = False,
                    restarts: int = DEFAULT_RESTARTS) -> RunLog:
    """Run the full anticipate-act cycle over the scenario horizon.

    Weekly sequence: observe and fuse, check the replan triggers, replan if
    one fired (re-optimizing the remaining window from the estimate), then
    advance the plant one week under the scheduled controls. Deterministic
    given (scenario, seed); paired open/closed runs share the same shock
    and observation-noise draws.
    """
    model = derive_model(
        scenario.plant,
        scenario.mismatch.level,
        scenario.mismatch.seed,
        scenario.mismatch.prune_threshold,
    )
    policy = ReplanPolicy(
        period_months=scenario.replan_period_months,
        deviation_tau=scenario.deviation_tau,
        crisis_triggers=True,
    )
    n = scenario.n_variables
    H = scenario.horizon_months
    T = scenario.horizon_weeks
    ids = tuple(a.id for a in scenario.actions)
    objective = scenario.objective
    roster_values = scenario.initial_state().values

    shocks = draw_shocks(scenario.plant, T, (seed, 0)) + crisis_shock_matrix(scenario.plant, 0, T)

    true_values = np.empty((T + 1, n))
    est_values = np.empty((T + 1, n))
    pred_values = np.empty((T + 1, n))
    replan_flags = np.zeros(T + 1, dtype=bool)
    reasons: list[ReplanReason] = [ReplanReason.NONE] * (T + 1)
    episode_of_week = np.zeros(T + 1, dtype=int)
    active_actions: list[tuple[str, ...]] = [()] * (T + 1)
    episodes: list[EpisodeRecord] = []

    true_values[0] = scenario.initial_state().values
    monthly_active: list[set[str]] = [set() for _ in range(H)]
    cost_of = {a.id: a.cost for a in scenario.actions}
    adopted_plan: ActionPlan | None = None
    last_replan = 0
    prev_estimate = None

    for t in range(T + 1):
        # 1. observe and fuse
        reports = []
        for k, src in enumerate(scenario.sources):
            measured = max(0, t - src.delay_weeks)
            truth = PmesiiState(week=measured, values=true_values[measured])
            reports.append(observe(truth, scenario.sources, src.id, (seed, 1, t, k)))
        estimate = fuse(reports, roster_values, previous=prev_estimate)
        prev_estimate = estimate
        est_values[t] = estimate.values

        # 2. replan decision
        deviation = 0.0
        if t == 0:
            fire, reason = True, ReplanReason.PERIODIC
        else:
            deviation = weighted_distance(est_values[t], pred_values[t], objective.weights)
            crisis_pending = any(
                last_replan < ev.week <= t for ev in scenario.plant.crises
            )
            fire, reason = should_replan(t, last_replan, deviation, crisis_pending, policy)
            if open_loop:
                fire, reason = False, ReplanReason.NONE

        if fire and t < T:
            start_month = -(-t // WEEKS_PER_MONTH)  # next month boundary (t itself if aligned)
            est_state = PmesiiState(week=t, values=est_values[t])
            if t > 0 and deviation == 0.0:
                # The estimate sits exactly on the adopted forecast: replanning
                # from it under the unchanged model is a no-op, so keep the
                # plan (and its forecast) instead of re-searching.
                plan = adopted_plan
                optimized = False
                predicted = objective_cost(
                    pred_values[t:], objective, _plan_action_months_from(plan, start_month)
                )
            else:
                executed_spend = sum(
                    cost_of[aid]
                    for month in range(min(start_month, H))
                    for aid in monthly_active[month]
                )
                cons = PlanConstraints.from_scenario(
                    scenario,
                    start_month=start_month,
                    horizon_months=H - start_month,
                    budget=scenario.budget - executed_spend,
                    restarts=restarts,
                    warm_start=_schedule_remainder(
                        monthly_active, scenario, start_month
                    ),
                )
                plan = optimize_plan(model, est_state, objective, cons, (seed, 3, len(episodes)))
                optimized = True
                for month in range(start_month, H):
                    monthly_active[month] = set(plan.active_ids(month))
                remaining = weekly_controls_from_schedule(monthly_active, ids, t, T - t)
                fvals = rollout(model.A, model.B, model.c, est_values[t], remaining, None)
                pred_values[t:] = fvals
                predicted = objective_cost(fvals, objective, plan.action_months())
            episodes.append(
                EpisodeRecord(
                    index=len(episodes),
                    week=t,
                    start_month=start_month,
                    reason=reason,
                    plan=plan,
                    predicted_cost=predicted,
                    optimized=optimized,
                )
            )
            adopted_plan = plan
            last_replan = t
            replan_flags[t] = True
            reasons[t] = reason

        episode_of_week[t] = len(episodes) - 1
        if t < T:
            month = t // WEEKS_PER_MONTH
            active = tuple(sorted(monthly_active[month]))
            active_actions[t] = active
            u = np.array([1.0 if aid in monthly_active[month] else 0.0 for aid in ids])
            true_values[t + 1] = step_values(
                true_values[t], scenario.plant.A, scenario.plant.B, scenario.plant.c,
                u, shocks[t],
            )

    executed_months = sum(len(s) for s in monthly_active)
    final_cost = objective_cost(true_values, objective, executed_months)
    return RunLog(
        variable_ids=scenario.variable_ids,
        true_values=true_values,
        est_values=est_values,
        pred_values=pred_values,
        replan_flags=replan_flags,
        replan_reasons=reasons,
        episode_of_week=episode_of_week,
        active_actions=active_actions,
        episodes=episodes,
        final_cost=final_cost,
        executed_action_months=executed_months,
        open_loop=open_loop,
        seed=seed,
    )


def run_open_loop(scenario: Scenario, seed: int, *, restarts: int = DEFAULT_RESTARTS) -> RunLog:
    """Plan once at week 0 and execute the whole horizon unmodified."""
    return run_closed_loop(scenario, seed, open_loop=True, restarts=restarts)


def weekly_controls_from_schedule(monthly_active: list[set[str]], action_ids,
                                  start_week: int, weeks: int) -> np.ndarray:
    out = np.zeros((weeks, len(action_ids)))
    column = {aid: k for k, aid in enumerate(action_ids)}
    for t in range(weeks):
        month = (start_week + t) // WEEKS_PER_MONTH
        if month < len(monthly_active):
            for aid in monthly_active[month]:
                out[t, column[aid]] = 1.0
    return out
