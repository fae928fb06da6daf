"""Shared vocabulary: variables, states, actions, plans, objectives, scenarios.

All state variables are normalized indices in [0, 1]. Planning happens at
monthly granularity while the simulation steps weekly; a month is fixed at
4 weeks and a year at 52 weeks (13 four-week months), which keeps every
schedule computation exact integer arithmetic.

Scenario documents are strict UTF-8 JSON with top-level keys
``variables``, ``plant``, ``mismatch``, ``observation``, ``actions``,
``objective``, ``control`` and ``crises``; unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConstraintError,
    DimensionError,
    RangeError,
    ScheduleError,
    SchemaError,
)

PMESII_CATEGORIES = (
    "Political",
    "Military",
    "Economic",
    "Social",
    "Infrastructure",
    "Information",
)

WEEKS_PER_MONTH = 4
MONTHS_PER_YEAR = 13  # 52-week year
WEEKS_PER_YEAR = WEEKS_PER_MONTH * MONTHS_PER_YEAR

ACTORS = ("Blue", "Red")

_SCENARIO_KEYS = {
    "variables",
    "plant",
    "mismatch",
    "observation",
    "actions",
    "objective",
    "control",
    "crises",
}

# Stability envelope for the coupling matrix (max row sum of |A| per week).
COUPLING_WARN_LIMIT = 0.2
COUPLING_REJECT_LIMIT = 0.5


def months_to_weeks(months: int) -> int:
    return months * WEEKS_PER_MONTH


def week_to_month(week: int) -> int:
    return week // WEEKS_PER_MONTH


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.setflags(write=False)
    return out


def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 generator. ``seed`` may be an int, a tuple of ints
    (hierarchical derivation), or a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PmesiiVariable:
    """One named index on the roster, with its initial value."""

    id: str
    category: str
    label: str
    value: float


@dataclass(frozen=True, eq=False)
class PmesiiState:
    """Values of every roster variable at a given week."""

    week: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PmesiiState):
            return NotImplemented
        return self.week == other.week and np.array_equal(self.values, other.values)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Action:
    """Catalog entry: an activatable measure with per-week additive effects.

    ``effect`` is aligned to the roster (index/week while active); ``cost``
    accrues per active month.
    """

    id: str
    actor: str
    effect: np.ndarray
    cost: float
    min_duration_months: int
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "effect", _readonly(self.effect))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Action):
            return NotImplemented
        return (
            self.id == other.id
            and self.actor == other.actor
            and np.array_equal(self.effect, other.effect)
            and self.cost == other.cost
            and self.min_duration_months == other.min_duration_months
            and self.description == other.description
        )


Activation = tuple[str, int, int]  # (action_id, start_month, end_month) inclusive


@dataclass(frozen=True)
class ActionPlan:
    """A schedule of action activations over a monthly planning window.

    Activations are ``(action_id, start_month, end_month)`` with both ends
    inclusive, carried in canonical sorted order so equal plans compare and
    hash identically.
    """

    start_month: int
    horizon_months: int
    activations: tuple[Activation, ...] = ()

    def __post_init__(self):
        canon = tuple(sorted((str(a), int(s), int(e)) for a, s, e in self.activations))
        object.__setattr__(self, "activations", canon)

    @property
    def end_month(self) -> int:
        """First month past the window."""
        return self.start_month + self.horizon_months

    def action_months(self) -> int:
        return sum(e - s + 1 for _, s, e in self.activations)

    def active_ids(self, month: int) -> tuple[str, ...]:
        return tuple(a for a, s, e in self.activations if s <= month <= e)

    def is_empty(self) -> bool:
        return not self.activations


@dataclass(frozen=True, eq=False)
class Objective:
    """Quadratic goal deviation plus linear action cost, optionally discounted.

    cost(trajectory, plan) =
        sum_w  discount**w * sum_i weights[i] * (x[w,i] - goal[i])**2
        + action_cost_weight * plan action-months
    with ``w`` counted from the start of the evaluated trajectory.
    """

    goal: np.ndarray
    weights: np.ndarray
    action_cost_weight: float = 0.0
    discount: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "goal", _readonly(self.goal))
        object.__setattr__(self, "weights", _readonly(self.weights))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Objective):
            return NotImplemented
        return (
            np.array_equal(self.goal, other.goal)
            and np.array_equal(self.weights, other.weights)
            and self.action_cost_weight == other.action_cost_weight
            and self.discount == other.discount
        )


@dataclass(frozen=True)
class ObservationSource:
    """Reporting channel parameters for one source."""

    id: str
    bias: float
    noise_std: float
    delay_weeks: int
    missing_prob: float
    reliability: float


@dataclass(frozen=True)
class MismatchSpec:
    """How the planner's model is derived from the plant: multiplicative
    perturbation of level ``level`` plus pruning of small entries."""

    level: float
    seed: int
    prune_threshold: float


@dataclass(eq=False)
class Scenario:
    """A fully validated scenario: roster, plant, channels, catalog, control."""

    variables: tuple[PmesiiVariable, ...]
    plant: "PlantParams"
    mismatch: MismatchSpec
    sources: tuple[ObservationSource, ...]
    actions: tuple[Action, ...]
    objective: Objective
    horizon_months: int
    replan_period_months: int
    deviation_tau: float
    budget: float
    concurrency_cap: int
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {v.id: i for i, v in enumerate(self.variables)}

    # -- roster helpers -----------------------------------------------------

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def variable_ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.variables)

    def index_of(self, var_id: str) -> int:
        from .errors import UnknownVariableError

        try:
            return self._index[var_id]
        except KeyError:
            raise UnknownVariableError(f"unknown variable id: {var_id!r}") from None

    def initial_state(self) -> PmesiiState:
        return PmesiiState(week=0, values=np.array([v.value for v in self.variables]))

    # -- catalog helpers ----------------------------------------------------

    def action(self, action_id: str) -> Action:
        for a in self.actions:
            if a.id == action_id:
                return a
        raise ConstraintError(f"unknown action id: {action_id!r}")

    def actions_for(self, actor: str) -> tuple[Action, ...]:
        return tuple(a for a in self.actions if a.actor == actor)

    @property
    def horizon_weeks(self) -> int:
        return months_to_weeks(self.horizon_months)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_document() == other.to_document()

    # -- serialization ------------------------------------------------------

    def to_document(self) -> dict:
        """Emit the strict external JSON structure (round-trips through
        :func:`validate_scenario`)."""
        return {
            "variables": [
                {"id": v.id, "category": v.category, "label": v.label, "value": v.value}
                for v in self.variables
            ],
            "plant": {
                "coupling": self.plant.A.tolist(),
                "drift": self.plant.c.tolist(),
                "shock_std": self.plant.sigma.tolist(),
            },
            "crises": [
                {
                    "week": ev.week,
                    "id": ev.id,
                    "shock": {
                        self.variables[i].id: float(ev.shock[i])
                        for i in np.flatnonzero(ev.shock)
                    },
                }
                for ev in self.plant.crises
            ],
            "mismatch": {
                "level": self.mismatch.level,
                "seed": self.mismatch.seed,
                "prune_threshold": self.mismatch.prune_threshold,
            },
            "observation": {
                "sources": [
                    {
                        "id": s.id,
                        "bias": s.bias,
                        "noise_std": s.noise_std,
                        "delay_weeks": s.delay_weeks,
                        "missing_prob": s.missing_prob,
                        "reliability": s.reliability,
                    }
                    for s in self.sources
                ]
            },
            "actions": [
                {
                    "id": a.id,
                    "actor": a.actor,
                    "effect": {
                        self.variables[i].id: float(a.effect[i])
                        for i in np.flatnonzero(a.effect)
                    },
                    "cost": a.cost,
                    "min_duration_months": a.min_duration_months,
                    "description": a.description,
                }
                for a in self.actions
            ],
            "objective": {
                "goals": self.objective.goal.tolist(),
                "weights": self.objective.weights.tolist(),
                "action_cost_weight": self.objective.action_cost_weight,
                "discount": self.objective.discount,
            },
            "control": {
                "horizon_months": self.horizon_months,
                "replan_period_months": self.replan_period_months,
                "deviation_tau": None if math.isinf(self.deviation_tau) else self.deviation_tau,
                "budget": self.budget,
                "concurrency_cap": self.concurrency_cap,
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_document(), **kwargs)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def weighted_distance(a, b, weights) -> float:
    """sqrt(sum_i w_i (a_i - b_i)^2) between two equal-length state vectors."""
    av = a.values if isinstance(a, PmesiiState) else np.asarray(a, dtype=float)
    bv = b.values if isinstance(b, PmesiiState) else np.asarray(b, dtype=float)
    w = np.asarray(weights, dtype=float)
    if av.shape != bv.shape or av.shape != w.shape:
        raise DimensionError(
            f"length mismatch: a has {av.shape}, b has {bv.shape}, weights {w.shape}"
        )
    d = av - bv
    return float(np.sqrt(np.sum(w * d * d)))


def horizon_schedule(horizon_months: int, replan_period_months: int) -> list[int]:
    """Episode start months [0, p, 2p, ...]; exactly horizon/period entries."""
    if horizon_months < 1 or replan_period_months < 1:
        raise ScheduleError("horizon and replan period must be positive")
    if horizon_months % replan_period_months != 0:
        raise ScheduleError(
            f"horizon {horizon_months} not divisible by replan period {replan_period_months}"
        )
    return list(range(0, horizon_months, replan_period_months))


# ---------------------------------------------------------------------------
# Scenario document validation
# ---------------------------------------------------------------------------

def _require_keys(obj: Mapping, required: Iterable[str], where: str) -> None:
    if not isinstance(obj, Mapping):
        raise SchemaError(f"{where}: expected an object")
    required = set(required)
    present = set(obj.keys())
    missing = required - present
    extra = present - required
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {sorted(extra)}")


def _number(obj: Mapping, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key}: expected a number, got {type(v).__name__}")
    return float(v)


def _integer(obj: Mapping, key: str, where: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}.{key}: expected an integer, got {type(v).__name__}")
    return v


def _vector(raw, ids: Sequence[str], index: Mapping[str, int], where: str) -> np.ndarray:
    """Accept a full-length list or a sparse {var_id: value} mapping."""
    n = len(ids)
    if isinstance(raw, Mapping):
        out = np.zeros(n)
        for k, v in raw.items():
            if k not in index:
                raise SchemaError(f"{where}: unknown variable id {k!r}")
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{where}.{k}: expected a number")
            out[index[k]] = float(v)
        return out
    if isinstance(raw, list):
        if len(raw) != n:
            raise DimensionError(f"{where}: expected {n} entries, got {len(raw)}")
        try:
            return np.array([float(v) for v in raw])
        except (TypeError, ValueError):
            raise SchemaError(f"{where}: entries must be numbers") from None
    raise SchemaError(f"{where}: expected a list or a variable-id mapping")


def validate_scenario(document) -> Scenario:
    """Parse and fully check an external scenario document.

    Accepts a parsed JSON object or a JSON string. Every invariant on the
    roster, plant matrices, channels, catalog, objective, and control block
    is verified; the returned Scenario is immutable.
    """
    from .plant import CrisisEvent, PlantParams, validate_plant_params

    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"scenario document is not valid JSON: {exc}") from None
    _require_keys(document, _SCENARIO_KEYS, "scenario")

    # roster
    raw_vars = document["variables"]
    if not isinstance(raw_vars, list) or not raw_vars:
        raise SchemaError("variables: expected a non-empty list")
    variables = []
    for i, rv in enumerate(raw_vars):
        where = f"variables[{i}]"
        _require_keys(rv, {"id", "category", "label", "value"}, where)
        if rv["category"] not in PMESII_CATEGORIES:
            raise SchemaError(
                f"{where}.category: {rv['category']!r} is not one of {PMESII_CATEGORIES}"
            )
        value = _number(rv, "value", where)
        if not 0.0 <= value <= 1.0:
            raise RangeError(f"{where}.value: {value} outside [0, 1]")
        variables.append(
            PmesiiVariable(id=str(rv["id"]), category=rv["category"], label=str(rv["label"]), value=value)
        )
    ids = [v.id for v in variables]
    if len(set(ids)) != len(ids):
        dupes = sorted({x for x in ids if ids.count(x) > 1})
        raise SchemaError(f"variables: duplicate id(s) {dupes}")
    index = {vid: i for i, vid in enumerate(ids)}
    n = len(ids)

    # actions (needed before plant: B columns come from the catalog)
    raw_actions = document["actions"]
    if not isinstance(raw_actions, list):
        raise SchemaError("actions: expected a list")
    actions = []
    for i, ra in enumerate(raw_actions):
        where = f"actions[{i}]"
        _require_keys(ra, {"id", "actor", "effect", "cost", "min_duration_months", "description"}, where)
        if ra["actor"] not in ACTORS:
            raise SchemaError(f"{where}.actor: {ra['actor']!r} is not one of {ACTORS}")
        cost = _number(ra, "cost", where)
        if cost < 0:
            raise RangeError(f"{where}.cost: {cost} must be >= 0")
        dur = _integer(ra, "min_duration_months", where)
        if dur < 1:
            raise RangeError(f"{where}.min_duration_months: {dur} must be >= 1")
        actions.append(
            Action(
                id=str(ra["id"]),
                actor=ra["actor"],
                effect=_vector(ra["effect"], ids, index, f"{where}.effect"),
                cost=cost,
                min_duration_months=dur,
                description=str(ra["description"]),
            )
        )
    action_ids = [a.id for a in actions]
    if len(set(action_ids)) != len(action_ids):
        raise SchemaError("actions: duplicate action id(s)")

    # plant
    raw_plant = document["plant"]
    _require_keys(raw_plant, {"coupling", "drift", "shock_std"}, "plant")
    coupling = raw_plant["coupling"]
    if not isinstance(coupling, list) or len(coupling) != n:
        raise DimensionError(f"plant.coupling: expected {n} rows")
    A = np.zeros((n, n))
    for r, row in enumerate(coupling):
        if not isinstance(row, list) or len(row) != n:
            raise DimensionError(f"plant.coupling[{r}]: expected {n} entries")
        A[r] = [float(v) for v in row]
    c = _vector(raw_plant["drift"], ids, index, "plant.drift")
    sigma = _vector(raw_plant["shock_std"], ids, index, "plant.shock_std")
    if np.any(sigma < 0):
        raise RangeError("plant.shock_std: entries must be >= 0")

    raw_crises = document["crises"]
    if not isinstance(raw_crises, list):
        raise SchemaError("crises: expected a list")
    crises = []
    for i, rc in enumerate(raw_crises):
        where = f"crises[{i}]"
        _require_keys(rc, {"week", "id", "shock"}, where)
        week = _integer(rc, "week", where)
        if week < 0:
            raise RangeError(f"{where}.week: must be >= 0")
        crises.append(
            CrisisEvent(week=week, id=str(rc["id"]), shock=_vector(rc["shock"], ids, index, f"{where}.shock"))
        )
    crises.sort(key=lambda ev: (ev.week, ev.id))

    B = np.column_stack([a.effect for a in actions]) if actions else np.zeros((n, 0))
    plant = PlantParams(A=A, B=B, c=c, sigma=sigma, crises=tuple(crises))
    validate_plant_params(plant, n_variables=n, n_actions=len(actions))

    # mismatch
    raw_mm = document["mismatch"]
    _require_keys(raw_mm, {"level", "seed", "prune_threshold"}, "mismatch")
    level = _number(raw_mm, "level", "mismatch")
    if not 0.0 <= level <= 1.0:
        raise RangeError(f"mismatch.level: {level} outside [0, 1]")
    prune = _number(raw_mm, "prune_threshold", "mismatch")
    if prune < 0:
        raise RangeError("mismatch.prune_threshold: must be >= 0")
    mismatch = MismatchSpec(level=level, seed=_integer(raw_mm, "seed", "mismatch"), prune_threshold=prune)

    # observation channel
    raw_obs = document["observation"]
    _require_keys(raw_obs, {"sources"}, "observation")
    if not isinstance(raw_obs["sources"], list):
        raise SchemaError("observation.sources: expected a list")
    sources = []
    for i, rs in enumerate(raw_obs["sources"]):
        where = f"observation.sources[{i}]"
        _require_keys(rs, {"id", "bias", "noise_std", "delay_weeks", "missing_prob", "reliability"}, where)
        noise = _number(rs, "noise_std", where)
        delay = _integer(rs, "delay_weeks", where)
        missing = _number(rs, "missing_prob", where)
        reliability = _number(rs, "reliability", where)
        if noise < 0:
            raise RangeError(f"{where}.noise_std: must be >= 0")
        if delay < 0:
            raise RangeError(f"{where}.delay_weeks: must be >= 0")
        if not 0.0 <= missing <= 1.0:
            raise RangeError(f"{where}.missing_prob: {missing} outside [0, 1]")
        if not 0.0 < reliability <= 1.0:
            raise RangeError(f"{where}.reliability: {reliability} outside (0, 1]")
        sources.append(
            ObservationSource(
                id=str(rs["id"]),
                bias=_number(rs, "bias", where),
                noise_std=noise,
                delay_weeks=delay,
                missing_prob=missing,
                reliability=reliability,
            )
        )
    source_ids = [s.id for s in sources]
    if len(set(source_ids)) != len(source_ids):
        raise SchemaError("observation.sources: duplicate source id(s)")

    # objective
    raw_obj = document["objective"]
    _require_keys(raw_obj, {"goals", "weights", "action_cost_weight", "discount"}, "objective")
    goal = _vector(raw_obj["goals"], ids, index, "objective.goals")
    weights = _vector(raw_obj["weights"], ids, index, "objective.weights")
    if np.any((goal < 0) | (goal > 1)):
        raise RangeError("objective.goals: entries outside [0, 1]")
    if np.any(weights < 0):
        raise RangeError("objective.weights: entries must be >= 0")
    if not np.any(weights > 0):
        raise RangeError("objective.weights: at least one weight must be > 0")
    lam = _number(raw_obj, "action_cost_weight", "objective")
    if lam < 0:
        raise RangeError("objective.action_cost_weight: must be >= 0")
    gamma = _number(raw_obj, "discount", "objective")
    if not 0.0 < gamma <= 1.0:
        raise RangeError(f"objective.discount: {gamma} outside (0, 1]")
    objective = Objective(goal=goal, weights=weights, action_cost_weight=lam, discount=gamma)

    # control block
    raw_ctrl = document["control"]
    _require_keys(
        raw_ctrl,
        {"horizon_months", "replan_period_months", "deviation_tau", "budget", "concurrency_cap"},
        "control",
    )
    horizon = _integer(raw_ctrl, "horizon_months", "control")
    period = _integer(raw_ctrl, "replan_period_months", "control")
    horizon_schedule(horizon, period)  # raises ScheduleError when inconsistent
    tau_raw = raw_ctrl["deviation_tau"]
    if tau_raw is None:
        tau = math.inf
    else:
        tau = _number(raw_ctrl, "deviation_tau", "control")
        if tau < 0:
            raise RangeError("control.deviation_tau: must be >= 0")
    budget = _number(raw_ctrl, "budget", "control")
    if budget < 0:
        raise RangeError("control.budget: must be >= 0")
    cap = _integer(raw_ctrl, "concurrency_cap", "control")
    if cap < 1:
        raise RangeError("control.concurrency_cap: must be >= 1")

    for ev in crises:
        if ev.week > months_to_weeks(horizon) * 100:
            warnings.warn(f"crisis {ev.id!r} at week {ev.week} is far beyond any run span")

    return Scenario(
        variables=tuple(variables),
        plant=plant,
        mismatch=mismatch,
        sources=tuple(sources),
        actions=tuple(actions),
        objective=objective,
        horizon_months=horizon,
        replan_period_months=period,
        deviation_tau=tau,
        budget=budget,
        concurrency_cap=cap,
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return validate_scenario(fh.read())


# ---------------------------------------------------------------------------
# Plan validation
# ---------------------------------------------------------------------------

def validate_plan(plan: ActionPlan, scenario: Scenario, actor: str = "Blue") -> None:
    """Check a plan against the scenario: catalog membership, window
    containment, minimum durations, per-action non-overlap, and (for Blue)
    the budget and concurrency caps. Raises ConstraintError.
    """
    if plan.horizon_months < 1:
        raise ConstraintError(f"{actor} plan: horizon_months must be >= 1")
    catalog = {a.id: a for a in scenario.actions_for(actor)}
    by_action: dict[str, list[tuple[int, int]]] = {}
    for aid, s, e in plan.activations:
        if aid not in catalog:
            raise ConstraintError(f"{actor} plan: action {aid!r} is not in the {actor} catalog")
        if not (plan.start_month <= s <= e < plan.end_month):
            raise ConstraintError(
                f"{actor} plan: activation {aid!r} [{s}, {e}] outside window "
                f"[{plan.start_month}, {plan.end_month})"
            )
        if e - s + 1 < catalog[aid].min_duration_months:
            raise ConstraintError(
                f"{actor} plan: activation {aid!r} shorter than minimum "
                f"{catalog[aid].min_duration_months} month(s)"
            )
        by_action.setdefault(aid, []).append((s, e))
    for aid, spans in by_action.items():
        spans.sort()
        for (s1, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 <= e1:
                raise ConstraintError(f"{actor} plan: overlapping activations of {aid!r}")

    if actor == "Blue":
        spend = sum((e - s + 1) * catalog[aid].cost for aid, s, e in plan.activations)
        if spend > scenario.budget + 1e-9:
            raise ConstraintError(
                f"Blue plan: cost {spend:.3f} exceeds budget {scenario.budget:.3f}"
            )
        for month in range(plan.start_month, plan.end_month):
            live = sum(1 for _, s, e in plan.activations if s <= month <= e)
            if live > scenario.concurrency_cap:
                raise ConstraintError(
                    f"Blue plan: {live} concurrent actions in month {month} "
                    f"exceeds cap {scenario.concurrency_cap}"
                )


def plan_cost(plan: ActionPlan, scenario: Scenario) -> float:
    """Total activation spend: sum over activations of months x monthly cost."""
    return float(
        sum((e - s + 1) * scenario.action(aid).cost for aid, s, e in plan.activations)
    )
