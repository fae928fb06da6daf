"""Phased five-cell wargame engine with a human-vs-model reconciliation ledger.

A game spans a long horizon (default ten 52-week years) divided into
phases. Each phase: the Blue, Red, and Green cells submit their inputs;
the modeling step forecasts all effects to the end of the game (first
refitting the model if the previous phase's forecast missed badly); the
White cell turns the forecast into an assessment by applying explicit
overrides; a boundary is chosen where the situation changes significantly;
and the ground truth advances to that boundary with real shocks.

Cells are pluggable: scripted policies drive batch runs, and the session
service feeds live submissions through the same engine methods, so
scripted and live games replay identically given (scenario, inputs, seed).

The ledger records the five ways humans use the model's estimates —
accepting detail, being persuaded by traced dependencies, spotting novel
effects, surfacing assumptions, and sharpening counterpositions — as an
append-only hash chain.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .domain import (
    ActionPlan,
    PmesiiState,
    Scenario,
    WEEKS_PER_MONTH,
    WEEKS_PER_YEAR,
    validate_plan,
)
from .errors import (
    ConstraintError,
    EmptyInputError,
    InsufficientDataError,
    RangeError,
    UnknownVariableError,
)
from .forecast import (
    ForecastTrajectory,
    ModelParams,
    derive_model,
    forecast,
    forecast_error,
    objective_cost,
    recalibrate,
)
from .mpc import PlanConstraints, ReplanReason, RunLog, optimize_plan
from .plant import crisis_shock_matrix, draw_shocks, step_values, weekly_controls


class CellRole(str, Enum):
    BLUE = "Blue"
    RED = "Red"
    GREEN = "Green"
    WHITE = "White"
    MODELING_TEAM = "ModelingTeam"


PLANNING_ROLES = (CellRole.BLUE, CellRole.RED, CellRole.GREEN)


class BoundaryReason(str, Enum):
    CRISIS = "CRISIS"
    THRESHOLD = "THRESHOLD"
    MAX_LENGTH = "MAX_LENGTH"
    GAME_END = "GAME_END"
    WHITE_OVERRIDE = "WHITE_OVERRIDE"


class LedgerKind(str, Enum):
    DETAIL_ACCEPTED = "DETAIL_ACCEPTED"
    PERSUADED_BY_TRACE = "PERSUADED_BY_TRACE"
    NOVEL_EFFECT = "NOVEL_EFFECT"
    ASSUMPTION_SURFACED = "ASSUMPTION_SURFACED"
    COUNTERPOSITION = "COUNTERPOSITION"


@dataclass(frozen=True)
class XGameConfig:
    game_years: int = 10
    boundary_threshold: float = 0.2
    max_phase_weeks: int = 104
    recalibration_threshold: float = 0.12
    green_bound: float = 0.05  # max |drift delta| per week
    blue_plan_months: int = 18

    @property
    def game_weeks(self) -> int:
        return self.game_years * WEEKS_PER_YEAR


@dataclass(frozen=True)
class GreenPolicy:
    """Population-attitude drift modifiers: variable id -> index/week delta."""

    drift_deltas: tuple[tuple[str, float], ...] = ()

    @classmethod
    def from_mapping(cls, mapping) -> "GreenPolicy":
        return cls(drift_deltas=tuple(sorted((str(k), float(v)) for k, v in dict(mapping).items())))

    def as_vector(self, scenario: Scenario) -> np.ndarray:
        out = np.zeros(scenario.n_variables)
        for vid, delta in self.drift_deltas:
            out[scenario.index_of(vid)] = delta
        return out


def validate_green_policy(policy: GreenPolicy, scenario: Scenario, bound: float) -> None:
    for vid, delta in policy.drift_deltas:
        i = scenario.index_of(vid)
        if scenario.variables[i].category != "Social":
            raise ConstraintError(
                f"Green: {vid!r} is {scenario.variables[i].category}, not a Social "
                "(population-attitude) variable"
            )
        if abs(delta) > bound + 1e-12:
            raise ConstraintError(
                f"Green: drift delta {delta:+.4f}/week on {vid!r} exceeds bound {bound}"
            )


@dataclass(frozen=True)
class WhiteAdjustment:
    """One explicit override of the forecast over a week range.

    Exactly one of ``value`` (replacement) or ``delta`` (additive) is set.
    """

    variable_id: str
    start_week: int
    end_week: int
    value: float | None = None
    delta: float | None = None
    rationale: str = ""

    def __post_init__(self):
        if (self.value is None) == (self.delta is None):
            raise RangeError("adjustment needs exactly one of value/delta")
        if self.value is not None and not 0.0 <= self.value <= 1.0:
            raise RangeError(f"replacement value {self.value} outside [0, 1]")
        if self.end_week < self.start_week:
            raise RangeError("adjustment week range is empty")


@dataclass(frozen=True)
class AppliedAdjustment:
    adjustment: WhiteAdjustment
    clamped: bool


@dataclass(frozen=True, eq=False)
class Assessment:
    """White's view: the forecast with overrides applied in submission order."""

    values: np.ndarray
    start_week: int
    applied: tuple[AppliedAdjustment, ...]

    def __eq__(self, other):
        if not isinstance(other, Assessment):
            return NotImplemented
        return (
            self.start_week == other.start_week
            and np.array_equal(self.values, other.values)
            and self.applied == other.applied
        )


def white_assess(fc: ForecastTrajectory, adjustments, scenario: Scenario) -> Assessment:
    """Apply White's overrides to a forecast; untouched entries bit-identical."""
    values = fc.values.copy()
    applied = []
    for adj in adjustments:
        i = scenario.index_of(adj.variable_id)
        lo = max(adj.start_week, fc.start_week) - fc.start_week
        hi = min(adj.end_week, fc.end_week) - fc.start_week
        clamped = False
        if hi < lo:
            applied.append(AppliedAdjustment(adjustment=adj, clamped=False))
            continue
        if adj.value is not None:
            values[lo : hi + 1, i] = adj.value
        else:
            raw = values[lo : hi + 1, i] + adj.delta
            clipped = np.clip(raw, 0.0, 1.0)
            clamped = bool(np.any(clipped != raw))
            values[lo : hi + 1, i] = clipped
        applied.append(AppliedAdjustment(adjustment=adj, clamped=clamped))
    return Assessment(values=values, start_week=fc.start_week, applied=tuple(applied))


def detect_phase_boundary(assessment, from_week: int, scenario: Scenario,
                          config: XGameConfig) -> tuple[int, BoundaryReason]:
    """Earliest week after ``from_week`` where the situation changes
    significantly: a scripted crisis, a weighted variable moving past the
    threshold relative to ``from_week``, or the phase length cap; the game
    end caps everything."""
    values = assessment.values if hasattr(assessment, "values") else np.asarray(assessment)
    start = assessment.start_week if hasattr(assessment, "start_week") else from_week
    game_end = config.game_weeks
    weighted = np.flatnonzero(scenario.objective.weights > 0)
    base = values[from_week - start]
    cap = min(from_week + config.max_phase_weeks, game_end)
    crisis_weeks = {ev.week for ev in scenario.plant.crises}
    for week in range(from_week + 1, cap + 1):
        if week in crisis_weeks:
            return week, BoundaryReason.CRISIS
        moved = np.abs(values[week - start, weighted] - base[weighted])
        if np.any(moved >= config.boundary_threshold):
            return week, BoundaryReason.THRESHOLD
    if cap == game_end:
        return game_end, BoundaryReason.GAME_END
    return cap, BoundaryReason.MAX_LENGTH


@dataclass(frozen=True)
class LedgerEntry:
    """One reconciliation event between human judgment and the model."""

    kind: LedgerKind
    variables: tuple[str, ...]
    rationale: str
    phase_index: int
    adjustment: WhiteAdjustment | None = None


@dataclass(frozen=True)
class LedgerRecord:
    position: int
    entry: LedgerEntry
    prev_hash: str
    hash: str


def _entry_payload(entry: LedgerEntry) -> dict:
    return {
        "kind": entry.kind.value,
        "variables": list(entry.variables),
        "rationale": entry.rationale,
        "phase_index": entry.phase_index,
        "adjustment": None if entry.adjustment is None else {
            "variable_id": entry.adjustment.variable_id,
            "start_week": entry.adjustment.start_week,
            "end_week": entry.adjustment.end_week,
            "value": entry.adjustment.value,
            "delta": entry.adjustment.delta,
            "rationale": entry.adjustment.rationale,
        },
    }


def _chain_hash(prev_hash: str, payload: dict) -> str:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256((prev_hash + body).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PhaseRecord:
    index: int
    start_week: int
    end_week: int
    blue_plan: ActionPlan
    red_plan: ActionPlan
    green: GreenPolicy
    forecast: ForecastTrajectory
    assessment: Assessment
    boundary_reason: BoundaryReason
    recalibrated: bool
    prev_phase_error: float | None


class XGame:
    """Deterministic phase-by-phase game state machine.

    Mutations are submit_plan / apply_adjustments / advance / record_ledger;
    given (scenario, config, seed) and the same mutation sequence the full
    state reproduces bit-exactly, which is what the event-sourced session
    layer relies on.
    """

    def __init__(self, scenario: Scenario, seed: int, config: XGameConfig | None = None):
        self.scenario = scenario
        self.config = config or XGameConfig()
        self.seed = seed
        n = scenario.n_variables
        T = self.config.game_weeks
        self.model: ModelParams = derive_model(
            scenario.plant, scenario.mismatch.level, scenario.mismatch.seed,
            scenario.mismatch.prune_threshold,
        )
        self._shocks = draw_shocks(scenario.plant, T, (seed, 0)) + crisis_shock_matrix(
            scenario.plant, 0, T
        )
        self.true_values = np.full((T + 1, n), np.nan)
        self.true_values[0] = scenario.initial_state().values
        self.week = 0
        self.phase_index = 0
        self.phases: list[PhaseRecord] = []
        self.transitions: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self.ledger: list[LedgerRecord] = []
        self._controls_by_week = np.zeros((T, len(scenario.actions)))
        self._blue_months_executed = 0
        self._reset_phase_inputs()

    # -- phase input collection -------------------------------------------

    def _reset_phase_inputs(self):
        self._inputs: dict[CellRole, object] = {}
        self._forecast: ForecastTrajectory | None = None
        self._adjustments: list[WhiteAdjustment] = []
        self._assessment: Assessment | None = None
        self._recalibrated = False
        self._prev_error: float | None = None
        self._recal_checked = False

    @property
    def game_over(self) -> bool:
        return self.week >= self.config.game_weeks

    @property
    def current_month(self) -> int:
        return self.week // WEEKS_PER_MONTH

    def pending_roles(self) -> tuple[CellRole, ...]:
        return tuple(r for r in PLANNING_ROLES if r not in self._inputs)

    def inputs_complete(self) -> bool:
        return not self.pending_roles()

    def submit_plan(self, role: CellRole | str, payload) -> None:
        """Accept one cell's phase input (Blue/Red plan or Green policy).

        Resubmission is allowed while the phase is still collecting; once
        all three cells are in, inputs are closed.
        """
        role = CellRole(role)
        if self.game_over:
            raise ConstraintError("game is over; no further inputs")
        if role not in PLANNING_ROLES:
            raise ConstraintError(f"{role.value} does not submit phase plans")
        if self.inputs_complete():
            raise ConstraintError(
                f"phase {self.phase_index} inputs are closed"
            )
        if role is CellRole.GREEN:
            policy = payload if isinstance(payload, GreenPolicy) else GreenPolicy.from_mapping(payload)
            validate_green_policy(policy, self.scenario, self.config.green_bound)
            self._inputs[role] = policy
        else:
            if not isinstance(payload, ActionPlan):
                raise ConstraintError(f"{role.value}: expected an action plan")
            try:
                validate_plan(payload, self.scenario, actor=role.value)
            except ConstraintError as exc:
                raise ConstraintError(f"{role.value} plan rejected: {exc}") from None
            self._inputs[role] = payload

    def collect_cell_plans(self, policies: "CellPolicies") -> tuple[ActionPlan, ActionPlan, GreenPolicy]:
        """Run scripted policies for every pending cell, validating each."""
        if CellRole.BLUE in self.pending_roles():
            self.submit_plan(CellRole.BLUE, policies.blue(self))
        if CellRole.RED in self.pending_roles():
            self.submit_plan(CellRole.RED, policies.red(self))
        if CellRole.GREEN in self.pending_roles():
            self.submit_plan(CellRole.GREEN, policies.green(self))
        return (
            self._inputs[CellRole.BLUE],
            self._inputs[CellRole.RED],
            self._inputs[CellRole.GREEN],
        )

    # -- modeling step ------------------------------------------------------

    def _maybe_recalibrate(self) -> None:
        """Step-2 reconciliation: at the start of a phase, compare the
        previous phase's forecast with what actually happened; past the
        threshold, refit the model on the logged transitions."""
        if self._recal_checked:
            return
        self._recal_checked = True
        if not self.phases:
            return
        prev = self.phases[-1]
        span = slice(prev.start_week - prev.forecast.start_week,
                     prev.end_week - prev.forecast.start_week + 1)
        predicted = prev.forecast.values[span]
        actual = self.true_values[prev.start_week : prev.end_week + 1]
        err = forecast_error(predicted, actual, self.scenario.objective.weights)
        self._prev_error = err
        if err > self.config.recalibration_threshold:
            self._recalibrated = True
            try:
                self.model = recalibrate(self.model, self.transitions)
            except InsufficientDataError:
                warnings.warn(
                    f"phase {self.phase_index}: recalibration triggered with only "
                    f"{len(self.transitions)} transitions; model left unchanged"
                )

    def phase_forecast(self) -> ForecastTrajectory:
        """Model forecast from the current assessed state to game end under
        the combined Blue/Red/Green inputs (computed once per phase)."""
        if not self.inputs_complete():
            raise ConstraintError(
                f"phase {self.phase_index} still waiting on: "
                + ", ".join(r.value for r in self.pending_roles())
            )
        if self._forecast is None:
            self._maybe_recalibrate()
            blue = self._inputs[CellRole.BLUE]
            red = self._inputs[CellRole.RED]
            green: GreenPolicy = self._inputs[CellRole.GREEN]
            weeks = self.config.game_weeks - self.week
            start = PmesiiState(week=self.week, values=self.true_values[self.week])
            self._forecast = forecast(
                self.model, start, [blue, red], weeks,
                tuple(a.id for a in self.scenario.actions),
                objective=self.scenario.objective,
                cost_action_months=blue.action_months(),
                drift_offset=green.as_vector(self.scenario),
            )
        return self._forecast

    # -- White cell ---------------------------------------------------------

    def apply_adjustments(self, adjustments) -> Assessment:
        """Append White's overrides (cumulative within the phase) and return
        the resulting assessment."""
        fc = self.phase_forecast()
        self._adjustments.extend(adjustments)
        self._assessment = white_assess(fc, self._adjustments, self.scenario)
        return self._assessment

    def assessment(self) -> Assessment:
        if self._assessment is None:
            self._assessment = white_assess(self.phase_forecast(), [], self.scenario)
        return self._assessment

    # -- phase boundary and advance ------------------------------------------

    def advance(self, boundary_week: int | None = None) -> PhaseRecord:
        """Close the phase: pick the boundary (or honor White's override),
        advance the plant there with real shocks, and record the phase."""
        if self.game_over:
            raise ConstraintError("game is over")
        assessment = self.assessment()
        if boundary_week is None:
            boundary, reason = detect_phase_boundary(
                assessment, self.week, self.scenario, self.config
            )
        else:
            if not self.week < boundary_week <= self.config.game_weeks:
                raise RangeError(
                    f"boundary week {boundary_week} outside ({self.week}, "
                    f"{self.config.game_weeks}]"
                )
            boundary, reason = boundary_week, BoundaryReason.WHITE_OVERRIDE

        blue: ActionPlan = self._inputs[CellRole.BLUE]
        red: ActionPlan = self._inputs[CellRole.RED]
        green: GreenPolicy = self._inputs[CellRole.GREEN]
        green_vec = green.as_vector(self.scenario)
        ids = tuple(a.id for a in self.scenario.actions)
        controls = weekly_controls([blue, red], ids, self.week, boundary - self.week)
        plant = self.scenario.plant
        c_eff = plant.c + green_vec
        for t in range(self.week, boundary):
            u = controls[t - self.week]
            nxt = step_values(self.true_values[t], plant.A, plant.B, c_eff, u,
                              self._shocks[t])
            self.true_values[t + 1] = nxt
            self.transitions.append((self.true_values[t].copy(), u.copy(), nxt - green_vec))
            self._controls_by_week[t] = u
        self._blue_months_executed += sum(
            max(0, min(e, (boundary - 1) // WEEKS_PER_MONTH) - max(s, self.current_month) + 1)
            for _, s, e in blue.activations
        )

        record = PhaseRecord(
            index=self.phase_index,
            start_week=self.week,
            end_week=boundary,
            blue_plan=blue,
            red_plan=red,
            green=green,
            forecast=self.phase_forecast(),
            assessment=assessment,
            boundary_reason=reason,
            recalibrated=self._recalibrated,
            prev_phase_error=self._prev_error,
        )
        self.phases.append(record)
        self.week = boundary
        self.phase_index += 1
        self._reset_phase_inputs()
        return record

    # -- learning-support operations -----------------------------------------

    def record_ledger(self, entry: LedgerEntry) -> int:
        """Append-only; returns the entry's position in the chain."""
        for vid in entry.variables:
            self.scenario.index_of(vid)  # raises UnknownVariableError
        payload = _entry_payload(entry)
        prev = self.ledger[-1].hash if self.ledger else ""
        rec = LedgerRecord(
            position=len(self.ledger),
            entry=entry,
            prev_hash=prev,
            hash=_chain_hash(prev, payload),
        )
        self.ledger.append(rec)
        return rec.position

    def ledger_entries(self, kind: LedgerKind | None = None,
                       phase: int | None = None) -> list[LedgerRecord]:
        out = []
        for rec in self.ledger:
            if kind is not None and rec.entry.kind != kind:
                continue
            if phase is not None and rec.entry.phase_index != phase:
                continue
            out.append(rec)
        return out

    def verify_ledger(self) -> bool:
        prev = ""
        for rec in self.ledger:
            if rec.prev_hash != prev or rec.hash != _chain_hash(prev, _entry_payload(rec.entry)):
                return False
            prev = rec.hash
        return True

    def trace(self, variable_id: str, depth: int):
        return trace_dependencies(self.model, variable_id, depth, self.scenario)

    # -- exports ---------------------------------------------------------------

    def to_runlog(self) -> RunLog:
        """Week-by-week game log in the standard run-log shape.

        In a game there is no separate observation channel: the assessed
        state is the truth, so est equals true; pred carries each phase's
        forecast; the reason column carries phase boundary reasons.
        """
        if not self.game_over:
            raise ConstraintError("game still in progress")
        T = self.config.game_weeks
        pred = np.empty_like(self.true_values)
        flags = np.zeros(T + 1, dtype=bool)
        reasons: list = [ReplanReason.NONE] * (T + 1)
        episode = np.zeros(T + 1, dtype=int)
        active: list[tuple[str, ...]] = [()] * (T + 1)
        ids = tuple(a.id for a in self.scenario.actions)
        for ph in self.phases:
            lo, hi = ph.start_week, ph.end_week
            pred[lo : hi + 1] = ph.forecast.values[: hi - lo + 1]
            flags[lo] = True
            reasons[lo] = ph.boundary_reason
            episode[lo : hi + 1] = ph.index
        for t in range(T):
            on = np.flatnonzero(self._controls_by_week[t])
            active[t] = tuple(sorted(ids[k] for k in on))
        final_cost = objective_cost(
            self.true_values, self.scenario.objective, self._blue_months_executed
        )
        return RunLog(
            variable_ids=self.scenario.variable_ids,
            true_values=self.true_values.copy(),
            est_values=self.true_values.copy(),
            pred_values=pred,
            replan_flags=flags,
            replan_reasons=reasons,
            episode_of_week=episode,
            active_actions=active,
            episodes=[],
            final_cost=final_cost,
            executed_action_months=self._blue_months_executed,
            open_loop=False,
            seed=self.seed,
        )


# ---------------------------------------------------------------------------
# Dependency tracing and novel effects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceNode:
    variable_id: str
    coupling: float | None
    repeat: bool
    children: tuple["TraceNode", ...]


def trace_dependencies(model: ModelParams, variable_id: str, depth: int,
                       scenario: Scenario) -> TraceNode:
    """Dependency tree rooted at a variable: children are the variables it
    draws on (non-zero model couplings), annotated with sign/magnitude,
    expanded to ``depth``; repeat visits along a path are cut."""
    if depth < 1:
        raise RangeError("depth must be >= 1")
    root = scenario.index_of(variable_id)

    def expand(i: int, remaining: int, seen: frozenset[int]) -> tuple[TraceNode, ...]:
        if remaining == 0:
            return ()
        out = []
        for j in np.flatnonzero(model.A[i]):
            vid = scenario.variables[j].id
            repeat = j in seen
            out.append(
                TraceNode(
                    variable_id=vid,
                    coupling=float(model.A[i, j]),
                    repeat=repeat,
                    children=() if repeat else expand(int(j), remaining - 1, seen | {int(j)}),
                )
            )
        return tuple(out)

    return TraceNode(
        variable_id=variable_id,
        coupling=None,
        repeat=False,
        children=expand(root, depth, frozenset({root})),
    )


def novel_effects(fc, watchlist, threshold: float, scenario: Scenario) -> list[tuple[str, float]]:
    """Unwatched variables whose forecast net change reaches the threshold,
    largest movers first."""
    if threshold <= 0:
        raise RangeError("threshold must be > 0")
    values = fc.values if hasattr(fc, "values") else np.asarray(fc)
    watch = set(watchlist)
    net = values[-1] - values[0]
    flagged = [
        (scenario.variables[i].id, float(net[i]))
        for i in range(scenario.n_variables)
        if scenario.variables[i].id not in watch and abs(net[i]) >= threshold
    ]
    flagged.sort(key=lambda kv: (-abs(kv[1]), kv[0]))
    return flagged


# ---------------------------------------------------------------------------
# Scripted policies and batch games
# ---------------------------------------------------------------------------

@dataclass
class CellPolicies:
    """Scripted inputs for batch games; each callable sees the engine."""

    blue: object
    red: object
    green: object
    white: object  # engine -> list[WhiteAdjustment]
    boundary: object = staticmethod(lambda engine: None)


def scripted_policies(blue_plan_months: int | None = None,
                      red_active_months: int = 6) -> CellPolicies:
    """Default batch cells: Blue optimizes its window under the session
    model, Red keeps sustained pressure, Green and White stay neutral."""

    def blue(engine: XGame) -> ActionPlan:
        months_left = engine.config.game_weeks // WEEKS_PER_MONTH - engine.current_month
        window = min(blue_plan_months or engine.config.blue_plan_months, months_left)
        cons = PlanConstraints.from_scenario(
            engine.scenario, start_month=engine.current_month, horizon_months=window
        )
        start = PmesiiState(week=engine.week, values=engine.true_values[engine.week])
        return optimize_plan(engine.model, start, engine.scenario.objective, cons,
                             (engine.seed, 3, engine.phase_index))

    def red(engine: XGame) -> ActionPlan:
        months_left = engine.config.game_weeks // WEEKS_PER_MONTH - engine.current_month
        window = min(red_active_months, months_left)
        acts = tuple(
            (a.id, engine.current_month, engine.current_month + window - 1)
            for a in engine.scenario.actions_for("Red")
        )
        return ActionPlan(start_month=engine.current_month, horizon_months=max(window, 1),
                          activations=acts if window >= 1 else ())

    def green(engine: XGame) -> GreenPolicy:
        return GreenPolicy()

    def white(engine: XGame) -> list[WhiteAdjustment]:
        return []

    return CellPolicies(blue=blue, red=red, green=green, white=white)


@dataclass
class XGameResult:
    phases: list[PhaseRecord]
    log: RunLog
    ledger: list[LedgerRecord]
    final_model: ModelParams


def run_xgame(scenario: Scenario, policies: CellPolicies | None = None, seed: int = 0,
              config: XGameConfig | None = None) -> XGameResult:
    """Play a full scripted game: collect, forecast, assess, bound, advance,
    until the game span is covered. Deterministic given inputs."""
    engine = XGame(scenario, seed, config)
    policies = policies or scripted_policies()
    while not engine.game_over:
        engine.collect_cell_plans(policies)
        adjustments = policies.white(engine)
        if adjustments:
            engine.apply_adjustments(adjustments)
        engine.advance(policies.boundary(engine))
    return XGameResult(
        phases=engine.phases,
        log=engine.to_runlog(),
        ledger=engine.ledger,
        final_model=engine.model,
    )


def phases_csv(phases, ledger, target) -> None:
    """phase, start_week, end_week, boundary_reason, recalibrated, ledger_count."""
    import csv

    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phase", "start_week", "end_week", "boundary_reason",
                    "recalibrated", "ledger_count"])
        for ph in phases:
            count = sum(1 for rec in ledger if rec.entry.phase_index == ph.index)
            w.writerow([ph.index, ph.start_week, ph.end_week, ph.boundary_reason.value,
                        int(ph.recalibrated), count])
    finally:
        if own:
            fh.close()
