"""Event-sourced sessions: every mutation is an event, state is a replay.

A session wraps one engine run. Batch modes (closed_loop / open_loop)
execute at creation and are read-only afterwards. An xgame session applies
cell submissions, White adjustments, phase advances, and ledger entries as
events; replaying the log through the deterministic engine reproduces the
session bit-exactly, which load() relies on and the tests verify.

Directory layout: state/{session_id}/events.log (length-prefixed JSON with
a rolling hash) and state/{session_id}/manifest.json.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import uuid
from dataclasses import dataclass

import numpy as np

from ..domain import ActionPlan, Scenario, validate_scenario
from ..errors import ConstraintError, NotFoundError, SchemaError
from ..mpc import RunLog, run_closed_loop
from ..nextstate import DirectiveLog, DirectiveRecord
from ..xgame import (
    CellRole,
    GreenPolicy,
    LedgerEntry,
    LedgerKind,
    WhiteAdjustment,
    XGame,
    XGameConfig,
)
from .store import EventLog, canonical

MODES = ("closed_loop", "open_loop", "xgame", "nextstate")


def parse_plan(payload) -> ActionPlan:
    if not isinstance(payload, dict):
        raise SchemaError("plan: expected an object")
    for key in ("start_month", "horizon_months", "activations"):
        if key not in payload:
            raise SchemaError(f"plan.{key}: missing")
    extra = set(payload) - {"start_month", "horizon_months", "activations"}
    if extra:
        raise SchemaError(f"plan: unknown field(s) {sorted(extra)}")
    acts = payload["activations"]
    if not isinstance(acts, list):
        raise SchemaError("plan.activations: expected a list")
    triples = []
    for k, item in enumerate(acts):
        if not isinstance(item, (list, tuple)) or len(item) != 3:
            raise SchemaError(f"plan.activations[{k}]: expected [action_id, start, end]")
        aid, s, e = item
        if not isinstance(s, int) or not isinstance(e, int):
            raise SchemaError(f"plan.activations[{k}]: months must be integers")
        triples.append((str(aid), s, e))
    return ActionPlan(
        start_month=int(payload["start_month"]),
        horizon_months=int(payload["horizon_months"]),
        activations=tuple(triples),
    )


def plan_payload(plan: ActionPlan) -> dict:
    return {
        "start_month": plan.start_month,
        "horizon_months": plan.horizon_months,
        "activations": [list(a) for a in plan.activations],
    }


def parse_adjustment(payload) -> WhiteAdjustment:
    if not isinstance(payload, dict):
        raise SchemaError("adjustment: expected an object")
    allowed = {"variable_id", "start_week", "end_week", "value", "delta", "rationale"}
    extra = set(payload) - allowed
    if extra:
        raise SchemaError(f"adjustment: unknown field(s) {sorted(extra)}")
    for key in ("variable_id", "start_week", "end_week"):
        if key not in payload:
            raise SchemaError(f"adjustment.{key}: missing")
    return WhiteAdjustment(
        variable_id=str(payload["variable_id"]),
        start_week=int(payload["start_week"]),
        end_week=int(payload["end_week"]),
        value=payload.get("value"),
        delta=payload.get("delta"),
        rationale=str(payload.get("rationale", "")),
    )


def adjustment_payload(adj: WhiteAdjustment) -> dict:
    return {
        "variable_id": adj.variable_id,
        "start_week": adj.start_week,
        "end_week": adj.end_week,
        "value": adj.value,
        "delta": adj.delta,
        "rationale": adj.rationale,
    }


def parse_ledger_entry(payload, default_phase: int) -> LedgerEntry:
    if not isinstance(payload, dict):
        raise SchemaError("ledger entry: expected an object")
    allowed = {"kind", "variables", "rationale", "phase_index", "adjustment"}
    extra = set(payload) - allowed
    if extra:
        raise SchemaError(f"ledger entry: unknown field(s) {sorted(extra)}")
    if "kind" not in payload:
        raise SchemaError("ledger entry.kind: missing")
    try:
        kind = LedgerKind(payload["kind"])
    except ValueError:
        raise SchemaError(
            f"ledger entry.kind: {payload['kind']!r} is not one of "
            f"{[k.value for k in LedgerKind]}"
        ) from None
    adj = payload.get("adjustment")
    return LedgerEntry(
        kind=kind,
        variables=tuple(str(v) for v in payload.get("variables", ())),
        rationale=str(payload.get("rationale", "")),
        phase_index=int(payload.get("phase_index", default_phase)),
        adjustment=None if adj is None else parse_adjustment(adj),
    )


@dataclass(frozen=True)
class SessionRecord:
    """Point-in-time snapshot of a session (not the live object)."""

    session_id: str
    mode: str
    seed: int
    current_week: int
    phase_index: int
    pending_roles: tuple[str, ...]
    event_count: int
    created_at: str
    updated_at: str
    content_hash: str


class Session:
    """One engine run plus its event log."""

    def __init__(self, session_id: str, scenario: Scenario, mode: str, seed: int,
                 config: XGameConfig | None = None, state_dir=None,
                 created_at: str | None = None,
                 input_deadline_seconds: float | None = None):
        if mode not in MODES:
            raise SchemaError(f"mode: {mode!r} is not one of {MODES}")
        self.session_id = session_id
        self.scenario = scenario
        self.mode = mode
        self.seed = seed
        self.config = config or XGameConfig()
        self.created_at = created_at or _now()
        self.updated_at = self.created_at
        self.nonces: dict[str, dict] = {}
        self.directives = DirectiveLog()
        self.run_log: RunLog | None = None
        self.engine: XGame | None = None
        self._log: EventLog | None = None
        # live-cell submission deadline; wall-clock only, never part of the
        # replayed state (events carry no timing dependence)
        self.input_deadline_seconds = input_deadline_seconds
        self._phase_opened = time.monotonic()
        if state_dir is not None:
            self._log = EventLog(os.path.join(state_dir, session_id, "events.log"))
        if mode == "xgame":
            self.engine = XGame(scenario, seed, self.config)
        elif mode in ("closed_loop", "open_loop"):
            self.run_log = run_closed_loop(scenario, seed, open_loop=(mode == "open_loop"))

    # -- creation / loading -------------------------------------------------

    @classmethod
    def create(cls, scenario_doc, mode: str, seed: int, state_dir=None,
               config: XGameConfig | None = None, session_id: str | None = None) -> "Session":
        scenario = validate_scenario(scenario_doc)
        session_id = session_id or uuid.uuid4().hex[:12]
        session = cls(session_id, scenario, mode, seed, config=config, state_dir=state_dir)
        record = {
            "type": "created",
            "ts": session.created_at,
            "data": {
                "session_id": session_id,
                "mode": mode,
                "seed": seed,
                "scenario": scenario.to_document(),
                "config": _config_payload(session.config),
            },
        }
        if session._log is not None:
            session._log.append(record)
            _write_manifest(state_dir, session)
        return session

    @classmethod
    def load(cls, state_dir, session_id: str) -> "Session":
        """Rebuild a session by replaying its event log."""
        path = os.path.join(state_dir, session_id, "events.log")
        if not os.path.exists(path):
            raise NotFoundError(f"no session {session_id!r} under {state_dir}")
        log = EventLog(path)
        records = log.read_all()
        if not records or records[0].get("type") != "created":
            raise NotFoundError(f"session {session_id!r} has no creation event")
        head = records[0]["data"]
        scenario = validate_scenario(head["scenario"])
        session = cls(
            head["session_id"], scenario, head["mode"], head["seed"],
            config=_config_from_payload(head.get("config")),
            created_at=records[0]["ts"],
        )
        for record in records[1:]:
            session._apply(record["type"], record["data"])
            session.updated_at = record["ts"]
        session._log = log  # adopt the existing log (tip already advanced)
        return session

    def _record_event(self, event_type: str, data: dict) -> None:
        ts = _now()
        self.updated_at = ts
        if self._log is not None:
            self._log.append({"type": event_type, "ts": ts, "data": data})

    # -- event application ---------------------------------------------------

    def _apply(self, event_type: str, data: dict) -> dict:
        if event_type == "plan_submitted":
            return self._apply_plan(data)
        if event_type == "adjustments_applied":
            return self._apply_adjustments(data)
        if event_type == "advanced":
            return self._apply_advance(data)
        if event_type == "ledger_recorded":
            return self._apply_ledger(data)
        if event_type == "directive_issued":
            return self._apply_directive(data)
        raise SchemaError(f"unknown event type {event_type!r}")

    def _require_engine(self) -> XGame:
        if self.engine is None:
            raise ConstraintError(f"{self.mode} sessions do not take phase inputs")
        return self.engine

    def _apply_plan(self, data: dict) -> dict:
        engine = self._require_engine()
        phase = data.get("phase", engine.phase_index)
        if phase != engine.phase_index:
            raise ConstraintError(
                f"phase {phase} is not open (current phase is {engine.phase_index})"
            )
        role = CellRole(data["role"])
        if role is CellRole.GREEN:
            engine.submit_plan(role, GreenPolicy.from_mapping(data["plan"].get("drift_deltas", {})))
        else:
            engine.submit_plan(role, parse_plan(data["plan"]))
        return {"phase": phase, "role": role.value,
                "pending_roles": [r.value for r in engine.pending_roles()]}

    def _apply_adjustments(self, data: dict) -> dict:
        engine = self._require_engine()
        phase = data.get("phase", engine.phase_index)
        if phase != engine.phase_index:
            raise ConstraintError(f"phase {phase} is not open")
        adjustments = [parse_adjustment(a) for a in data["adjustments"]]
        assessment = engine.apply_adjustments(adjustments)
        return {
            "phase": phase,
            "applied": [
                {"variable_id": a.adjustment.variable_id, "clamped": a.clamped}
                for a in assessment.applied
            ],
        }

    def _apply_advance(self, data: dict) -> dict:
        engine = self._require_engine()
        phase = data.get("phase", engine.phase_index)
        if phase != engine.phase_index:
            raise ConstraintError(f"phase {phase} is not open")
        record = engine.advance(data.get("boundary_week"))
        self._phase_opened = time.monotonic()
        return {
            "phase": record.index,
            "start_week": record.start_week,
            "end_week": record.end_week,
            "boundary_reason": record.boundary_reason.value,
            "recalibrated": record.recalibrated,
        }

    def _apply_ledger(self, data: dict) -> dict:
        engine = self._require_engine()
        entry = parse_ledger_entry(data["entry"], default_phase=engine.phase_index)
        position = engine.record_ledger(entry)
        return {"position": position}

    def _apply_directive(self, data: dict) -> dict:
        rec = DirectiveRecord(
            position=len(self.directives.records),
            team_id=data["team_id"],
            assumption_id=data["assumption_id"],
            start_month=data["start_month"],
            end_month=data["end_month"],
            plan=parse_plan(data["plan"]),
            content_hash=data["content_hash"],
        )
        if self.directives.open_window(rec.start_month) is not None:
            raise ConstraintError("a directive window is still open")
        self.directives.records.append(rec)
        return {"position": rec.position, "content_hash": rec.content_hash}

    # -- live mutations (validate, apply, then log) ---------------------------

    def mutate(self, event_type: str, data: dict, nonce: str | None = None) -> dict:
        if nonce is not None and nonce in self.nonces:
            return self.nonces[nonce]
        result = self._apply(event_type, data)
        self._record_event(event_type, data)
        if nonce is not None:
            self.nonces[nonce] = {**result, "duplicate": True}
        return result

    def check_input_deadline(self) -> None:
        """Raise when live cells have outstanding inputs past the deadline."""
        from ..errors import CellTimeoutError

        if (
            self.input_deadline_seconds is not None
            and self.engine is not None
            and not self.engine.game_over
            and self.engine.pending_roles()
            and time.monotonic() - self._phase_opened > self.input_deadline_seconds
        ):
            pending = ", ".join(r.value for r in self.engine.pending_roles())
            raise CellTimeoutError(
                f"phase {self.engine.phase_index}: {pending} missed the "
                f"{self.input_deadline_seconds:.0f}s submission deadline"
            )

    # -- snapshots -------------------------------------------------------------

    def current_week(self) -> int:
        if self.engine is not None:
            return self.engine.week
        if self.run_log is not None:
            return self.run_log.weeks
        return 0

    def phase_index(self) -> int:
        return self.engine.phase_index if self.engine is not None else 0

    def pending_roles(self) -> tuple[str, ...]:
        if self.engine is None or self.engine.game_over:
            return ()
        return tuple(r.value for r in self.engine.pending_roles())

    def assessed_values(self) -> np.ndarray:
        if self.engine is not None:
            return self.engine.true_values[self.engine.week]
        if self.run_log is not None:
            return self.run_log.est_values[-1]
        return self.scenario.initial_state().values

    def content_hash(self) -> str:
        body: dict = {
            "session_id": self.session_id,
            "mode": self.mode,
            "seed": self.seed,
            "week": self.current_week(),
            "phase": self.phase_index(),
        }
        if self.engine is not None:
            week = self.engine.week
            body["truth"] = [
                [repr(float(v)) for v in row] for row in self.engine.true_values[: week + 1]
            ]
            body["phases"] = [
                [p.index, p.start_week, p.end_week, p.boundary_reason.value,
                 int(p.recalibrated)]
                for p in self.engine.phases
            ]
            body["ledger_tip"] = self.engine.ledger[-1].hash if self.engine.ledger else ""
        if self.run_log is not None:
            body["final_cost"] = repr(float(self.run_log.final_cost))
        body["directives"] = [r.content_hash for r in self.directives.records]
        return hashlib.sha256(canonical(body).encode("utf-8")).hexdigest()

    def record(self) -> SessionRecord:
        return SessionRecord(
            session_id=self.session_id,
            mode=self.mode,
            seed=self.seed,
            current_week=self.current_week(),
            phase_index=self.phase_index(),
            pending_roles=self.pending_roles(),
            event_count=self._log.count if self._log is not None else 0,
            created_at=self.created_at,
            updated_at=self.updated_at,
            content_hash=self.content_hash(),
        )


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()) + f".{int(time.time_ns() % 1_000_000_000):09d}Z"


def _config_payload(config: XGameConfig) -> dict:
    return {
        "game_years": config.game_years,
        "boundary_threshold": config.boundary_threshold,
        "max_phase_weeks": config.max_phase_weeks,
        "recalibration_threshold": config.recalibration_threshold,
        "green_bound": config.green_bound,
        "blue_plan_months": config.blue_plan_months,
    }


def _config_from_payload(payload) -> XGameConfig:
    if not payload:
        return XGameConfig()
    return XGameConfig(**payload)


def _write_manifest(state_dir, session: Session) -> None:
    manifest = {
        "session_id": session.session_id,
        "mode": session.mode,
        "seed": session.seed,
        "created_at": session.created_at,
        "scenario_sha256": hashlib.sha256(
            canonical(session.scenario.to_document()).encode("utf-8")
        ).hexdigest(),
    }
    path = os.path.join(state_dir, session.session_id, "manifest.json")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
