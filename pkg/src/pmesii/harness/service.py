"""JSON-over-HTTP session service: a thin, serialized gateway to the engine.

The service holds no planning logic of its own. Sessions live in memory,
every mutation is appended to the session's event log, and a session not
in memory is transparently reloaded from disk by replaying its log.
Mutations to one session are applied one at a time (per-session lock);
distinct sessions proceed in parallel; GETs never mutate anything.

Error mapping: 400 validation (the body names the offending field), 404
unknown session, 409 out-of-turn submission (input for a closed phase or a
finished game). Mutating requests may carry a client "nonce"; retries with
the same nonce return the recorded outcome instead of re-applying.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import (
    CellTimeoutError,
    ConstraintError,
    NotFoundError,
    PmesiiError,
    SchemaError,
)
from ..scenarios import demo_document
from ..xgame import LedgerKind, trace_dependencies
from .sessions import MODES, Session


class SessionHost:
    """In-memory session registry backed by the state directory."""

    def __init__(self, state_dir):
        self.state_dir = state_dir
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def create(self, scenario_doc, mode: str, seed: int) -> Session:
        session = Session.create(scenario_doc, mode, seed, state_dir=self.state_dir)
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        return session

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            if session is not None:
                return session
        session = Session.load(self.state_dir, session_id)  # NotFoundError -> 404
        with self._registry_lock:
            self._sessions.setdefault(session_id, session)
            self._locks.setdefault(session_id, threading.Lock())
            return self._sessions[session_id]

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())


def _state_payload(session: Session) -> dict:
    values = session.assessed_values()
    sc = session.scenario
    payload = {
        "session_id": session.session_id,
        "mode": session.mode,
        "seed": session.seed,
        "week": session.current_week(),
        "current_month": session.current_week() // 4,
        "phase": session.phase_index(),
        "pending_roles": list(session.pending_roles()),
        "variables": list(sc.variable_ids),
        "variable_labels": [v.label for v in sc.variables],
        "assessed_state": [float(v) for v in values],
        "catalog": [
            {
                "id": a.id,
                "actor": a.actor,
                "cost": float(a.cost),
                "min_duration_months": a.min_duration_months,
                "description": a.description,
            }
            for a in sc.actions
        ],
        "control": {
            "budget": float(sc.budget),
            "concurrency_cap": sc.concurrency_cap,
            "horizon_months": sc.horizon_months,
            "replan_period_months": sc.replan_period_months,
        },
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }
    if session.engine is not None:
        payload["game_end_week"] = session.engine.config.game_weeks
        payload["game_over"] = session.engine.game_over
    if session.run_log is not None:
        payload["final_cost"] = float(session.run_log.final_cost)
        payload["episodes"] = len(session.run_log.episodes)
    return payload


def create_app(state_dir) -> FastAPI:
    app = FastAPI(title="pmesii session service", version="0.1.0")
    host = SessionHost(state_dir)
    app.state.host = host

    @app.exception_handler(PmesiiError)
    def on_domain_error(request: Request, exc: PmesiiError):
        if isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, (ConstraintError, CellTimeoutError)):
            # protocol violations (closed phase, game over, missed deadline)
            status = 409
        else:
            status = 400
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    def body_field(body: dict, key: str, kind=None):
        if key not in body:
            raise SchemaError(f"{key}: missing")
        value = body[key]
        if kind is not None and not isinstance(value, kind):
            raise SchemaError(f"{key}: wrong type {type(value).__name__}")
        return value

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.json()
        scenario = body_field(body, "scenario")
        if scenario == "demo":
            scenario = demo_document()
        mode = body_field(body, "mode", str)
        if mode not in MODES:
            raise SchemaError(f"mode: {mode!r} is not one of {MODES}")
        seed = body_field(body, "seed", int)
        session = host.create(scenario, mode, seed)
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        return _state_payload(host.get(session_id))

    @app.post("/sessions/{session_id}/phases/{phase}/plans")
    async def submit_plan(session_id: str, phase: int, request: Request):
        body = await request.json()
        role = body_field(body, "role", str)
        plan = body_field(body, "plan", dict)
        session = host.get(session_id)
        with host.lock(session_id):
            result = session.mutate(
                "plan_submitted",
                {"phase": phase, "role": role, "plan": plan},
                nonce=body.get("nonce"),
            )
        return {"accepted": True, **result}

    @app.get("/sessions/{session_id}/forecast")
    def get_forecast(session_id: str):
        session = host.get(session_id)
        if session.engine is None:
            raise ConstraintError(f"{session.mode} sessions have no phase forecast")
        session.check_input_deadline()
        with host.lock(session_id):
            fc = session.engine.phase_forecast()
        return {
            "phase": session.phase_index(),
            "start_week": fc.start_week,
            "variables": list(session.scenario.variable_ids),
            "values": [[float(v) for v in row] for row in fc.values],
            "predicted_cost": None if fc.predicted_cost is None else float(fc.predicted_cost),
        }

    @app.post("/sessions/{session_id}/assessment/adjustments")
    async def post_adjustments(session_id: str, request: Request):
        body = await request.json()
        adjustments = body_field(body, "adjustments", list)
        session = host.get(session_id)
        with host.lock(session_id):
            result = session.mutate(
                "adjustments_applied",
                {"phase": session.phase_index(), "adjustments": adjustments},
                nonce=body.get("nonce"),
            )
            assessment = session.engine.assessment()
        return {
            **result,
            "start_week": assessment.start_week,
            "values": [[float(v) for v in row] for row in assessment.values],
        }

    @app.post("/sessions/{session_id}/advance")
    async def advance(session_id: str, request: Request):
        import json as _json

        raw = await request.body()
        body = _json.loads(raw) if raw else {}
        session = host.get(session_id)
        with host.lock(session_id):
            result = session.mutate(
                "advanced",
                {"phase": session.phase_index(),
                 "boundary_week": body.get("boundary_week")},
                nonce=body.get("nonce"),
            )
        return result

    @app.get("/sessions/{session_id}/ledger")
    def get_ledger(session_id: str, kind: str | None = None, phase: int | None = None):
        session = host.get(session_id)
        if session.engine is None:
            raise ConstraintError(f"{session.mode} sessions have no ledger")
        kind_filter = None
        if kind is not None:
            try:
                kind_filter = LedgerKind(kind)
            except ValueError:
                raise SchemaError(
                    f"kind: {kind!r} is not one of {[k.value for k in LedgerKind]}"
                ) from None
        records = session.engine.ledger_entries(kind=kind_filter, phase=phase)
        return {
            "entries": [
                {
                    "position": rec.position,
                    "kind": rec.entry.kind.value,
                    "variables": list(rec.entry.variables),
                    "rationale": rec.entry.rationale,
                    "phase_index": rec.entry.phase_index,
                    "hash": rec.hash,
                }
                for rec in records
            ]
        }

    @app.post("/sessions/{session_id}/ledger")
    async def post_ledger(session_id: str, request: Request):
        body = await request.json()
        session = host.get(session_id)
        entry = {k: v for k, v in body.items() if k != "nonce"}
        with host.lock(session_id):
            result = session.mutate("ledger_recorded", {"entry": entry},
                                    nonce=body.get("nonce"))
        return result

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str, var: str, depth: int = 2):
        session = host.get(session_id)
        if session.engine is None:
            raise ConstraintError(f"{session.mode} sessions have no model to trace")
        tree = trace_dependencies(session.engine.model, var, depth, session.scenario)

        def node_payload(node):
            return {
                "variable_id": node.variable_id,
                "coupling": node.coupling,
                "repeat": node.repeat,
                "children": [node_payload(c) for c in node.children],
            }

        return node_payload(tree)

    return app


def serve_session_api(state_dir, host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    uvicorn.run(create_app(state_dir), host=host, port=port, log_level="warning")
