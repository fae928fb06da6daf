import numpy as np
import pytest
from fastapi.testclient import TestClient

from pmesii.harness.service import create_app
from pmesii.scenarios import demo_document


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path)
    with TestClient(app) as c:
        yield c


def create_xgame(client, seed=4):
    resp = client.post("/sessions", json={"scenario": "demo", "mode": "xgame", "seed": seed})
    assert resp.status_code == 200
    return resp.json()["session_id"]


def submit_all_plans(client, sid, phase=0):
    blue = {"start_month": 0, "horizon_months": 6,
            "activations": [["stability_patrols", 0, 3], ["grid_repair", 0, 2]]}
    red = {"start_month": 0, "horizon_months": 6,
           "activations": [["sabotage_campaign", 0, 2]]}
    for role, plan in (("Blue", blue), ("Red", red),
                       ("Green", {"start_month": 0, "horizon_months": 6,
                                  "drift_deltas": {"public_trust": 0.003}})):
        if role == "Green":
            body = {"role": role, "plan": {"drift_deltas": plan["drift_deltas"]}}
        else:
            body = {"role": role, "plan": plan}
        resp = client.post(f"/sessions/{sid}/phases/{phase}/plans", json=body)
        assert resp.status_code == 200, resp.text
    return blue, red


class TestProtocolWalkthrough:
    def test_full_phase_cycle(self, client):
        sid = create_xgame(client)

        state = client.get(f"/sessions/{sid}/state").json()
        assert state["week"] == 0
        assert state["phase"] == 0
        assert set(state["pending_roles"]) == {"Blue", "Red", "Green"}

        submit_all_plans(client, sid)
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["pending_roles"] == []

        forecast = client.get(f"/sessions/{sid}/forecast").json()
        assert forecast["start_week"] == 0
        assert len(forecast["values"]) == state["game_end_week"] + 1

        resp = client.post(f"/sessions/{sid}/assessment/adjustments", json={
            "adjustments": [{"variable_id": "governance_capacity",
                             "start_week": 0, "end_week": 4, "value": 0.2}],
        })
        assert resp.status_code == 200
        assessed = resp.json()
        gov = forecast["variables"].index("governance_capacity")
        assert all(row[gov] == 0.2 for row in assessed["values"][0:5])

        resp = client.post(f"/sessions/{sid}/advance", json={})
        assert resp.status_code == 200
        record = resp.json()
        assert record["phase"] == 0
        assert record["end_week"] > record["start_week"]

        state = client.get(f"/sessions/{sid}/state").json()
        assert state["phase"] == 1
        assert state["week"] == record["end_week"]

    def test_forecast_matches_engine_bit_exactly(self, client, tmp_path):
        sid = create_xgame(client)
        submit_all_plans(client, sid)
        payload = client.get(f"/sessions/{sid}/forecast").json()
        session = client.app.state.host.get(sid)
        engine_values = session.engine.phase_forecast().values
        got = np.array(payload["values"])
        assert np.array_equal(got, engine_values)

    def test_plan_for_closed_phase_409(self, client):
        sid = create_xgame(client)
        submit_all_plans(client, sid)
        # phase 0 inputs are complete -> closed
        resp = client.post(f"/sessions/{sid}/phases/0/plans", json={
            "role": "Blue",
            "plan": {"start_month": 0, "horizon_months": 3, "activations": []},
        })
        assert resp.status_code == 409
        # wrong phase index is also out of turn
        resp = client.post(f"/sessions/{sid}/phases/5/plans", json={
            "role": "Blue",
            "plan": {"start_month": 0, "horizon_months": 3, "activations": []},
        })
        assert resp.status_code == 409

    def test_validation_errors_are_400_with_field(self, client):
        sid = create_xgame(client)
        resp = client.post(f"/sessions/{sid}/phases/0/plans", json={
            "role": "Blue",
            "plan": {"start_month": 0, "activations": []},
        })
        assert resp.status_code == 400
        assert "horizon_months" in resp.json()["detail"]

        resp = client.post(f"/sessions/{sid}/phases/0/plans", json={
            "role": "Blue",
            "plan": {"start_month": 0, "horizon_months": 18,
                     "activations": [["stability_patrols", 0, 0]]},
        })
        assert resp.status_code == 409  # constraint violation: too short

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/doesnotexist/state").status_code == 404

    def test_get_is_side_effect_free(self, client):
        sid = create_xgame(client)
        submit_all_plans(client, sid)
        a = client.get(f"/sessions/{sid}/forecast").json()
        b = client.get(f"/sessions/{sid}/forecast").json()
        s1 = client.get(f"/sessions/{sid}/state").json()
        s2 = client.get(f"/sessions/{sid}/state").json()
        assert a == b
        assert s1 == s2


class TestLedgerEndpoints:
    def test_record_and_filter(self, client):
        sid = create_xgame(client)
        resp = client.post(f"/sessions/{sid}/ledger", json={
            "kind": "ASSUMPTION_SURFACED",
            "variables": ["security_control"],
            "rationale": "patrol coverage assumed uniform",
        })
        assert resp.status_code == 200
        assert resp.json()["position"] == 0
        got = client.get(f"/sessions/{sid}/ledger",
                         params={"kind": "ASSUMPTION_SURFACED"}).json()
        assert len(got["entries"]) == 1
        empty = client.get(f"/sessions/{sid}/ledger",
                           params={"kind": "NOVEL_EFFECT"}).json()
        assert empty["entries"] == []

    def test_unknown_variable_400(self, client):
        sid = create_xgame(client)
        resp = client.post(f"/sessions/{sid}/ledger", json={
            "kind": "NOVEL_EFFECT", "variables": ["ghost"], "rationale": "",
        })
        assert resp.status_code == 400

    def test_bad_kind_400(self, client):
        sid = create_xgame(client)
        resp = client.post(f"/sessions/{sid}/ledger", json={
            "kind": "HOT_TAKE", "variables": [], "rationale": "",
        })
        assert resp.status_code == 400


class TestTraceEndpoint:
    def test_tree_shape(self, client):
        sid = create_xgame(client)
        tree = client.get(f"/sessions/{sid}/trace",
                          params={"var": "political_stability", "depth": 2}).json()
        assert tree["variable_id"] == "political_stability"
        assert tree["children"]
        child_ids = {c["variable_id"] for c in tree["children"]}
        session = client.app.state.host.get(sid)
        i = session.scenario.index_of("political_stability")
        expect = {session.scenario.variables[j].id
                  for j in np.flatnonzero(session.engine.model.A[i])}
        assert child_ids == expect

    def test_unknown_variable_400(self, client):
        sid = create_xgame(client)
        resp = client.get(f"/sessions/{sid}/trace", params={"var": "ghost", "depth": 1})
        assert resp.status_code == 400


class TestNonceDedupe:
    def test_retry_same_nonce_no_double_apply(self, client):
        sid = create_xgame(client)
        body = {"role": "Green", "plan": {"drift_deltas": {}}, "nonce": "abc"}
        first = client.post(f"/sessions/{sid}/phases/0/plans", json=body)
        again = client.post(f"/sessions/{sid}/phases/0/plans", json=body)
        assert first.status_code == 200
        assert again.status_code == 200
        assert again.json().get("duplicate") is True
        state = client.get(f"/sessions/{sid}/state").json()
        assert set(state["pending_roles"]) == {"Blue", "Red"}


class TestPersistenceAcrossHosts:
    def test_session_survives_restart(self, client, tmp_path):
        sid = create_xgame(client)
        submit_all_plans(client, sid)
        client.post(f"/sessions/{sid}/advance", json={})
        week = client.get(f"/sessions/{sid}/state").json()["week"]

        fresh = TestClient(create_app(tmp_path))
        state = fresh.get(f"/sessions/{sid}/state").json()
        assert state["week"] == week
        assert state["phase"] == 1
