"""Demo 6: driving a live wargame session over HTTP.

Starts the session service on a local port, then plays one full phase the
way the browser console does: create a session, submit the three cell
plans, fetch the forecast, apply a White adjustment, advance the phase,
and record a ledger entry. Every mutation lands in the session's
hash-chained event log, so the session replays bit-exactly after a
restart.

Run: python demos/06_session_service.py
"""

import json
import tempfile
import threading
import time
import urllib.request

import uvicorn

from pmesii.harness.service import create_app

PORT = 8977
BASE = f"http://127.0.0.1:{PORT}"


def call(method, path, payload=None):
    data = None if payload is None else json.dumps(payload).encode()
    req = urllib.request.Request(BASE + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


state_dir = tempfile.mkdtemp(prefix="pmesii_state_")
app = create_app(state_dir)
config = uvicorn.Config(app, host="127.0.0.1", port=PORT, log_level="error")
server = uvicorn.Server(config)
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)

print(f"service up on {BASE}, state in {state_dir}\n")

sid = call("POST", "/sessions", {"scenario": "demo", "mode": "xgame", "seed": 11})["session_id"]
print(f"created session {sid}")

state = call("GET", f"/sessions/{sid}/state")
print(f"week {state['week']}, phase {state['phase']}, waiting on {state['pending_roles']}")

call("POST", f"/sessions/{sid}/phases/0/plans", {
    "role": "Blue",
    "plan": {"start_month": 0, "horizon_months": 6,
             "activations": [["stability_patrols", 0, 3], ["grid_repair", 0, 2]]},
    "nonce": "blue-0",
})
call("POST", f"/sessions/{sid}/phases/0/plans", {
    "role": "Red",
    "plan": {"start_month": 0, "horizon_months": 6,
             "activations": [["intimidation_campaign", 0, 2]]},
})
call("POST", f"/sessions/{sid}/phases/0/plans", {
    "role": "Green",
    "plan": {"drift_deltas": {"public_trust": -0.004}},
})
print("all three cells submitted")

forecast = call("GET", f"/sessions/{sid}/forecast")
gov = forecast["variables"].index("governance_capacity")
print(f"forecast covers weeks {forecast['start_week']}..."
      f"{forecast['start_week'] + len(forecast['values']) - 1}; "
      f"governance at week 20 predicted {forecast['values'][20][gov]:.3f}")

adjusted = call("POST", f"/sessions/{sid}/assessment/adjustments", {
    "adjustments": [{"variable_id": "governance_capacity", "start_week": 0,
                     "end_week": 12, "delta": -0.05,
                     "rationale": "ministry self-reporting discounted"}],
})
print(f"White adjusted governance down; week-10 assessed value "
      f"{adjusted['values'][10][gov]:.3f}")

record = call("POST", f"/sessions/{sid}/advance", {})
print(f"phase 0 closed at week {record['end_week']} ({record['boundary_reason']})")

entry = call("POST", f"/sessions/{sid}/ledger", {
    "kind": "ASSUMPTION_SURFACED",
    "variables": ["governance_capacity"],
    "rationale": "the adjustment above encodes a standing distrust assumption",
})
print(f"ledger entry recorded at position {entry['position']}")

trace = call("GET", f"/sessions/{sid}/trace?var=political_stability&depth=1")
children = ", ".join(c["variable_id"] for c in trace["children"])
print(f"political_stability depends on: {children}")

server.should_exit = True
thread.join(timeout=5)
print("\nservice stopped; the event log under the state dir replays this session exactly")
