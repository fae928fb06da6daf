import json
import os

import pytest

from pmesii.errors import CorruptLogError, NotFoundError
from pmesii.harness.cli import main
from pmesii.harness.sessions import Session, plan_payload
from pmesii.harness.store import EventLog
from pmesii.harness.sweep import ExperimentSpec, experiment_sweep
from pmesii.scenarios import demo_document
from pmesii.xgame import XGameConfig


@pytest.fixture()
def small_doc():
    # 6-month horizon keeps CLI runs quick
    return demo_document(horizon_months=6, replan_period_months=3)


class TestCliRun:
    def test_demo_run_writes_full_span(self, tmp_path):
        out = tmp_path / "out"
        code = main(["run", "--scenario", "demo", "--seed", "1", "--out", str(out)])
        assert code == 0
        lines = (out / "runlog.csv").read_text().strip().split("\n")
        weeks = {int(line.split(",")[0]) for line in lines[1:]}
        assert weeks == set(range(0, 73))  # 18 months at 4 weeks/month
        assert len(lines) == 1 + 73 * 12
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "run"
        assert manifest["args"]["seed"] == 1
        assert "document" in manifest["scenario"]

    def test_missing_scenario_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["run", "--seed", "1", "--out", "x"])
        assert err.value.code == 2

    def test_bad_scenario_file_exits_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", "--scenario", str(bad), "--seed", "1",
                     "--out", str(tmp_path / "o")]) == 2

    def test_invalid_override_exits_two(self, tmp_path, small_doc):
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(small_doc))
        # 6 % 5 != 0 -> ScheduleError
        assert main(["run", "--scenario", str(path), "--seed", "1",
                     "--out", str(tmp_path / "o"), "--replan-months", "5"]) == 2

    def test_replay_reproduces_csv_bit_exactly(self, tmp_path, small_doc):
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(small_doc))
        first = tmp_path / "first"
        assert main(["run", "--scenario", str(path), "--seed", "7",
                     "--out", str(first)]) == 0
        second = tmp_path / "second"
        assert main(["replay", "--manifest", str(first / "manifest.json"),
                     "--out", str(second)]) == 0
        assert (first / "runlog.csv").read_bytes() == (second / "runlog.csv").read_bytes()

    def test_csv_byte_stable_across_runs(self, tmp_path, small_doc):
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(small_doc))
        a, b = tmp_path / "a", tmp_path / "b"
        main(["run", "--scenario", str(path), "--seed", "3", "--out", str(a)])
        main(["run", "--scenario", str(path), "--seed", "3", "--out", str(b)])
        assert (a / "runlog.csv").read_bytes() == (b / "runlog.csv").read_bytes()


class TestSweep:
    def test_row_accounting(self, small_doc, tmp_path):
        out = tmp_path / "sweep.csv"
        spec = ExperimentSpec(scenario_doc=small_doc, dimension="replan_period",
                              values=(6, 3), seeds_per_cell=2, out_path=out)
        rows = experiment_sweep(spec)
        data = [r for r in rows if r["seed"] != "summary"]
        summaries = [r for r in rows if r["seed"] == "summary"]
        assert len(data) == 4
        assert len(summaries) == 2
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "sweep_value,seed,open_cost,closed_cost,closed_minus_open,win_rate"
        assert len(lines) == 1 + 6

    def test_single_cell(self, small_doc):
        spec = ExperimentSpec(scenario_doc=small_doc, dimension="mismatch",
                              values=(0.5,), seeds_per_cell=1)
        rows = experiment_sweep(spec)
        assert len(rows) == 2  # one data row + one summary

    def test_win_rate_matches_recount(self, small_doc):
        spec = ExperimentSpec(scenario_doc=small_doc, dimension="replan_period",
                              values=(3,), seeds_per_cell=6)
        rows = experiment_sweep(spec)
        data = [r for r in rows if r["seed"] != "summary"]
        summary = rows[-1]
        recount = sum(1 for r in data if r["closed_minus_open"] < 0) / len(data)
        assert summary["win_rate"] == pytest.approx(recount)

    def test_cli_sweep(self, tmp_path, small_doc):
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(small_doc))
        out = tmp_path / "out"
        code = main(["sweep", "--scenario", str(path), "--seed", "0", "--out", str(out),
                     "--dimension", "replan_period", "--values", "6,3",
                     "--seeds-per-cell", "1"])
        assert code == 0
        assert (out / "sweep.csv").exists()


class TestEventLog:
    def test_round_trip(self, tmp_path):
        log = EventLog(os.path.join(tmp_path, "events.log"))
        log.append({"type": "a", "n": 1})
        log.append({"type": "b", "n": 2})
        fresh = EventLog(log.path)
        records = fresh.read_all()
        assert [r["type"] for r in records] == ["a", "b"]
        assert fresh.tip == log.tip

    def test_truncation_detected(self, tmp_path):
        log = EventLog(os.path.join(tmp_path, "events.log"))
        for k in range(3):
            log.append({"k": k})
        raw = open(log.path, "rb").read()
        open(log.path, "wb").write(raw[:-10])
        with pytest.raises(CorruptLogError):
            EventLog(log.path).read_all()

    def test_tamper_detected(self, tmp_path):
        log = EventLog(os.path.join(tmp_path, "events.log"))
        log.append({"value": "honest"})
        raw = open(log.path, "rb").read()
        tampered = raw.replace(b"honest", b"edited")
        open(log.path, "wb").write(tampered)
        with pytest.raises(CorruptLogError):
            EventLog(log.path).read_all()


def drive_session(session, phases=3):
    """Play a few scripted phases through the session mutation API."""
    from pmesii.mpc import PlanConstraints, optimize_plan
    from pmesii.domain import ActionPlan, PmesiiState

    for _ in range(phases):
        engine = session.engine
        month = engine.current_month
        cons = PlanConstraints.from_scenario(engine.scenario, start_month=month,
                                             horizon_months=6, restarts=1)
        start = PmesiiState(week=engine.week, values=engine.true_values[engine.week])
        blue = optimize_plan(engine.model, start, engine.scenario.objective, cons,
                             (session.seed, 3, engine.phase_index))
        red = ActionPlan(month, 6, (("sabotage_campaign", month, month + 2),))
        session.mutate("plan_submitted", {"phase": engine.phase_index, "role": "Blue",
                                          "plan": plan_payload(blue)})
        session.mutate("plan_submitted", {"phase": engine.phase_index, "role": "Red",
                                          "plan": plan_payload(red)})
        session.mutate("plan_submitted", {"phase": engine.phase_index, "role": "Green",
                                          "plan": {"drift_deltas": {"public_trust": 0.002}}})
        session.mutate("adjustments_applied", {
            "phase": engine.phase_index,
            "adjustments": [{"variable_id": "governance_capacity", "start_week": engine.week,
                             "end_week": engine.week + 4, "delta": -0.05}],
        })
        session.mutate("ledger_recorded", {"entry": {
            "kind": "ASSUMPTION_SURFACED", "variables": ["governance_capacity"],
            "rationale": "ministry reporting assumed too rosy",
        }})
        session.mutate("advanced", {"phase": engine.phase_index, "boundary_week": None})


class TestSessionPersistence:
    def test_save_load_round_trip(self, tmp_path):
        doc = demo_document()
        live = Session.create(doc, "xgame", seed=5, state_dir=tmp_path)
        drive_session(live, phases=3)
        loaded = Session.load(tmp_path, live.session_id)
        assert loaded.current_week() == live.current_week()
        assert loaded.phase_index() == live.phase_index()
        assert loaded.record().content_hash == live.record().content_hash
        assert loaded.engine.verify_ledger()

    def test_truncated_log_fails(self, tmp_path):
        live = Session.create(demo_document(), "xgame", seed=5, state_dir=tmp_path)
        drive_session(live, phases=1)
        path = os.path.join(tmp_path, live.session_id, "events.log")
        raw = open(path, "rb").read()
        open(path, "wb").write(raw[:-7])
        with pytest.raises(CorruptLogError):
            Session.load(tmp_path, live.session_id)

    def test_unknown_session(self, tmp_path):
        with pytest.raises(NotFoundError):
            Session.load(tmp_path, "nope")

    def test_batch_session_records_final_state(self, tmp_path):
        doc = demo_document(horizon_months=6, replan_period_months=3)
        session = Session.create(doc, "closed_loop", seed=2, state_dir=tmp_path)
        assert session.current_week() == 24
        reloaded = Session.load(tmp_path, session.session_id)
        assert reloaded.run_log.final_cost == session.run_log.final_cost
        assert reloaded.record().content_hash == session.record().content_hash

    def test_nonce_dedupes(self, tmp_path):
        session = Session.create(demo_document(), "xgame", seed=5, state_dir=tmp_path)
        payload = {"phase": 0, "role": "Green", "plan": {"drift_deltas": {}}}
        first = session.mutate("plan_submitted", payload, nonce="n-1")
        again = session.mutate("plan_submitted", payload, nonce="n-1")
        assert again.get("duplicate") is True
        assert session.pending_roles() == ("Blue", "Red")

    def test_live_cell_deadline(self, tmp_path):
        import time as _time

        from pmesii.errors import CellTimeoutError
        from pmesii.domain import validate_scenario

        session = Session("s1", validate_scenario(demo_document()), "xgame", seed=5,
                          input_deadline_seconds=0.01)
        _time.sleep(0.02)
        with pytest.raises(CellTimeoutError, match="deadline"):
            session.check_input_deadline()
        # all inputs in: no deadline applies
        drive_session(session, phases=1)
        session.check_input_deadline()
