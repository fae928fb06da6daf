"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s`. Desk scale throughout:
the 12-variable demo scenario (4 Blue + 2 Red actions, 18-month horizon)
unless a criterion states otherwise.
"""

import time

import numpy as np
import pytest

from pmesii.domain import make_rng
from pmesii.forecast import one_step_error, recalibrate
from pmesii.mpc import (
    PlanConstraints,
    ReplanReason,
    enumerate_plans,
    optimize_plan,
    run_closed_loop,
    run_open_loop,
    _PlanSearch,
)
from pmesii.plant import PlantParams, step_values
from pmesii.reporting import fuse, observe
from pmesii.scenarios import (
    demo_assumption_sets,
    demo_document,
    demo_milestone,
    demo_scenario,
    perfect_scenario,
)
from pmesii.forecast import ModelParams
from pmesii.nextstate import (
    PlantSampler,
    SelectionWeights,
    assess_risk_feasibility,
    plan_alternatives,
    select_strategy,
)

from conftest import blue_action, flat_objective, state
from test_harness import drive_session


def report(name: str, ok: bool, detail: str, elapsed: float, budget: float) -> None:
    verdict = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"\n[{verdict}] {name}: {detail} ({elapsed:.1f}s / budget {budget:.0f}s)")


class TestReplanningBenefit:
    def test_paired_runs_and_period_sweep(self):
        t0 = time.time()
        sc = demo_scenario()  # mismatch 0.5, shock std 0.02, 3-month period
        wins = 0
        for seed in range(100):
            closed = run_closed_loop(sc, seed).final_cost
            opened = run_open_loop(sc, seed).final_cost
            wins += closed <= opened

        # period sweep isolates the replan frequency: deviation trigger off
        medians = []
        for period in (18, 9, 6, 3):
            sp = demo_scenario(replan_period_months=period, deviation_tau=None)
            costs = [run_closed_loop(sp, seed).final_cost for seed in range(50)]
            medians.append(float(np.median(costs)))
        violations = [
            (b - a) / a for a, b in zip(medians, medians[1:]) if b > a
        ]
        elapsed = time.time() - t0
        sweep_ok = len(violations) <= 1 and all(v <= 0.02 for v in violations)
        ok = wins >= 90 and sweep_ok
        report(
            "replanning benefit",
            ok,
            f"closed <= open in {wins}/100 pairs (need >= 90); period medians "
            f"{[round(m, 2) for m in medians]} with violations {violations}",
            elapsed, 300,
        )
        assert wins >= 90
        assert sweep_ok
        assert elapsed < 300

    def test_perfect_model_identity(self):
        t0 = time.time()
        sc = perfect_scenario()
        closed = run_closed_loop(sc, 5)
        opened = run_open_loop(sc, 5)
        identical = (
            np.array_equal(closed.true_values, opened.true_values)
            and np.array_equal(closed.est_values, opened.est_values)
            and np.array_equal(closed.pred_values, opened.pred_values)
        )
        deviations = sum(r == ReplanReason.DEVIATION for r in closed.replan_reasons)
        elapsed = time.time() - t0
        ok = identical and deviations == 0
        report(
            "perfect-model identity",
            ok,
            f"trajectories bit-identical={identical}, deviation replans={deviations}",
            elapsed, 5,
        )
        assert identical
        assert deviations == 0
        assert elapsed < 5

    def test_episode_arithmetic(self):
        t0 = time.time()
        sc = demo_scenario(deviation_tau=None, include_crises=False)
        log = run_closed_loop(sc, 11)
        optimized = sum(1 for e in log.episodes if e.optimized)
        elapsed = time.time() - t0
        ok = len(log.episodes) == 6 and optimized == 6
        report(
            "episode arithmetic",
            ok,
            f"{len(log.episodes)} episodes ({optimized} optimized) on the 18/3 "
            "horizon with no crisis/deviation triggers (need exactly 6)",
            elapsed, 60,
        )
        assert len(log.episodes) == 6
        assert [e.week for e in log.episodes] == [0, 12, 24, 36, 48, 60]
        assert optimized == 6


class TestOptimizerOracle:
    def _instance(self, seed):
        rng = make_rng((seed, 99))
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        H = int(rng.integers(3, 6))
        actions = tuple(
            blue_action(
                aid=f"a{k}",
                effect=rng.uniform(-0.02, 0.03, n),
                cost=float(rng.uniform(0.5, 2.0)),
                min_duration=int(rng.integers(1, 3)),
            )
            for k in range(m)
        )
        model = ModelParams(
            A=rng.uniform(-0.05, 0.05, (n, n)),
            B=np.column_stack([a.effect for a in actions]),
            c=rng.uniform(-0.01, 0.005, n),
            provenance=None,
        )
        objective = flat_objective(n, goal=0.6, weight=1.0,
                                   lam=float(rng.uniform(0.0, 0.2)))
        cons = PlanConstraints(
            start_month=0, horizon_months=H,
            budget=float(rng.uniform(3.0, 16.0)),
            concurrency_cap=int(rng.integers(1, 3)),
            catalog=actions, action_ids=tuple(a.id for a in actions),
        )
        return model, state(rng.uniform(0.2, 0.8, n)), objective, cons

    def test_matches_exhaustive_enumeration(self):
        t0 = time.time()
        hits = total = 0
        seed = 0
        while total < 40:
            seed += 1
            model, start, objective, cons = self._instance(seed)
            plans = list(enumerate_plans(cons))
            if len(plans) > 256:
                continue
            total += 1
            search = _PlanSearch(model, start, objective, cons)
            optimum = min(search.scalar_cost(p.activations) for p in plans)
            empty = search.scalar_cost(())
            got = optimize_plan(model, start, objective, cons, (seed, 1))
            got_cost = search.scalar_cost(got.activations)
            assert got_cost <= empty + 1e-12, "worse than the empty plan"
            if abs(got_cost - optimum) <= 1e-9 * max(1.0, abs(optimum)):
                hits += 1
        elapsed = time.time() - t0
        ok = hits >= 38  # >= 95% of 40
        report(
            "optimizer oracle",
            ok,
            f"enumeration optimum matched on {hits}/40 instances (need >= 38), "
            "never worse than the empty plan",
            elapsed, 60,
        )
        assert hits >= 38
        assert elapsed < 60


class TestRecalibration:
    def test_injected_disparity_strictly_improves(self):
        t0 = time.time()
        sc = demo_scenario()
        plant = sc.plant
        nz = [tuple(idx) for idx in np.argwhere(plant.A > 0)]  # off-diagonal couplings
        successes = 0
        for seed in range(20):
            rng = make_rng((seed, 41))
            i, j = nz[seed % len(nz)]
            A_model = plant.A.copy()
            A_model[i, j] += 0.05
            model = ModelParams(A=A_model, B=plant.B.copy(), c=plant.c.copy(),
                                provenance=None)
            x = sc.initial_state().values
            history = []
            for t in range(36):
                u = (rng.random(plant.m) < 0.5).astype(float)
                shock = np.clip(rng.normal(0.0, 1.0, plant.n) * plant.sigma,
                                -3 * plant.sigma, 3 * plant.sigma)
                nxt = step_values(x, plant.A, plant.B, plant.c, u, shock)
                history.append((x.copy(), u, nxt.copy()))
                x = nxt
            before = one_step_error(model, history)
            after = one_step_error(recalibrate(model, history), history)
            successes += after < before
        elapsed = time.time() - t0
        ok = successes == 20
        report(
            "recalibration",
            ok,
            f"one-step error strictly decreased in {successes}/20 seeds "
            "(need 20/20) after a +0.05 coupling disparity over 36 transitions",
            elapsed, 30,
        )
        assert successes == 20
        assert elapsed < 30


class TestXGameProtocol:
    def test_scripted_game_with_replay(self, tmp_path):
        from pmesii.harness.sessions import Session
        from pmesii.xgame import XGameConfig

        t0 = time.time()
        live = Session.create(demo_document(), "xgame", seed=6, state_dir=tmp_path)
        while not live.engine.game_over:
            drive_session(live, phases=1)
        phases = live.engine.phases

        partition_ok = (
            phases[0].start_week == 0
            and phases[-1].end_week == live.engine.config.game_weeks
            and all(a.end_week == b.start_week for a, b in zip(phases, phases[1:]))
        )

        threshold = XGameConfig().recalibration_threshold
        recal_ok = phases[0].recalibrated is False and all(
            cur.recalibrated == (cur.prev_phase_error > threshold)
            for cur in phases[1:]
        )

        reloaded = Session.load(tmp_path, live.session_id)
        replay_ok = (
            reloaded.record().content_hash == live.record().content_hash
            and reloaded.current_week() == live.current_week()
            and np.array_equal(reloaded.engine.true_values, live.engine.true_values)
            and reloaded.engine.verify_ledger()
        )
        elapsed = time.time() - t0
        ok = partition_ok and recal_ok and replay_ok
        report(
            "x-game protocol",
            ok,
            f"{len(phases)} phases partition the 10-year span={partition_ok}, "
            f"recalibration iff threshold exceeded={recal_ok}, "
            f"event-log replay bit-exact={replay_ok}",
            elapsed, 120,
        )
        assert partition_ok
        assert recal_ok
        assert replay_ok
        assert elapsed < 120


class TestNextStateFeasibility:
    def test_estimator_against_larger_oracle(self):
        t0 = time.time()
        sc = demo_scenario()
        milestone = demo_milestone(sc)
        alts = plan_alternatives(sc.initial_state(), milestone, demo_assumption_sets(),
                                 sc, seed=5)
        sampler = PlantSampler(sc)
        scored = [
            alt.scored(*assess_risk_feasibility(alt, sampler, 2000, (5, k),
                                                sc.initial_state(), sc))
            for k, alt in enumerate(alts)
        ]
        chosen = select_strategy(scored, SelectionWeights(cost=0.05, infeasibility=5.0,
                                                          risk=10.0))
        within = 0
        for rep in range(20):
            f1, _ = assess_risk_feasibility(chosen, sampler, 1000, (900, rep, 1),
                                            sc.initial_state(), sc)
            f10, _ = assess_risk_feasibility(chosen, sampler, 10000, (900, rep, 2),
                                             sc.initial_state(), sc)
            within += abs(f1 - f10) <= 0.03
        estimator_ok = within >= 19  # 95% of 20 repetitions

        # dominance check over random score tuples
        from dataclasses import replace

        rng = make_rng(4242)
        dominated_picks = 0
        for _ in range(10000):
            tuples = rng.uniform(0.0, 1.0, (4, 3))
            cands = [
                replace(scored[0], team_id=f"team_{k}", predicted_cost=float(t[0]),
                        feasibility=float(t[1]), risk=float(t[2]))
                for k, t in enumerate(tuples)
            ]
            w = SelectionWeights(*rng.uniform(0.01, 5.0, 3))
            pick = select_strategy(cands, w)
            for other in cands:
                if (other.predicted_cost < pick.predicted_cost
                        and other.feasibility > pick.feasibility
                        and other.risk < pick.risk):
                    dominated_picks += 1
                    break
        dominance_ok = dominated_picks == 0
        elapsed = time.time() - t0
        ok = estimator_ok and dominance_ok
        report(
            "next-state feasibility",
            ok,
            f"1k-trial feasibility within 3 points of the 10k oracle in {within}/20 "
            f"repetitions (need >= 19); dominated selections {dominated_picks}/10000",
            elapsed, 180,
        )
        assert estimator_ok
        assert dominance_ok
        assert elapsed < 180


class TestFusion:
    def test_fused_beats_single_reports(self):
        t0 = time.time()
        sc = demo_scenario(zero_bias=True)
        rng = make_rng(321)
        fused_err = []
        single_err = []
        for draw in range(1000):
            truth = state(rng.uniform(0.15, 0.85, sc.n_variables))
            reports = [
                observe(truth, sc.sources, s.id, (777, draw, k))
                for k, s in enumerate(sc.sources)
            ]
            est = fuse(reports, truth.values)
            fused_err.append(float(np.mean(np.abs(est.values - truth.values))))
            for r in reports:
                mask = r.present()
                if mask.any():
                    single_err.append(
                        float(np.mean(np.abs(r.readings[mask] - truth.values[mask])))
                    )
        fused_mae = float(np.mean(fused_err))
        single_mae = float(np.mean(single_err))
        elapsed = time.time() - t0
        ok = fused_mae < single_mae
        report(
            "fusion",
            ok,
            f"fused MAE {fused_mae:.4f} < single-report MAE {single_mae:.4f} "
            "over 1000 draws with 5 unbiased sources",
            elapsed, 10,
        )
        assert fused_mae < single_mae
        assert elapsed < 10
