import numpy as np
import pytest

from pmesii.domain import PmesiiState, make_rng
from pmesii.errors import ConstraintError, EmptyInputError, RangeError
from pmesii.nextstate import (
    AssumptionSet,
    DirectiveLog,
    EndStatePath,
    MilestonePredicate,
    PlantSampler,
    SelectionWeights,
    StrategyAlternative,
    ThresholdTerm,
    alternatives_csv,
    assess_progress,
    assess_risk_feasibility,
    end_state_path,
    issue_next_state_plan,
    plan_alternatives,
    run_campaign,
    select_strategy,
    _directive_hash,
)
from pmesii.scenarios import demo_assumption_sets, demo_milestone, demo_scenario

from conftest import state


def milestone(terms, month=4, mid="m"):
    return MilestonePredicate(id=mid, description="", terms=tuple(terms), target_month=month)


class TestMilestonePredicates:
    def test_term_validation(self):
        with pytest.raises(RangeError):
            ThresholdTerm("x", ">", 0.5)
        with pytest.raises(RangeError):
            ThresholdTerm("x", ">=", 1.2)
        with pytest.raises(RangeError):
            milestone(())

    def test_margin_arithmetic(self, demo):
        ms = milestone([ThresholdTerm("governance_capacity", ">=", 0.6)])
        est = demo.initial_state().values.copy()
        est[demo.index_of("governance_capacity")] = 0.45
        assert ms.margin(est, demo) == pytest.approx(-0.15)

    def test_upper_bound_terms(self, demo):
        ms = milestone([ThresholdTerm("security_control", "<=", 0.4)])
        est = demo.initial_state().values.copy()
        est[demo.index_of("security_control")] = 0.3
        assert ms.margin(est, demo) == pytest.approx(0.1)

    def test_path_requires_increasing_months(self, demo):
        m1 = milestone([ThresholdTerm("security_control", ">=", 0.3)], month=4, mid="a")
        m2 = milestone([ThresholdTerm("security_control", ">=", 0.4)], month=4, mid="b")
        with pytest.raises(RangeError):
            EndStatePath(milestones=(m1, m2))


class TestAssessProgress:
    def test_all_satisfied_scores_one(self, demo):
        path = end_state_path(demo)
        est = state(np.full(12, 1.0))
        report = assess_progress(est, path, demo)
        assert report.score == 1.0
        assert all(margin >= 0 for _, margin in report.margins)

    def test_mixed_case_against_per_term_recomputation(self, demo):
        path = end_state_path(demo)
        rng = make_rng(4)
        est = state(rng.uniform(0.2, 0.7, 12))
        report = assess_progress(est, path, demo)
        num = den = 0.0
        for i, ms in enumerate(path.milestones):
            margin = min(
                (est.values[demo.index_of(t.variable_id)] - t.bound)
                if t.op == ">=" else (t.bound - est.values[demo.index_of(t.variable_id)])
                for t in ms.terms
            )
            assert dict(report.margins)[ms.id] == pytest.approx(margin, rel=1e-12)
            den += i + 1
            if margin >= 0:
                num += i + 1
        assert report.score == pytest.approx(num / den)


class TestPlanAlternatives:
    def test_three_teams_distinct_assumptions(self, demo):
        alts = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                                 demo_assumption_sets(), demo, seed=5)
        assert len(alts) == 3
        assert len({a.assumption_id for a in alts}) == 3
        assert len({a.team_id for a in alts}) == 3

    def test_determinism(self, demo):
        a = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                              demo_assumption_sets(), demo, seed=5)
        b = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                              demo_assumption_sets(), demo, seed=5)
        assert [x.plan for x in a] == [x.plan for x in b]
        assert [x.predicted_cost for x in a] == [x.predicted_cost for x in b]

    def test_identical_variants_identical_plans(self, demo):
        twins = [AssumptionSet(id="t1"), AssumptionSet(id="t2")]
        alts = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                                 twins, demo, seed=5)
        assert alts[0].plan == alts[1].plan

    def test_single_variant_rejected(self, demo):
        with pytest.raises(RangeError):
            plan_alternatives(demo.initial_state(), demo_milestone(demo),
                              [AssumptionSet(id="only")], demo, seed=5)

    def test_window_band_warning(self, demo):
        long = milestone([ThresholdTerm("security_control", ">=", 0.3)], month=9)
        with pytest.warns(UserWarning, match="band"):
            plan_alternatives(demo.initial_state(), long,
                              demo_assumption_sets(), demo, seed=5)


class TestRiskFeasibility:
    def test_deterministic_family_pass(self, demo):
        sc = demo_scenario(shock_std=0.0, include_crises=False)
        easy = milestone([ThresholdTerm("security_control", ">=", 0.05)])
        alts = plan_alternatives(sc.initial_state(), easy, demo_assumption_sets(),
                                 sc, seed=5)
        sampler = PlantSampler(sc, parameter_spread=0.0)
        feas, risk = assess_risk_feasibility(alts[0], sampler, 50, (1,),
                                             sc.initial_state(), sc)
        assert feas == 1.0
        assert risk == 0.0

    def test_impossible_predicate(self, demo):
        sc = demo_scenario(shock_std=0.0, include_crises=False)
        impossible = milestone([ThresholdTerm("force_readiness", ">=", 1.0)])
        alts = plan_alternatives(sc.initial_state(), impossible, demo_assumption_sets(),
                                 sc, seed=5)
        sampler = PlantSampler(sc, parameter_spread=0.0)
        feas, risk = assess_risk_feasibility(alts[0], sampler, 50, (1,),
                                             sc.initial_state(), sc)
        assert feas == 0.0
        assert risk > 0.0

    def test_estimator_consistency_small(self, demo):
        ms = demo_milestone(demo)
        alts = plan_alternatives(demo.initial_state(), ms, demo_assumption_sets(),
                                 demo, seed=5)
        sampler = PlantSampler(demo)
        within = 0
        for rep in range(5):
            f1, _ = assess_risk_feasibility(alts[0], sampler, 1000, (70, rep, 1),
                                            demo.initial_state(), demo)
            f10, _ = assess_risk_feasibility(alts[0], sampler, 10000, (70, rep, 2),
                                             demo.initial_state(), demo)
            within += abs(f1 - f10) <= 0.03
        assert within >= 4

    def test_relaxing_a_term_never_decreases_feasibility(self, demo):
        base_terms = [
            ThresholdTerm("security_control", ">=", 0.42),
            ThresholdTerm("economic_activity", ">=", 0.40),
        ]
        ms = milestone(base_terms)
        alts = plan_alternatives(demo.initial_state(), ms, demo_assumption_sets(),
                                 demo, seed=5)
        sampler = PlantSampler(demo)
        alt = alts[0]
        feas_base, _ = assess_risk_feasibility(alt, sampler, 2000, (71,),
                                               demo.initial_state(), demo)
        for k in range(len(base_terms)):
            relaxed_terms = list(base_terms)
            relaxed_terms[k] = ThresholdTerm(relaxed_terms[k].variable_id, ">=",
                                             relaxed_terms[k].bound - 0.05)
            relaxed = StrategyAlternative(
                team_id=alt.team_id, assumption_id=alt.assumption_id,
                milestone=milestone(relaxed_terms), plan=alt.plan,
                predicted=alt.predicted, predicted_cost=alt.predicted_cost,
            )
            feas_relaxed, _ = assess_risk_feasibility(relaxed, sampler, 2000, (71,),
                                                      demo.initial_state(), demo)
            assert feas_relaxed >= feas_base  # shared seed: paired draws


def scored_alt(team, cost, feas, risk, demo):
    ms = milestone([ThresholdTerm("security_control", ">=", 0.4)])
    plan = None
    return StrategyAlternative(
        team_id=team, assumption_id=team, milestone=ms,
        plan=plan, predicted=None, predicted_cost=cost,
        feasibility=feas, risk=risk,
    )


class TestSelectStrategy:
    def test_single_alternative(self, demo):
        only = scored_alt("team_0", 5.0, 0.9, 0.0, demo)
        assert select_strategy([only]) is only

    def test_dominating_alternative_wins_any_weights(self, demo):
        best = scored_alt("team_1", 1.0, 0.99, 0.0, demo)
        rest = [scored_alt("team_0", 2.0, 0.5, 0.3, demo),
                scored_alt("team_2", 5.0, 0.9, 0.1, demo)]
        rng = make_rng(9)
        for _ in range(50):
            w = SelectionWeights(*rng.uniform(0.01, 10.0, 3))
            assert select_strategy(rest + [best], w) is best

    def test_three_way_score_oracle(self, demo):
        alts = [
            scored_alt("team_0", 10.0, 0.8, 0.05, demo),
            scored_alt("team_1", 8.0, 0.6, 0.10, demo),
            scored_alt("team_2", 9.0, 0.9, 0.00, demo),
        ]
        w = SelectionWeights(cost=0.1, infeasibility=2.0, risk=5.0)
        scores = {a.team_id: 0.1 * a.predicted_cost + 2.0 * (1 - a.feasibility) + 5.0 * a.risk
                  for a in alts}
        expect = min(scores, key=lambda t: (scores[t], t))
        assert select_strategy(alts, w).team_id == expect

    def test_tie_breaks_on_lowest_team_id(self, demo):
        a = scored_alt("team_5", 1.0, 0.9, 0.0, demo)
        b = scored_alt("team_2", 1.0, 0.9, 0.0, demo)
        assert select_strategy([a, b]).team_id == "team_2"

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            select_strategy([])

    def test_unscored_rejected(self, demo):
        ms = milestone([ThresholdTerm("security_control", ">=", 0.4)])
        raw = StrategyAlternative(team_id="t", assumption_id="t", milestone=ms,
                                  plan=None, predicted=None, predicted_cost=1.0)
        with pytest.raises(ConstraintError):
            select_strategy([raw])

    def test_never_selects_dominated_random_tuples(self, demo):
        rng = make_rng(123)
        for _ in range(500):
            alts = [scored_alt(f"team_{k}", *rng.uniform(0, 1, 3), demo) for k in range(4)]
            w = SelectionWeights(*rng.uniform(0.01, 5.0, 3))
            chosen = select_strategy(alts, w)
            for other in alts:
                if other is chosen:
                    continue
                strictly_dominates = (
                    other.predicted_cost < chosen.predicted_cost
                    and other.feasibility > chosen.feasibility
                    and other.risk < chosen.risk
                )
                assert not strictly_dominates


class TestDirectives:
    def test_issue_freezes_with_hash(self, demo):
        alts = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                                 demo_assumption_sets(), demo, seed=5)
        chosen = alts[0].scored(0.9, 0.0)
        log = DirectiveLog()
        rec = issue_next_state_plan(chosen, log, current_month=0)
        assert rec.end_month == 4
        assert rec.content_hash == _directive_hash(
            rec.team_id, rec.assumption_id, rec.start_month, rec.end_month, rec.plan
        )

    def test_reissue_within_open_window_rejected(self, demo):
        alts = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                                 demo_assumption_sets(), demo, seed=5)
        chosen = alts[0].scored(0.9, 0.0)
        log = DirectiveLog()
        issue_next_state_plan(chosen, log, current_month=0)
        with pytest.raises(ConstraintError, match="open"):
            issue_next_state_plan(chosen, log, current_month=2)
        # after the window closes a new directive is fine
        issue_next_state_plan(chosen, log, current_month=4)
        assert len(log.records) == 2

    def test_hash_stable_across_reissue_of_same_content(self, demo):
        alts = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                                 demo_assumption_sets(), demo, seed=5)
        chosen = alts[0].scored(0.9, 0.0)
        log1, log2 = DirectiveLog(), DirectiveLog()
        r1 = issue_next_state_plan(chosen, log1, current_month=0)
        r2 = issue_next_state_plan(chosen, log2, current_month=0)
        assert r1.content_hash == r2.content_hash


class TestCampaign:
    def test_jagged_path_moves_forward(self, demo):
        result = run_campaign(demo, seed=0)
        assert result.end_score > result.start_score
        assert len(result.directives.records) == len(result.windows)

    def test_alternatives_csv(self, demo, tmp_path):
        alts = plan_alternatives(demo.initial_state(), demo_milestone(demo),
                                 demo_assumption_sets(), demo, seed=5)
        sampler = PlantSampler(demo)
        scored = [a.scored(*assess_risk_feasibility(a, sampler, 200, (5, k),
                                                    demo.initial_state(), demo))
                  for k, a in enumerate(alts)]
        chosen = select_strategy(scored, SelectionWeights(0.05, 5.0, 10.0))
        out = tmp_path / "alts.csv"
        alternatives_csv(scored, chosen, out)
        rows = out.read_text().strip().split("\n")
        assert rows[0] == "team_id,assumption_id,predicted_cost,feasibility,risk,selected"
        assert len(rows) == 4
        assert sum(r.endswith(",1") for r in rows[1:]) == 1
