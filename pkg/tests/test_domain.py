import copy
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pmesii.domain import (
    ActionPlan,
    horizon_schedule,
    validate_plan,
    validate_scenario,
    weighted_distance,
)
from pmesii.errors import (
    ConstraintError,
    DimensionError,
    RangeError,
    ScheduleError,
    SchemaError,
)
from pmesii.scenarios import demo_document, demo_scenario


class TestWeightedDistance:
    def test_identity(self):
        a = np.array([0.2, 0.7, 0.5])
        assert weighted_distance(a, a, np.ones(3)) == 0.0

    def test_unit_difference(self):
        assert weighted_distance([1.0, 0.0], [0.0, 0.0], [1.0, 1.0]) == 1.0

    def test_weighted_example(self):
        # sqrt(4 * 0.25) = 1
        assert weighted_distance([0.6, 0.2], [0.1, 0.2], [4.0, 1.0]) == pytest.approx(1.0)

    def test_symmetry(self):
        a, b, w = [0.3, 0.9], [0.5, 0.1], [2.0, 0.5]
        assert weighted_distance(a, b, w) == weighted_distance(b, a, w)

    def test_zero_iff_weighted_equal(self):
        # difference only on a zero-weight component
        assert weighted_distance([0.2, 0.9], [0.2, 0.1], [1.0, 0.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            weighted_distance([0.1, 0.2], [0.1], [1.0, 1.0])

    @given(
        st.lists(st.floats(0, 1), min_size=2, max_size=6),
        st.data(),
    )
    def test_triangle_inequality(self, a, data):
        n = len(a)
        b = data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
        c = data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
        w = data.draw(st.lists(st.floats(0, 10), min_size=n, max_size=n))
        assert weighted_distance(a, c, w) <= (
            weighted_distance(a, b, w) + weighted_distance(b, c, w) + 1e-9
        )


class TestHorizonSchedule:
    def test_default_horizon(self):
        assert horizon_schedule(18, 3) == [0, 3, 6, 9, 12, 15]

    def test_single_episode(self):
        assert horizon_schedule(18, 18) == [0]

    def test_small(self):
        assert horizon_schedule(12, 4) == [0, 4, 8]

    def test_indivisible(self):
        with pytest.raises(ScheduleError):
            horizon_schedule(18, 5)

    def test_length_times_period_equals_horizon(self):
        for horizon in range(1, 40):
            for period in range(1, horizon + 1):
                if horizon % period:
                    continue
                sched = horizon_schedule(horizon, period)
                assert len(sched) * period == horizon
                assert sched[0] == 0


class TestValidateScenario:
    def test_demo_is_valid(self):
        sc = validate_scenario(demo_document())
        assert sc.n_variables == 12
        assert sc.horizon_months == 18
        assert sc.replan_period_months == 3
        assert len(horizon_schedule(sc.horizon_months, sc.replan_period_months)) == 6

    def test_accepts_json_text(self):
        sc = validate_scenario(json.dumps(demo_document()))
        assert sc.n_variables == 12

    def test_value_out_of_range(self):
        doc = demo_document()
        doc["variables"][0]["value"] = 1.3
        with pytest.raises(RangeError):
            validate_scenario(doc)

    def test_indivisible_schedule(self):
        doc = demo_document()
        doc["control"]["replan_period_months"] = 5
        with pytest.raises(ScheduleError):
            validate_scenario(doc)

    def test_unknown_top_level_key(self):
        doc = demo_document()
        doc["extra_section"] = {}
        with pytest.raises(SchemaError):
            validate_scenario(doc)

    def test_missing_top_level_key(self):
        doc = demo_document()
        del doc["objective"]
        with pytest.raises(SchemaError):
            validate_scenario(doc)

    def test_coupling_dimension_mismatch(self):
        doc = demo_document()
        doc["plant"]["coupling"] = doc["plant"]["coupling"][:-1]
        with pytest.raises(DimensionError):
            validate_scenario(doc)

    def test_unknown_variable_in_effect(self):
        doc = demo_document()
        doc["actions"][0]["effect"] = {"no_such_var": 0.1}
        with pytest.raises(SchemaError):
            validate_scenario(doc)

    def test_duplicate_variable_id(self):
        doc = demo_document()
        doc["variables"][1]["id"] = doc["variables"][0]["id"]
        with pytest.raises(SchemaError):
            validate_scenario(doc)

    def test_bad_category(self):
        doc = demo_document()
        doc["variables"][0]["category"] = "Cultural"
        with pytest.raises(SchemaError):
            validate_scenario(doc)

    def test_coupling_stability_reject(self):
        doc = demo_document()
        n = len(doc["variables"])
        doc["plant"]["coupling"] = [[0.1] * n for _ in range(n)]  # row sum 1.2
        with pytest.raises(RangeError):
            validate_scenario(doc)

    def test_round_trip(self):
        first = validate_scenario(demo_document())
        second = validate_scenario(json.loads(first.to_json()))
        assert first == second
        assert first.to_document() == second.to_document()

    def test_round_trip_preserves_infinite_tau(self):
        sc = demo_scenario(deviation_tau=None)
        assert math.isinf(sc.deviation_tau)
        again = validate_scenario(sc.to_document())
        assert math.isinf(again.deviation_tau)


class TestValidatePlan:
    def plan(self, *activations, start=0, horizon=18):
        return ActionPlan(start_month=start, horizon_months=horizon, activations=tuple(activations))

    def test_valid_plan(self, demo):
        validate_plan(self.plan(("stability_patrols", 0, 5)), demo)

    def test_over_budget(self, demo):
        # patrols at 3.0/month for the whole horizon x3 overlapping copies
        plan = self.plan(
            ("stability_patrols", 0, 17),
            ("grid_repair", 0, 17),
            ("job_program", 0, 17),
            ("governance_support", 0, 17),
        )
        with pytest.raises(ConstraintError, match="budget"):
            validate_plan(plan, demo)

    def test_concurrency_cap(self, demo):
        plan = self.plan(
            ("stability_patrols", 0, 3),
            ("grid_repair", 0, 3),
            ("job_program", 0, 3),
            ("governance_support", 0, 3),
        )
        with pytest.raises(ConstraintError, match="cap|concurrent"):
            validate_plan(plan, demo)

    def test_window_containment(self, demo):
        with pytest.raises(ConstraintError, match="window"):
            validate_plan(self.plan(("stability_patrols", 16, 19)), demo)

    def test_min_duration(self, demo):
        with pytest.raises(ConstraintError, match="minimum"):
            validate_plan(self.plan(("stability_patrols", 0, 0)), demo)

    def test_overlapping_same_action(self, demo):
        plan = self.plan(("stability_patrols", 0, 5), ("stability_patrols", 4, 9))
        with pytest.raises(ConstraintError, match="overlap"):
            validate_plan(plan, demo)

    def test_wrong_actor(self, demo):
        with pytest.raises(ConstraintError, match="catalog"):
            validate_plan(self.plan(("sabotage_campaign", 0, 3)), demo, actor="Blue")
