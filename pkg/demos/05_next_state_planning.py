"""Demo 5: next-state planning - two timescales, several teams, one directive.

The end state is broken into milestone predicates (machine-checkable
next states). Each window: assess progress, let teams with different
assumptions draft alternative plans, score every alternative by Monte
Carlo feasibility and quantile risk, select, and issue the frozen
directive. Over a campaign the path is jagged but moves forward.

Run: python demos/05_next_state_planning.py
"""

import numpy as np

from pmesii import demo_scenario
from pmesii.nextstate import (
    DirectiveLog,
    PlantSampler,
    SelectionWeights,
    assess_progress,
    assess_risk_feasibility,
    end_state_path,
    issue_next_state_plan,
    plan_alternatives,
    run_campaign,
    select_strategy,
)
from pmesii.scenarios import demo_assumption_sets, demo_milestone

sc = demo_scenario()
path = end_state_path(sc)

print("=" * 70)
print("THE END-STATE PATH (stepping stones, target months)")
print("=" * 70)
for ms in path.milestones:
    terms = ", ".join(f"{t.variable_id} {t.op} {t.bound:.2f}" for t in ms.terms)
    print(f"  month {ms.target_month:2d}: {terms}")

report = assess_progress(sc.initial_state(), path, sc)
print(f"\nProgress at week 0: score {report.score:.2f}")
for mid, margin in report.margins:
    print(f"  {mid:14s} margin {margin:+.3f}")

# ---------------------------------------------------------------------------
# One window in detail
# ---------------------------------------------------------------------------
milestone = demo_milestone(sc)
print(f"\nPlanning toward '{milestone.id}' (month {milestone.target_month}):")
alts = plan_alternatives(sc.initial_state(), milestone, demo_assumption_sets(),
                         sc, seed=5)
sampler = PlantSampler(sc)
scored = []
for k, alt in enumerate(alts):
    feas, risk = assess_risk_feasibility(alt, sampler, 1000, (5, k),
                                         sc.initial_state(), sc)
    scored.append(alt.scored(feas, risk))
    acts = ", ".join(f"{a}[{s}-{e}]" for a, s, e in alt.plan.activations) or "(none)"
    print(f"  {alt.team_id} ({alt.assumption_id}): cost {alt.predicted_cost:7.2f} "
          f"feasibility {feas:.3f} risk {risk:.4f}")
    print(f"      plan: {acts}")

weights = SelectionWeights(cost=0.05, infeasibility=5.0, risk=10.0)
chosen = select_strategy(scored, weights)
log = DirectiveLog()
directive = issue_next_state_plan(chosen, log, current_month=0)
print(f"\nSelected {chosen.team_id}; directive frozen with hash "
      f"{directive.content_hash[:16]}... for months "
      f"[{directive.start_month}, {directive.end_month})")

# ---------------------------------------------------------------------------
# A full campaign: jagged but forward
# ---------------------------------------------------------------------------
print("\n" + "=" * 70)
print("FOUR CONSECUTIVE WINDOWS ON THE LIVE PLANT")
print("=" * 70)
result = run_campaign(sc, seed=0)
for w in result.windows:
    print(f"  window {w.index}: progress {w.progress_before:.2f} -> "
          f"{w.progress_after:.2f} (milestone margin {w.margin_after:+.3f}, "
          f"{w.chosen_team})")
print(f"\n  aggregate progress: {result.start_score:.2f} -> {result.end_score:.2f} "
      "(haphazard but forward)")
