"""Demo 4: a scripted ten-year five-cell wargame.

Blue, Red, and Green submit phase inputs; the modeling step forecasts to
the end of the game (refitting the model when the previous phase's
forecast missed); White turns the forecast into an assessment; a boundary
is declared where the situation changes significantly; the ground truth
advances and the next phase begins. The reconciliation ledger records how
humans used the machine estimates, and the dependency tracer explains
what drives a variable.

Run: python demos/04_xgame.py
"""

import numpy as np

from pmesii import demo_scenario
from pmesii.xgame import (
    LedgerEntry,
    LedgerKind,
    XGame,
    novel_effects,
    run_xgame,
    trace_dependencies,
)

sc = demo_scenario()
result = run_xgame(sc, seed=3)

print("=" * 70)
print(f"GAME OVER: {len(result.phases)} phases covering 520 weeks (10 years)")
print("=" * 70)
print(f"  {'phase':>5s} {'weeks':>12s} {'boundary':12s} {'recal':>5s} {'fc error':>9s}")
for ph in result.phases:
    err = "" if ph.prev_phase_error is None else f"{ph.prev_phase_error:9.3f}"
    print(f"  {ph.index:5d} [{ph.start_week:4d},{ph.end_week:4d}] "
          f"{ph.boundary_reason.value:12s} {str(ph.recalibrated):>5s} {err:>9s}")
print("  (recal means the prior phase's forecast error exceeded the threshold,")
print("   so the modeling team refit the model before forecasting)")

# ---------------------------------------------------------------------------
# The learning affordances: tracing and novel-effect spotting
# ---------------------------------------------------------------------------
print("\nDependency trace for political_stability (model view, depth 2):")

def show(node, indent=1):
    for child in node.children:
        sign = "+" if child.coupling > 0 else "-"
        mark = " (repeat)" if child.repeat else ""
        print("  " * indent + f"{sign} {child.variable_id} ({child.coupling:+.3f}){mark}")
        show(child, indent + 1)

tree = trace_dependencies(result.final_model, "political_stability", 2, sc)
show(tree)

watch = {"political_stability", "security_control", "economic_activity"}
first = result.phases[0]
flagged = novel_effects(first.forecast, watch, 0.1, sc)
print(f"\nUnwatched variables the phase-0 forecast says will move >= 0.1:")
for vid, change in flagged[:5]:
    print(f"  {vid:24s} net change {change:+.3f}")

# ---------------------------------------------------------------------------
# The reconciliation ledger: five ways humans use the estimates
# ---------------------------------------------------------------------------
engine = XGame(sc, seed=3)
samples = [
    (LedgerKind.DETAIL_ACCEPTED, "week-by-week employment path adopted into the brief"),
    (LedgerKind.PERSUADED_BY_TRACE, "traced trust -> cohesion chain changed the Red read"),
    (LedgerKind.NOVEL_EFFECT, "media_credibility slide had not been on anyone's list"),
    (LedgerKind.ASSUMPTION_SURFACED, "team assumed power repairs self-fund; model disagreed"),
    (LedgerKind.COUNTERPOSITION, "White rejects the economic rebound; wrote out why"),
]
for kind, why in samples:
    engine.record_ledger(LedgerEntry(kind=kind, variables=("public_trust",),
                                     rationale=why, phase_index=0))
print(f"\nLedger holds {len(engine.ledger)} entries, chain verifies: "
      f"{engine.verify_ledger()}")
for rec in engine.ledger:
    print(f"  [{rec.position}] {rec.entry.kind.value:20s} {rec.entry.rationale}")
