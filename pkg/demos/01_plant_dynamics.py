"""Demo 1: the simulated country (the "plant").

Twelve normalized PMESII indices evolve weekly under coupled
mean-reverting dynamics, weekly shocks, scripted crises, and whatever
actions are active. This script shows the uncontrolled decay, the effect
of sustained actions, and the scripted crisis dips.

Run: python demos/01_plant_dynamics.py
"""

import numpy as np

from pmesii import demo_scenario, simulate_plant
from pmesii.plant import weekly_controls
from pmesii.domain import ActionPlan

sc = demo_scenario()
weeks = sc.horizon_weeks
ids = tuple(a.id for a in sc.actions)

print("=" * 70)
print("THE PLANT: 12 PMESII indices, one step per week")
print("=" * 70)
for v in sc.variables:
    print(f"  {v.id:24s} {v.category:14s} starts at {v.value:.2f}")

# ---------------------------------------------------------------------------
# Uncontrolled: the crisis country decays toward a sagging equilibrium
# ---------------------------------------------------------------------------
idle = np.zeros((weeks, len(ids)))
baseline = simulate_plant(sc.plant, sc.initial_state(), idle, weeks, seed=1)

print("\nUncontrolled trajectory (selected weeks):")
picks = ["political_stability", "security_control", "economic_activity", "power_supply"]
header = "  week  " + "  ".join(f"{p[:12]:>12s}" for p in picks)
print(header)
for week in (0, 12, 26, 27, 40, 52, 53, 72):
    row = "  ".join(f"{baseline.values[week, sc.index_of(p)]:12.3f}" for p in picks)
    print(f"  {week:4d}  {row}")
print("  (note the scripted shocks: security at week 26, power at week 52)")

# ---------------------------------------------------------------------------
# With sustained Blue actions the picture changes
# ---------------------------------------------------------------------------
plan = ActionPlan(0, 18, (
    ("stability_patrols", 0, 11),
    ("grid_repair", 0, 8),
    ("job_program", 3, 11),
))
controls = weekly_controls(plan, ids, 0, weeks)
managed = simulate_plant(sc.plant, sc.initial_state(), controls, weeks, seed=1)

print("\nSame shocks, with patrols + grid repair + a jobs program:")
print(header)
for week in (0, 12, 26, 40, 52, 72):
    row = "  ".join(f"{managed.values[week, sc.index_of(p)]:12.3f}" for p in picks)
    print(f"  {week:4d}  {row}")

final_gap = managed.values[-1] - baseline.values[-1]
print(f"\nAverage final gain across all 12 variables: {final_gap.mean():+.3f}")

# ---------------------------------------------------------------------------
# Optional plot
# ---------------------------------------------------------------------------
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(__file__).parent / "output"
    out.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(9, 5))
    i = sc.index_of("security_control")
    ax.plot(baseline.values[:, i], label="uncontrolled", lw=2)
    ax.plot(managed.values[:, i], label="with actions", lw=2)
    ax.axvline(26, color="crimson", ls="--", alpha=0.6, label="insurgent offensive")
    ax.axvline(52, color="darkorange", ls="--", alpha=0.6, label="flood disaster")
    ax.set_xlabel("week")
    ax.set_ylabel("security_control")
    ax.set_ylim(0, 1)
    ax.legend()
    ax.set_title("Ground truth under shocks, crises, and actions")
    fig.tight_layout()
    fig.savefig(out / "01_security_trajectories.png", dpi=120)
    print(f"\nplot saved to {out / '01_security_trajectories.png'}")
except ImportError:
    pass
