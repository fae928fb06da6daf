"""Built-in desk-scale scenario: 12 variables, 4 Blue + 2 Red actions.

A small country sliding downward: most variables start below the 0.5
reference point, so positive couplings drag neighbors down until actions
(or luck) push key variables back up. The builder exposes the knobs the
experiments sweep: mismatch level, shock level, replan period, deviation
threshold, crises, and channel quality.
"""

from __future__ import annotations

import copy

from .domain import Scenario, validate_scenario

# (id, category, label, initial value)
_VARIABLES = [
    ("political_stability", "Political", "Political stability", 0.45),
    ("governance_capacity", "Political", "Governance capacity", 0.40),
    ("security_control", "Military", "Government security control", 0.35),
    ("force_readiness", "Military", "Security force readiness", 0.50),
    ("economic_activity", "Economic", "Economic activity", 0.40),
    ("employment", "Economic", "Employment", 0.38),
    ("public_trust", "Social", "Public trust in institutions", 0.42),
    ("social_cohesion", "Social", "Social cohesion", 0.45),
    ("power_supply", "Infrastructure", "Electric power supply", 0.40),
    ("transport_network", "Infrastructure", "Transport network", 0.45),
    ("info_access", "Information", "Information access", 0.50),
    ("media_credibility", "Information", "Media credibility", 0.44),
]

# (target, source, strength): target gains strength * (source - 0.5) per week
_COUPLINGS = [
    ("political_stability", "security_control", 0.04),
    ("political_stability", "public_trust", 0.035),
    ("governance_capacity", "political_stability", 0.035),
    ("security_control", "force_readiness", 0.035),
    ("security_control", "social_cohesion", 0.025),
    ("force_readiness", "governance_capacity", 0.025),
    ("economic_activity", "power_supply", 0.04),
    ("economic_activity", "transport_network", 0.035),
    ("economic_activity", "security_control", 0.025),
    ("employment", "economic_activity", 0.045),
    ("public_trust", "governance_capacity", 0.035),
    ("public_trust", "media_credibility", 0.025),
    ("public_trust", "employment", 0.025),
    ("social_cohesion", "public_trust", 0.04),
    ("social_cohesion", "info_access", 0.02),
    ("transport_network", "security_control", 0.025),
    ("info_access", "power_supply", 0.035),
    ("media_credibility", "info_access", 0.025),
    ("media_credibility", "governance_capacity", 0.02),
]

# Every variable relaxes toward its local equilibrium at this rate; keeps
# the plant mean-reverting instead of bistable-runaway.
_DAMPING = 0.08

_DRIFT = {
    "political_stability": -0.003,
    "governance_capacity": -0.003,
    "security_control": -0.006,
    "force_readiness": -0.002,
    "economic_activity": -0.004,
    "employment": -0.004,
    "public_trust": -0.004,
    "social_cohesion": -0.002,
    "power_supply": -0.006,
    "transport_network": -0.004,
    "info_access": -0.002,
    "media_credibility": -0.002,
}

_BLUE_ACTIONS = [
    {
        "id": "stability_patrols",
        "actor": "Blue",
        "effect": {"security_control": 0.02, "public_trust": 0.005},
        "cost": 3.0,
        "min_duration_months": 2,
        "description": "Joint patrols and checkpoint presence in contested districts.",
    },
    {
        "id": "job_program",
        "actor": "Blue",
        "effect": {"employment": 0.016, "economic_activity": 0.01},
        "cost": 2.5,
        "min_duration_months": 3,
        "description": "Cash-for-work and small-enterprise grants.",
    },
    {
        "id": "governance_support",
        "actor": "Blue",
        "effect": {"governance_capacity": 0.016, "political_stability": 0.008},
        "cost": 2.0,
        "min_duration_months": 2,
        "description": "Ministry advisors and civil-service training.",
    },
    {
        "id": "grid_repair",
        "actor": "Blue",
        "effect": {"power_supply": 0.02, "transport_network": 0.01},
        "cost": 3.5,
        "min_duration_months": 2,
        "description": "Power grid and arterial road repair crews.",
    },
]

_RED_ACTIONS = [
    {
        "id": "sabotage_campaign",
        "actor": "Red",
        "effect": {"power_supply": -0.015, "transport_network": -0.01},
        "cost": 1.0,
        "min_duration_months": 1,
        "description": "Attacks on pylons and road chokepoints.",
    },
    {
        "id": "intimidation_campaign",
        "actor": "Red",
        "effect": {"public_trust": -0.015, "security_control": -0.01},
        "cost": 1.0,
        "min_duration_months": 1,
        "description": "Night letters and targeted violence against officials.",
    },
]

_SOURCES = [
    {"id": "un_mission", "bias": 0.01, "noise_std": 0.015, "delay_weeks": 1, "missing_prob": 0.05, "reliability": 1.0},
    {"id": "field_ngo", "bias": -0.015, "noise_std": 0.02, "delay_weeks": 0, "missing_prob": 0.10, "reliability": 0.9},
    {"id": "gov_ministry", "bias": 0.03, "noise_std": 0.025, "delay_weeks": 2, "missing_prob": 0.10, "reliability": 0.7},
    {"id": "press_monitor", "bias": -0.01, "noise_std": 0.03, "delay_weeks": 1, "missing_prob": 0.15, "reliability": 0.8},
    {"id": "survey_panel", "bias": 0.0, "noise_std": 0.035, "delay_weeks": 2, "missing_prob": 0.20, "reliability": 0.85},
]

_WEIGHTS = {
    "political_stability": 1.5,
    "governance_capacity": 1.0,
    "security_control": 1.5,
    "force_readiness": 0.5,
    "economic_activity": 1.2,
    "employment": 1.0,
    "public_trust": 1.2,
    "social_cohesion": 0.8,
    "power_supply": 0.8,
    "transport_network": 0.6,
    "info_access": 0.4,
    "media_credibility": 0.4,
}


def demo_document(
    *,
    mismatch_level: float = 0.5,
    mismatch_seed: int = 7,
    shock_std: float = 0.02,
    horizon_months: int = 18,
    replan_period_months: int = 3,
    deviation_tau: float | None = 0.2,
    budget: float = 95.0,
    concurrency_cap: int = 3,
    include_crises: bool = True,
    clean_channel: bool = False,
    zero_bias: bool = False,
) -> dict:
    """The demo scenario as a plain JSON-ready document.

    ``clean_channel`` zeroes bias, noise, delay, and missingness on every
    source (the perfect-information variant); ``zero_bias`` clears only the
    biases. ``deviation_tau=None`` disables the deviation trigger.
    """
    ids = [v[0] for v in _VARIABLES]
    coupling = [[0.0] * len(ids) for _ in ids]
    idx = {vid: i for i, vid in enumerate(ids)}
    for target, source, strength in _COUPLINGS:
        coupling[idx[target]][idx[source]] = strength
    for i in range(len(ids)):
        coupling[i][i] = -_DAMPING

    sources = copy.deepcopy(_SOURCES)
    for s in sources:
        if clean_channel:
            s.update(bias=0.0, noise_std=0.0, delay_weeks=0, missing_prob=0.0, reliability=1.0)
        elif zero_bias:
            s["bias"] = 0.0

    crises = []
    if include_crises:
        crises.append(
            {
                "week": 26,
                "id": "insurgent_offensive",
                "shock": {"security_control": -0.25, "political_stability": -0.10},
            }
        )
        crises.append(
            {
                "week": 52,
                "id": "flood_disaster",
                "shock": {"power_supply": -0.20, "transport_network": -0.15},
            }
        )

    return {
        "variables": [
            {"id": vid, "category": cat, "label": label, "value": value}
            for vid, cat, label, value in _VARIABLES
        ],
        "plant": {
            "coupling": coupling,
            "drift": dict(_DRIFT),
            "shock_std": {vid: shock_std for vid in ids},
        },
        "crises": crises,
        "mismatch": {
            "level": mismatch_level,
            "seed": mismatch_seed,
            "prune_threshold": 0.0005,
        },
        "observation": {"sources": sources},
        "actions": copy.deepcopy(_BLUE_ACTIONS) + copy.deepcopy(_RED_ACTIONS),
        "objective": {
            "goals": {vid: 0.6 for vid in ids},
            "weights": dict(_WEIGHTS),
            "action_cost_weight": 0.1,
            "discount": 1.0,
        },
        "control": {
            "horizon_months": horizon_months,
            "replan_period_months": replan_period_months,
            "deviation_tau": deviation_tau,
            "budget": budget,
            "concurrency_cap": concurrency_cap,
        },
    }


def demo_scenario(**kwargs) -> Scenario:
    """Validated desk-scale scenario; keyword overrides as in demo_document."""
    return validate_scenario(demo_document(**kwargs))


def perfect_scenario(**kwargs) -> Scenario:
    """Perfect-model, perfect-information variant: zero mismatch, zero
    shocks, clean channel, no crises."""
    kwargs.setdefault("mismatch_level", 0.0)
    kwargs.setdefault("shock_std", 0.0)
    kwargs.setdefault("clean_channel", True)
    kwargs.setdefault("include_crises", False)
    return demo_scenario(**kwargs)


def demo_milestone(scenario: Scenario):
    """The demo next state: a month-4 stabilization gate on security and
    the economy (calibrated so a competent plan clears it with room)."""
    from .nextstate import MilestonePredicate, ThresholdTerm

    return MilestonePredicate(
        id="stabilization_gate",
        description="Security and economic activity held above the pre-crisis floor",
        terms=(
            ThresholdTerm(variable_id="security_control", op=">=", bound=0.40),
            ThresholdTerm(variable_id="economic_activity", op=">=", bound=0.38),
        ),
        target_month=4,
    )


def demo_assumption_sets():
    """Three planning teams with differing assumptions for the demo."""
    from .nextstate import AssumptionSet

    return [
        AssumptionSet(id="baseline"),
        AssumptionSet(id="alternate_model", mismatch_seed=99),
        AssumptionSet(id="security_first", weight_overrides=(("security_control", 3.0),)),
    ]
