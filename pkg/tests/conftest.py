import numpy as np
import pytest

from pmesii import demo_scenario, perfect_scenario
from pmesii.domain import Action, Objective, PmesiiState
from pmesii.forecast import ModelParams
from pmesii.plant import PlantParams


@pytest.fixture(scope="session")
def demo():
    return demo_scenario()


@pytest.fixture(scope="session")
def perfect():
    return perfect_scenario()


def tiny_plant(n=2, m=1, A=None, B=None, c=None, sigma=None, crises=()):
    """Zero-dynamics plant unless pieces are supplied."""
    return PlantParams(
        A=np.zeros((n, n)) if A is None else np.asarray(A, dtype=float),
        B=np.zeros((n, m)) if B is None else np.asarray(B, dtype=float),
        c=np.zeros(n) if c is None else np.asarray(c, dtype=float),
        sigma=np.zeros(n) if sigma is None else np.asarray(sigma, dtype=float),
        crises=tuple(crises),
    )


def tiny_model(plant) -> ModelParams:
    return ModelParams(A=plant.A.copy(), B=plant.B.copy(), c=plant.c.copy(), provenance=None)


def state(values, week=0) -> PmesiiState:
    return PmesiiState(week=week, values=np.asarray(values, dtype=float))


def blue_action(aid="act", effect=(0.02, 0.0), cost=1.0, min_duration=1) -> Action:
    return Action(
        id=aid,
        actor="Blue",
        effect=np.asarray(effect, dtype=float),
        cost=cost,
        min_duration_months=min_duration,
        description="",
    )


def flat_objective(n, goal=0.5, weight=1.0, lam=0.0, discount=1.0) -> Objective:
    return Objective(
        goal=np.full(n, goal),
        weights=np.full(n, weight),
        action_cost_weight=lam,
        discount=discount,
    )
