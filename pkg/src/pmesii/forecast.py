"""The planner's imperfect model: derivation, forecasting, recalibration.

The model shares the plant's functional form but its parameters are
multiplicatively perturbed (seeded, level ``eps``) and small entries are
pruned to zero, standing in for the two failure modes of real PMESII
models: wrong strengths and omitted factors. Forecasts are deterministic
zero-shock rollouts. Recalibration refits the non-pruned parameters by
ridge-regularized least squares on logged transitions, anchored at the
current parameter values so that directions the data cannot identify stay
where they are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import ActionPlan, MismatchSpec, Objective, PmesiiState, _readonly
from .errors import DimensionError, InsufficientDataError, RangeError
from .plant import PlantParams, Trajectory, rollout, weekly_controls

DEFAULT_MIN_TRANSITIONS = 8
DEFAULT_RIDGE = 1e-3


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Planner-side dynamics parameters plus their derivation provenance."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    provenance: MismatchSpec

    def __post_init__(self):
        object.__setattr__(self, "A", _readonly(self.A))
        object.__setattr__(self, "B", _readonly(self.B))
        object.__setattr__(self, "c", _readonly(self.c))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.c, other.c)
            and self.provenance == other.provenance
        )


@dataclass(frozen=True, eq=False)
class ForecastTrajectory(Trajectory):
    """A deterministic predicted state series with its objective cost."""

    predicted_cost: float | None = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ForecastTrajectory):
            return NotImplemented
        return (
            self.start_week == other.start_week
            and np.array_equal(self.values, other.values)
            and self.predicted_cost == other.predicted_cost
        )


def derive_model(plant: PlantParams, level: float, seed, prune_threshold: float) -> ModelParams:
    """Perturb plant parameters into a deliberately imperfect model.

    Each entry becomes ``p * (1 + level * eta)`` with seeded eta ~ U(-1, 1);
    entries whose perturbed magnitude falls below ``prune_threshold`` are
    zeroed (reduced-order omission). level 0 returns the plant parameters
    exactly, untouched by pruning.
    """
    if not 0.0 <= level <= 1.0:
        raise RangeError(f"mismatch level {level} outside [0, 1]")
    prov = MismatchSpec(level=level, seed=seed, prune_threshold=prune_threshold)
    if level == 0.0:
        return ModelParams(A=plant.A.copy(), B=plant.B.copy(), c=plant.c.copy(), provenance=prov)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))

    def perturb(p: np.ndarray) -> np.ndarray:
        eta = rng.uniform(-1.0, 1.0, size=p.shape)
        out = p * (1.0 + level * eta)
        out[np.abs(out) < prune_threshold] = 0.0
        return out

    return ModelParams(A=perturb(plant.A), B=perturb(plant.B), c=perturb(plant.c), provenance=prov)


# ---------------------------------------------------------------------------
# Forecasting
# ---------------------------------------------------------------------------

def objective_cost(values: np.ndarray, objective: Objective, action_months: float = 0.0) -> float:
    """Discounted quadratic goal deviation over a (T+1, n) value array plus
    the linear action-month charge. Week 0 of the array is discount power 0."""
    dev = values - objective.goal
    per_week = (dev * dev) @ objective.weights
    discounts = objective.discount ** np.arange(values.shape[0])
    return float(discounts @ per_week + objective.action_cost_weight * action_months)


def forecast(model: ModelParams, start: PmesiiState, plan, weeks: int,
             action_ids, objective: Objective | None = None,
             cost_action_months: float | None = None,
             drift_offset: np.ndarray | None = None) -> ForecastTrajectory:
    """Deterministic (zero-shock) rollout of the update rule under the model.

    ``plan`` may be a single ActionPlan or a sequence of plans whose
    activations are OR-ed together (e.g. Blue and Red). The reported cost
    charges action-months for ``cost_action_months`` if given, else for a
    single plan's own activations. ``drift_offset`` adds a known external
    drift (e.g. a declared population-attitude shift) to the model's c.
    """
    controls = weekly_controls(plan, action_ids, start.week, weeks)
    c = model.c if drift_offset is None else model.c + drift_offset
    values = rollout(model.A, model.B, c, start.values, controls, None)
    cost = None
    if objective is not None:
        if cost_action_months is None:
            cost_action_months = plan.action_months() if isinstance(plan, ActionPlan) else 0.0
        cost = objective_cost(values, objective, cost_action_months)
    return ForecastTrajectory(start_week=start.week, values=values, predicted_cost=cost)


def forecast_error(predicted, observed, weights) -> float:
    """Mean over weeks of the weighted distance between two state series."""
    pv = predicted.values if isinstance(predicted, Trajectory) else np.asarray(predicted, dtype=float)
    ov = observed.values if isinstance(observed, Trajectory) else np.asarray(observed, dtype=float)
    w = np.asarray(weights, dtype=float)
    if pv.shape != ov.shape:
        raise DimensionError(f"trajectory shapes differ: {pv.shape} vs {ov.shape}")
    if w.shape != (pv.shape[1],):
        raise DimensionError(f"weights: expected length {pv.shape[1]}")
    d = pv - ov
    return float(np.mean(np.sqrt((d * d) @ w)))


# ---------------------------------------------------------------------------
# Recalibration
# ---------------------------------------------------------------------------

def _history_arrays(history):
    xs, us, ys = [], [], []
    for state, controls, nxt in history:
        xs.append(state.values if isinstance(state, PmesiiState) else np.asarray(state, dtype=float))
        us.append(np.asarray(controls, dtype=float))
        ys.append(nxt.values if isinstance(nxt, PmesiiState) else np.asarray(nxt, dtype=float))
    return np.array(xs), np.array(us), np.array(ys)


def one_step_error(params, history) -> float:
    """Mean squared one-step prediction error of any parameter set (model or
    plant) over logged (state, controls, next_state) transitions."""
    xs, us, ys = _history_arrays(history)
    pred = np.clip(xs + (xs - 0.5) @ params.A.T + us @ params.B.T + params.c, 0.0, 1.0)
    return float(np.mean((pred - ys) ** 2))


def recalibrate(model: ModelParams, history,
                min_transitions: int = DEFAULT_MIN_TRANSITIONS,
                regularization: float = DEFAULT_RIDGE) -> ModelParams:
    """Refit model parameters against logged transitions.

    Per-variable ridge regression on the linear regime (transitions where
    that variable's next value was not clamped), restricted to the model's
    non-zero structure (pruned couplings stay pinned at zero) and anchored
    at the current values. The returned parameters never have worse
    in-sample one-step error than the input model; when they cannot improve
    it, the input model is returned unchanged.
    """
    history = list(history)
    if len(history) < min_transitions:
        raise InsufficientDataError(
            f"{len(history)} transition(s) logged; at least {min_transitions} required"
        )
    xs, us, ys = _history_arrays(history)
    n, m = model.n, model.m
    if xs.shape[1] != n or us.shape[1] != m:
        raise DimensionError("history transitions do not match model dimensions")

    A_new = model.A.copy()
    B_new = model.B.copy()
    c_new = model.c.copy()
    centered = xs - 0.5
    for i in range(n):
        interior = (ys[:, i] > 0.0) & (ys[:, i] < 1.0)
        if not np.any(interior):
            continue
        a_free = np.flatnonzero(model.A[i])
        b_free = np.flatnonzero(model.B[i])
        c_free = model.c[i] != 0.0
        width = len(a_free) + len(b_free) + (1 if c_free else 0)
        if width == 0:
            continue
        cols = [centered[interior][:, a_free], us[interior][:, b_free]]
        if c_free:
            cols.append(np.ones((int(np.sum(interior)), 1)))
        Z = np.hstack(cols)
        y = ys[interior, i] - xs[interior, i]
        theta0 = np.concatenate(
            [model.A[i, a_free], model.B[i, b_free], [model.c[i]] if c_free else []]
        )
        root = np.sqrt(regularization)
        Z_aug = np.vstack([Z, root * np.eye(width)])
        y_aug = np.concatenate([y, root * theta0])
        theta, *_ = np.linalg.lstsq(Z_aug, y_aug, rcond=None)
        A_new[i, a_free] = theta[: len(a_free)]
        B_new[i, b_free] = theta[len(a_free) : len(a_free) + len(b_free)]
        if c_free:
            c_new[i] = theta[-1]

    candidate = ModelParams(A=A_new, B=B_new, c=c_new, provenance=model.provenance)
    if one_step_error(candidate, history) < one_step_error(model, history):
        return candidate
    return model
