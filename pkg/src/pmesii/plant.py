"""Ground-truth country dynamics: the "plant" the controller never sees.

Weekly update rule, linear around a 0.5 reference point with additive
control effects and total clamping to [0, 1]:

    x' = clamp( x + A (x - 0.5) + B u + c + shock )

Shocks are seeded Gaussians (per-variable std, clipped at 3 sigma) applied
before the clamp; scripted crises add their shock vector on the transition
into their week. The same step kernel drives the planner's forecast model,
so a zero-mismatch model reproduces a zero-noise plant bit-exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .domain import (
    COUPLING_REJECT_LIMIT,
    COUPLING_WARN_LIMIT,
    ActionPlan,
    PmesiiState,
    Scenario,
    WEEKS_PER_MONTH,
    _readonly,
)
from .errors import DimensionError, RangeError

REFERENCE_POINT = 0.5
SHOCK_CLIP_SIGMAS = 3.0


@dataclass(frozen=True, eq=False)
class CrisisEvent:
    """A scripted shock striking on the transition into ``week``."""

    week: int
    id: str
    shock: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shock", _readonly(self.shock))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CrisisEvent):
            return NotImplemented
        return (
            self.week == other.week
            and self.id == other.id
            and np.array_equal(self.shock, other.shock)
        )


@dataclass(frozen=True, eq=False)
class PlantParams:
    """True dynamics: coupling A (n x n), action effects B (n x m), drift c,
    shock stds sigma, and scripted crises."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    sigma: np.ndarray
    crises: tuple[CrisisEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "A", _readonly(self.A))
        object.__setattr__(self, "B", _readonly(self.B))
        object.__setattr__(self, "c", _readonly(self.c))
        object.__setattr__(self, "sigma", _readonly(self.sigma))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlantParams):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.sigma, other.sigma)
            and self.crises == other.crises
        )


def validate_plant_params(params: PlantParams, n_variables: int, n_actions: int) -> None:
    if params.A.shape != (n_variables, n_variables):
        raise DimensionError(
            f"plant.coupling: expected {n_variables}x{n_variables}, got {params.A.shape}"
        )
    if params.B.shape != (n_variables, n_actions):
        raise DimensionError(
            f"plant action effects: expected {n_variables}x{n_actions}, got {params.B.shape}"
        )
    if params.c.shape != (n_variables,):
        raise DimensionError(f"plant.drift: expected {n_variables} entries")
    if params.sigma.shape != (n_variables,):
        raise DimensionError(f"plant.shock_std: expected {n_variables} entries")
    for ev in params.crises:
        if ev.shock.shape != (n_variables,):
            raise DimensionError(f"crisis {ev.id!r}: shock vector length mismatch")
    row_sum = float(np.max(np.sum(np.abs(params.A), axis=1))) if n_variables else 0.0
    if row_sum > COUPLING_REJECT_LIMIT:
        raise RangeError(
            f"plant.coupling: max |row sum| {row_sum:.3f} exceeds stability limit "
            f"{COUPLING_REJECT_LIMIT}"
        )
    if row_sum > COUPLING_WARN_LIMIT:
        warnings.warn(
            f"plant.coupling: max |row sum| {row_sum:.3f} above recommended envelope "
            f"{COUPLING_WARN_LIMIT}; dynamics may saturate quickly"
        )


# ---------------------------------------------------------------------------
# Step kernel and rollouts (shared by plant and forecast model)
# ---------------------------------------------------------------------------

def step_values(x: np.ndarray, A: np.ndarray, B: np.ndarray, c: np.ndarray,
                u: np.ndarray, shock: np.ndarray | None = None) -> np.ndarray:
    """One week of the update rule on raw vectors (no clamp bypass)."""
    drive = A @ (x - REFERENCE_POINT) + B @ u + c
    if shock is not None:
        drive = drive + shock
    return np.clip(x + drive, 0.0, 1.0)


def step_plant(state: PmesiiState, params: PlantParams, active_controls,
               shock=None) -> PmesiiState:
    """Advance the true state one week under activation flags and a shock."""
    u = np.asarray(active_controls, dtype=float)
    if u.shape != (params.m,):
        raise DimensionError(f"active_controls: expected {params.m} flags, got {u.shape}")
    if state.values.shape != (params.n,):
        raise DimensionError(f"state: expected {params.n} variables, got {state.values.shape}")
    if shock is None:
        shock_v = None
    else:
        shock_v = np.asarray(shock, dtype=float)
        if shock_v.shape != (params.n,):
            raise DimensionError(f"shock: expected length {params.n}, got {shock_v.shape}")
    return PmesiiState(
        week=state.week + 1,
        values=step_values(state.values, params.A, params.B, params.c, u, shock_v),
    )


def rollout(A: np.ndarray, B: np.ndarray, c: np.ndarray, x0: np.ndarray,
            controls: np.ndarray, shocks: np.ndarray | None = None) -> np.ndarray:
    """Iterate the step kernel for T weeks; returns a (T+1, n) value array."""
    T = controls.shape[0]
    out = np.empty((T + 1, x0.shape[0]))
    out[0] = x0
    x = x0
    for t in range(T):
        x = step_values(x, A, B, c, controls[t], None if shocks is None else shocks[t])
        out[t + 1] = x
    return out


def rollout_batch(A: np.ndarray, B: np.ndarray, c: np.ndarray, x0: np.ndarray,
                  controls: np.ndarray) -> np.ndarray:
    """Deterministic rollout of K candidate control schedules at once.

    ``controls`` has shape (K, T, m); returns (K, T+1, n). Used by the plan
    optimizer, where the candidate neighborhood is evaluated in one batch.
    """
    K, T, _ = controls.shape
    n = x0.shape[0]
    out = np.empty((K, T + 1, n))
    x = np.broadcast_to(x0, (K, n)).copy()
    out[:, 0] = x
    At = A.T
    Bt = B.T
    for t in range(T):
        x = np.clip(x + (x - REFERENCE_POINT) @ At + controls[:, t] @ Bt + c, 0.0, 1.0)
        out[:, t + 1] = x
    return out


def rollout_family(As: np.ndarray, Bs: np.ndarray, cs: np.ndarray, x0: np.ndarray,
                   controls: np.ndarray, shocks: np.ndarray | None = None) -> np.ndarray:
    """Rollout across K different parameter draws (Monte Carlo families).

    ``As`` (K, n, n), ``Bs`` (K, n, m), ``cs`` (K, n); ``controls`` is a
    shared (T, m) schedule; ``shocks`` optionally (K, T, n).
    """
    K, n, _ = As.shape
    T = controls.shape[0]
    out = np.empty((K, T + 1, n))
    x = np.broadcast_to(x0, (K, n)).copy()
    out[:, 0] = x
    for t in range(T):
        drive = (
            np.einsum("kij,kj->ki", As, x - REFERENCE_POINT)
            + np.einsum("kij,j->ki", Bs, controls[t])
            + cs
        )
        if shocks is not None:
            drive = drive + shocks[:, t]
        x = np.clip(x + drive, 0.0, 1.0)
        out[:, t + 1] = x
    return out


# ---------------------------------------------------------------------------
# Trajectories, shocks, crises
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    """A weekly state series starting at ``start_week``."""

    start_week: int
    values: np.ndarray  # (T+1, n)

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    @property
    def end_week(self) -> int:
        return self.start_week + self.values.shape[0] - 1

    def state(self, week: int) -> PmesiiState:
        if not self.start_week <= week <= self.end_week:
            raise RangeError(f"week {week} outside [{self.start_week}, {self.end_week}]")
        return PmesiiState(week=week, values=self.values[week - self.start_week])

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.start_week == other.start_week and np.array_equal(self.values, other.values)


def draw_shocks(params: PlantParams, weeks: int, seed) -> np.ndarray:
    """Seeded (weeks, n) Gaussian shock matrix, clipped at 3 sigma."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    raw = rng.normal(0.0, 1.0, size=(weeks, params.n)) * params.sigma
    bound = SHOCK_CLIP_SIGMAS * params.sigma
    return np.clip(raw, -bound, bound)


def crisis_shock_matrix(params: PlantParams, start_week: int, weeks: int) -> np.ndarray:
    """Scripted crisis shocks laid out per transition; row t is the shock
    applied on the step into week start_week + t + 1."""
    out = np.zeros((weeks, params.n))
    for ev in params.crises:
        t = ev.week - start_week - 1
        if 0 <= t < weeks:
            out[t] += ev.shock
    return out


def simulate_plant(params: PlantParams, initial: PmesiiState, controls: np.ndarray,
                   weeks: int, seed) -> Trajectory:
    """Simulate T weeks under a (T, m) activation schedule with seeded shocks
    plus any scripted crisis shocks. Deterministic given the seed."""
    controls = np.asarray(controls, dtype=float)
    if controls.shape != (weeks, params.m):
        raise DimensionError(
            f"controls: expected shape ({weeks}, {params.m}), got {controls.shape}"
        )
    if initial.values.shape != (params.n,):
        raise DimensionError(f"initial state: expected {params.n} variables")
    shocks = draw_shocks(params, weeks, seed) + crisis_shock_matrix(params, initial.week, weeks)
    values = rollout(params.A, params.B, params.c, initial.values, controls, shocks)
    return Trajectory(start_week=initial.week, values=values)


def crisis_flags(trajectory: Trajectory, scenario: Scenario) -> list[tuple[int, str]]:
    """Scripted crises that have occurred within the trajectory's span."""
    return [
        (ev.week, ev.id)
        for ev in scenario.plant.crises
        if trajectory.start_week < ev.week <= trajectory.end_week
    ]


# ---------------------------------------------------------------------------
# Plan-to-controls expansion
# ---------------------------------------------------------------------------

def weekly_controls(plans, action_ids, start_week: int, weeks: int) -> np.ndarray:
    """Expand one or more monthly plans into a (weeks, m) activation matrix.

    An action is active in week w when any plan has an activation covering
    the month w // 4. Overlapping plans OR together (flags stay 0/1).
    """
    if isinstance(plans, ActionPlan):
        plans = [plans]
    column = {aid: k for k, aid in enumerate(action_ids)}
    out = np.zeros((weeks, len(action_ids)))
    for plan in plans:
        if plan is None:
            continue
        for aid, s, e in plan.activations:
            if aid not in column:
                raise DimensionError(f"plan references action {aid!r} outside the catalog")
            w0 = max(s * WEEKS_PER_MONTH, start_week)
            w1 = min((e + 1) * WEEKS_PER_MONTH, start_week + weeks)
            if w1 > w0:
                out[w0 - start_week : w1 - start_week, column[aid]] = 1.0
    return out
