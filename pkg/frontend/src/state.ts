/** Console view state and draft-plan editing.
 *
 * Drafts are plain immutable values edited locally; nothing touches the
 * server until an explicit submit. Reducer-style helpers return new
 * objects so views can re-render on identity change. */

import type { Activation, GreenBody, LedgerKind, PlanBody, Role, SessionState } from './types.js';

export interface DraftPlan {
  role: Role;
  startMonth: number;
  horizonMonths: number;
  activations: Activation[];
  driftDeltas: Record<string, number>; // Green only
}

export interface ConsoleViewState {
  sessionId: string | null;
  role: Role;
  phase: number;
  draft: DraftPlan;
  forecastCache: { phase: number; values: number[][]; startWeek: number } | null;
  ledgerFilter: { kind: LedgerKind | null; phase: number | null };
}

export function initialViewState(): ConsoleViewState {
  return {
    sessionId: null,
    role: 'Blue',
    phase: 0,
    draft: emptyDraft('Blue', 0, 6),
    forecastCache: null,
    ledgerFilter: { kind: null, phase: null },
  };
}

export function emptyDraft(role: Role, startMonth: number, horizonMonths: number): DraftPlan {
  return { role, startMonth, horizonMonths, activations: [], driftDeltas: {} };
}

export function selectRole(view: ConsoleViewState, role: Role, state: SessionState): ConsoleViewState {
  return {
    ...view,
    role,
    draft: emptyDraft(role, state.current_month, view.draft.horizonMonths),
  };
}

export function syncWithServer(view: ConsoleViewState, state: SessionState): ConsoleViewState {
  const phaseChanged = state.phase !== view.phase;
  return {
    ...view,
    sessionId: state.session_id,
    phase: state.phase,
    draft: phaseChanged ? emptyDraft(view.role, state.current_month, view.draft.horizonMonths) : view.draft,
    forecastCache: phaseChanged ? null : view.forecastCache,
  };
}

export function addActivation(draft: DraftPlan, actionId: string, start: number, end: number): DraftPlan {
  return { ...draft, activations: [...draft.activations, [actionId, start, end]] };
}

export function removeActivation(draft: DraftPlan, index: number): DraftPlan {
  return { ...draft, activations: draft.activations.filter((_, i) => i !== index) };
}

export function setDriftDelta(draft: DraftPlan, variableId: string, delta: number): DraftPlan {
  return { ...draft, driftDeltas: { ...draft.driftDeltas, [variableId]: delta } };
}

export function setLedgerFilter(
  view: ConsoleViewState,
  kind: LedgerKind | null,
  phase: number | null,
): ConsoleViewState {
  return { ...view, ledgerFilter: { kind, phase } };
}

export function cacheForecast(
  view: ConsoleViewState,
  phase: number,
  startWeek: number,
  values: number[][],
): ConsoleViewState {
  return { ...view, forecastCache: { phase, startWeek, values } };
}

/** The exact submission payload for the current draft. */
export function draftPayload(draft: DraftPlan): PlanBody | GreenBody {
  if (draft.role === 'Green') {
    return { drift_deltas: { ...draft.driftDeltas } };
  }
  return {
    start_month: draft.startMonth,
    horizon_months: draft.horizonMonths,
    activations: draft.activations.map((a) => [...a] as Activation),
  };
}
