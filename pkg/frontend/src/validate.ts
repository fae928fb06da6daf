/** Client-side pre-validation of draft plans.
 *
 * Mirrors only the documented cheap constraints (window containment,
 * minimum duration, per-action overlap, budget, concurrency) so obvious
 * mistakes surface before any network call. The server stays
 * authoritative; anything accepted here can still be rejected there. */

import type { DraftPlan } from './state.js';
import type { CatalogAction, ControlLimits } from './types.js';

export interface DraftError {
  field: string;
  message: string;
}

export function validateDraft(
  draft: DraftPlan,
  catalog: CatalogAction[],
  control: ControlLimits,
  greenBound = 0.05,
): DraftError[] {
  const errors: DraftError[] = [];
  if (draft.role === 'Green') {
    for (const [variableId, delta] of Object.entries(draft.driftDeltas)) {
      if (Math.abs(delta) > greenBound) {
        errors.push({
          field: variableId,
          message: `drift delta ${delta} exceeds the ${greenBound}/week bound`,
        });
      }
    }
    return errors;
  }

  const own = new Map(catalog.filter((a) => a.actor === draft.role).map((a) => [a.id, a]));
  const windowEnd = draft.startMonth + draft.horizonMonths;
  const byAction = new Map<string, [number, number][]>();

  draft.activations.forEach(([actionId, start, end], index) => {
    const field = `activations[${index}]`;
    const action = own.get(actionId);
    if (!action) {
      errors.push({ field, message: `${actionId} is not in the ${draft.role} catalog` });
      return;
    }
    if (start > end) {
      errors.push({ field, message: 'start month is after end month' });
      return;
    }
    if (start < draft.startMonth || end >= windowEnd) {
      errors.push({
        field,
        message: `[${start}, ${end}] falls outside the window [${draft.startMonth}, ${windowEnd})`,
      });
    }
    if (end - start + 1 < action.min_duration_months) {
      errors.push({
        field,
        message: `${actionId} needs at least ${action.min_duration_months} month(s)`,
      });
    }
    const spans = byAction.get(actionId) ?? [];
    spans.push([start, end]);
    byAction.set(actionId, spans);
  });

  for (const [actionId, spans] of byAction) {
    const sorted = [...spans].sort((a, b) => a[0] - b[0]);
    for (let i = 1; i < sorted.length; i++) {
      if (sorted[i][0] <= sorted[i - 1][1]) {
        errors.push({ field: actionId, message: `overlapping activations of ${actionId}` });
      }
    }
  }

  if (draft.role === 'Blue') {
    let spend = 0;
    for (const [actionId, start, end] of draft.activations) {
      const action = own.get(actionId);
      if (action) spend += (end - start + 1) * action.cost;
    }
    if (spend > control.budget) {
      errors.push({
        field: 'budget',
        message: `plan costs ${spend.toFixed(1)} against a budget of ${control.budget}`,
      });
    }
    for (let month = draft.startMonth; month < windowEnd; month++) {
      const live = draft.activations.filter(([, s, e]) => s <= month && month <= e).length;
      if (live > control.concurrency_cap) {
        errors.push({
          field: 'concurrency',
          message: `${live} concurrent actions in month ${month} exceeds the cap of ${control.concurrency_cap}`,
        });
        break;
      }
    }
  }
  return errors;
}

/** Remaining budget after the draft's committed spend (display only). */
export function draftSpend(draft: DraftPlan, catalog: CatalogAction[]): number {
  const costs = new Map(catalog.map((a) => [a.id, a.cost]));
  let spend = 0;
  for (const [actionId, start, end] of draft.activations) {
    spend += (end - start + 1) * (costs.get(actionId) ?? 0);
  }
  return spend;
}
