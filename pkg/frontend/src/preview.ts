/** Local preview of a White adjustment before it is posted.
 *
 * Applies the same rule the server does: replacement values overwrite the
 * week range, deltas add and clamp to [0, 1]. The fidelity tests verify
 * the preview equals the server-applied assessment for the same
 * adjustment, so White sees exactly what submitting will do. */

import type { AdjustmentBody } from './types.js';

export interface PreviewResult {
  values: number[][];
  clamped: boolean;
}

export function previewAdjustment(
  values: number[][],
  startWeek: number,
  variables: string[],
  adj: AdjustmentBody,
): PreviewResult {
  const column = variables.indexOf(adj.variable_id);
  if (column < 0) {
    throw new Error(`unknown variable ${adj.variable_id}`);
  }
  const out = values.map((row) => [...row]);
  const lo = Math.max(adj.start_week, startWeek) - startWeek;
  const hi = Math.min(adj.end_week, startWeek + values.length - 1) - startWeek;
  let clamped = false;
  for (let w = lo; w <= hi; w++) {
    if (adj.value !== undefined && adj.value !== null) {
      out[w][column] = adj.value;
    } else if (adj.delta !== undefined && adj.delta !== null) {
      const raw = out[w][column] + adj.delta;
      const clipped = Math.min(1, Math.max(0, raw));
      if (clipped !== raw) clamped = true;
      out[w][column] = clipped;
    }
  }
  return { values: out, clamped };
}

export function previewAdjustments(
  values: number[][],
  startWeek: number,
  variables: string[],
  adjustments: AdjustmentBody[],
): PreviewResult {
  let current = values;
  let clamped = false;
  for (const adj of adjustments) {
    const step = previewAdjustment(current, startWeek, variables, adj);
    current = step.values;
    clamped = clamped || step.clamped;
  }
  return { values: current, clamped };
}
