/** View-models: what each view displays, as plain data.
 *
 * Every number in a view-model is copied verbatim from a service payload
 * (the console does no simulation or optimization math); the fidelity
 * tests assert that equality directly. The DOM layer renders these
 * without touching the values.
 */

import type {
  ForecastPayload,
  LedgerEntryPayload,
  LedgerKind,
  SessionState,
  TraceNode,
} from './types.js';

export interface StateRow {
  variableId: string;
  label: string;
  value: number;
}

export function stateTable(state: SessionState): StateRow[] {
  return state.variables.map((variableId, i) => ({
    variableId,
    label: state.variable_labels[i],
    value: state.assessed_state[i],
  }));
}

export interface ForecastSeries {
  variableId: string;
  weeks: number[];
  values: number[];
}

export function forecastSeries(forecast: ForecastPayload, variableId: string): ForecastSeries {
  const column = forecast.variables.indexOf(variableId);
  if (column < 0) {
    throw new Error(`unknown variable ${variableId}`);
  }
  return {
    variableId,
    weeks: forecast.values.map((_, w) => forecast.start_week + w),
    values: forecast.values.map((row) => row[column]),
  };
}

/** Unwatched variables whose forecast moves at least `threshold` end to
 * end: flagged for attention, largest movers first. The net change is a
 * display-side filter over payload values. */
export interface NovelFlag {
  variableId: string;
  netChange: number;
}

export function novelEffectFlags(
  forecast: ForecastPayload,
  watchlist: Set<string>,
  threshold: number,
): NovelFlag[] {
  const first = forecast.values[0];
  const last = forecast.values[forecast.values.length - 1];
  const flags: NovelFlag[] = [];
  forecast.variables.forEach((variableId, i) => {
    if (watchlist.has(variableId)) return;
    const net = last[i] - first[i];
    if (Math.abs(net) >= threshold) {
      flags.push({ variableId, netChange: net });
    }
  });
  flags.sort((a, b) => Math.abs(b.netChange) - Math.abs(a.netChange) || a.variableId.localeCompare(b.variableId));
  return flags;
}

export interface TraceRow {
  depth: number;
  variableId: string;
  coupling: number | null;
  repeat: boolean;
}

/** Flatten the dependency tree for an expandable indented list. */
export function traceRows(node: TraceNode, depth = 0): TraceRow[] {
  const rows: TraceRow[] = [
    { depth, variableId: node.variable_id, coupling: node.coupling, repeat: node.repeat },
  ];
  for (const child of node.children) {
    rows.push(...traceRows(child, depth + 1));
  }
  return rows;
}

export interface LedgerRow {
  position: number;
  kind: LedgerKind;
  variables: string;
  rationale: string;
  phase: number;
}

export function ledgerRows(
  entries: LedgerEntryPayload[],
  kind: LedgerKind | null,
  phase: number | null,
): LedgerRow[] {
  return entries
    .filter((e) => (kind === null || e.kind === kind) && (phase === null || e.phase_index === phase))
    .map((e) => ({
      position: e.position,
      kind: e.kind,
      variables: e.variables.join(', '),
      rationale: e.rationale,
      phase: e.phase_index,
    }));
}
