/** Payload shapes of the pmesii session service (JSON over HTTP). */

export type Role = 'Blue' | 'Red' | 'Green' | 'White';

export interface CatalogAction {
  id: string;
  actor: string;
  cost: number;
  min_duration_months: number;
  description: string;
}

export interface ControlLimits {
  budget: number;
  concurrency_cap: number;
  horizon_months: number;
  replan_period_months: number;
}

export interface SessionState {
  session_id: string;
  mode: string;
  seed: number;
  week: number;
  current_month: number;
  phase: number;
  pending_roles: string[];
  variables: string[];
  variable_labels: string[];
  assessed_state: number[];
  catalog: CatalogAction[];
  control: ControlLimits;
  created_at: string;
  updated_at: string;
  game_end_week?: number;
  game_over?: boolean;
}

/** (action_id, start_month, end_month), both ends inclusive. */
export type Activation = [string, number, number];

export interface PlanBody {
  start_month: number;
  horizon_months: number;
  activations: Activation[];
}

export interface GreenBody {
  drift_deltas: Record<string, number>;
}

export interface SubmitResult {
  accepted: boolean;
  phase: number;
  role: string;
  pending_roles: string[];
  duplicate?: boolean;
}

export interface ForecastPayload {
  phase: number;
  start_week: number;
  variables: string[];
  values: number[][]; // [week][variable]
  predicted_cost: number | null;
}

export interface AdjustmentBody {
  variable_id: string;
  start_week: number;
  end_week: number;
  value?: number | null;
  delta?: number | null;
  rationale?: string;
}

export interface AdjustmentsResult {
  phase: number;
  applied: { variable_id: string; clamped: boolean }[];
  start_week: number;
  values: number[][];
  duplicate?: boolean;
}

export interface AdvanceResult {
  phase: number;
  start_week: number;
  end_week: number;
  boundary_reason: string;
  recalibrated: boolean;
  duplicate?: boolean;
}

export type LedgerKind =
  | 'DETAIL_ACCEPTED'
  | 'PERSUADED_BY_TRACE'
  | 'NOVEL_EFFECT'
  | 'ASSUMPTION_SURFACED'
  | 'COUNTERPOSITION';

export const LEDGER_KINDS: LedgerKind[] = [
  'DETAIL_ACCEPTED',
  'PERSUADED_BY_TRACE',
  'NOVEL_EFFECT',
  'ASSUMPTION_SURFACED',
  'COUNTERPOSITION',
];

export interface LedgerEntryPayload {
  position: number;
  kind: LedgerKind;
  variables: string[];
  rationale: string;
  phase_index: number;
  hash: string;
}

export interface TraceNode {
  variable_id: string;
  coupling: number | null;
  repeat: boolean;
  children: TraceNode[];
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}
