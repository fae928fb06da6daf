/** Typed client for the session service. Every mutation carries a nonce so
 * retries are idempotent; the server replays the recorded outcome for a
 * nonce it has already seen. */

import type {
  AdjustmentBody,
  AdjustmentsResult,
  AdvanceResult,
  ApiErrorBody,
  ForecastPayload,
  GreenBody,
  LedgerEntryPayload,
  LedgerKind,
  PlanBody,
  Role,
  SessionState,
  SubmitResult,
  TraceNode,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
  }
}

let nonceCounter = 0;

export function freshNonce(): string {
  nonceCounter += 1;
  return `c-${Date.now().toString(36)}-${nonceCounter}`;
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  const text = await resp.text();
  const body = text ? JSON.parse(text) : {};
  if (!resp.ok) {
    throw new ApiError(resp.status, body as ApiErrorBody);
  }
  return body as T;
}

function post(payload: unknown): RequestInit {
  return {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(payload),
  };
}

export class ConsoleApi {
  constructor(private base: string) {}

  createSession(scenario: unknown, mode: string, seed: number): Promise<{ session_id: string }> {
    return request(`${this.base}/sessions`, post({ scenario, mode, seed }));
  }

  getState(sessionId: string): Promise<SessionState> {
    return request(`${this.base}/sessions/${sessionId}/state`);
  }

  submitPlan(
    sessionId: string,
    phase: number,
    role: Role,
    plan: PlanBody | GreenBody,
    nonce?: string,
  ): Promise<SubmitResult> {
    return request(
      `${this.base}/sessions/${sessionId}/phases/${phase}/plans`,
      post({ role, plan, nonce: nonce ?? freshNonce() }),
    );
  }

  getForecast(sessionId: string): Promise<ForecastPayload> {
    return request(`${this.base}/sessions/${sessionId}/forecast`);
  }

  postAdjustments(
    sessionId: string,
    adjustments: AdjustmentBody[],
    nonce?: string,
  ): Promise<AdjustmentsResult> {
    return request(
      `${this.base}/sessions/${sessionId}/assessment/adjustments`,
      post({ adjustments, nonce: nonce ?? freshNonce() }),
    );
  }

  advance(sessionId: string, boundaryWeek?: number, nonce?: string): Promise<AdvanceResult> {
    return request(
      `${this.base}/sessions/${sessionId}/advance`,
      post({ boundary_week: boundaryWeek ?? null, nonce: nonce ?? freshNonce() }),
    );
  }

  getLedger(sessionId: string, kind?: LedgerKind, phase?: number): Promise<{ entries: LedgerEntryPayload[] }> {
    const params = new URLSearchParams();
    if (kind) params.set('kind', kind);
    if (phase !== undefined) params.set('phase', String(phase));
    const query = params.toString();
    return request(`${this.base}/sessions/${sessionId}/ledger${query ? '?' + query : ''}`);
  }

  recordLedger(
    sessionId: string,
    entry: { kind: LedgerKind; variables: string[]; rationale: string; phase_index?: number },
    nonce?: string,
  ): Promise<{ position: number }> {
    return request(
      `${this.base}/sessions/${sessionId}/ledger`,
      post({ ...entry, nonce: nonce ?? freshNonce() }),
    );
  }

  getTrace(sessionId: string, variableId: string, depth: number): Promise<TraceNode> {
    const params = new URLSearchParams({ var: variableId, depth: String(depth) });
    return request(`${this.base}/sessions/${sessionId}/trace?${params}`);
  }
}
