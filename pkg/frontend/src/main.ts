/** Page wiring: role selection, plan entry, forecast/adjust view, ledger.
 *
 * The page polls the state endpoint (phases advance on human timescales)
 * and re-renders whenever week/phase/pending inputs change. All numbers
 * shown come from service payloads via the view-models.
 */

import { ApiError, ConsoleApi } from './api.js';
import { previewAdjustment } from './preview.js';
import {
  ConsoleViewState,
  addActivation,
  draftPayload,
  emptyDraft,
  initialViewState,
  removeActivation,
  setDriftDelta,
  syncWithServer,
} from './state.js';
import type { AdjustmentBody, LedgerKind, Role, SessionState } from './types.js';
import { LEDGER_KINDS } from './types.js';
import { validateDraft } from './validate.js';
import {
  forecastSeries,
  ledgerRows,
  novelEffectFlags,
  stateTable,
  traceRows,
} from './viewmodels.js';
import {
  el,
  renderChart,
  renderErrors,
  renderLedger,
  renderNovelFlags,
  renderStateTable,
  renderTrace,
} from './dom.js';

const POLL_INTERVAL_MS = 3000;

const api = new ConsoleApi('');
let view: ConsoleViewState = initialViewState();
let server: SessionState | null = null;

const root = document.getElementById('app')!;

function banner(message: string, kind: 'info' | 'error' = 'info'): void {
  const box = document.getElementById('banner')!;
  box.textContent = message;
  box.className = `banner ${kind}`;
}

async function guard<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    return await work();
  } catch (err) {
    if (err instanceof ApiError) {
      banner(`${err.status}: ${err.body.detail ?? err.body.error}`, 'error');
      return null;
    }
    throw err;
  }
}

async function createSession(): Promise<void> {
  const created = await guard(() => api.createSession('demo', 'xgame', 11));
  if (!created) return;
  view = { ...view, sessionId: created.session_id };
  await refresh();
}

async function refresh(): Promise<void> {
  if (!view.sessionId) return;
  const state = await guard(() => api.getState(view.sessionId!));
  if (!state) return;
  server = state;
  view = syncWithServer(view, state);
  render();
}

function render(): void {
  if (!server) return;
  root.replaceChildren();
  root.append(
    el('h2', {}, `session ${server.session_id} - week ${server.week}, phase ${server.phase}`),
    el('p', {}, `waiting on: ${server.pending_roles.join(', ') || 'nobody (phase ready)'}`),
    renderStateTable(stateTable(server)),
    renderPlanEntry(server),
    renderForecastControls(),
    renderLedgerControls(),
  );
}

function renderPlanEntry(state: SessionState): HTMLElement {
  const box = el('div', { class: 'plan-entry' }, el('h3', {}, `plan entry (${view.role})`));
  const roleSelect = el('select', { id: 'role' });
  for (const role of ['Blue', 'Red', 'Green', 'White'] as Role[]) {
    const opt = el('option', { value: role }, role);
    if (role === view.role) opt.setAttribute('selected', 'selected');
    roleSelect.append(opt);
  }
  roleSelect.addEventListener('change', () => {
    view = { ...view, role: roleSelect.value as Role, draft: emptyDraft(roleSelect.value as Role, state.current_month, 6) };
    render();
  });
  box.append(roleSelect);

  if (view.role === 'Green') {
    const input = el('input', { type: 'number', step: '0.001', id: 'green-delta' }) as HTMLInputElement;
    const varSelect = el('select', { id: 'green-var' });
    for (const vid of state.variables) varSelect.append(el('option', { value: vid }, vid));
    const setButton = el('button', {}, 'set drift delta');
    setButton.addEventListener('click', () => {
      view = { ...view, draft: setDriftDelta(view.draft, varSelect.value, Number(input.value)) };
      render();
    });
    box.append(varSelect, input, setButton);
  } else if (view.role !== 'White') {
    const actions = state.catalog.filter((a) => a.actor === view.role);
    const actionSelect = el('select', { id: 'action' });
    for (const a of actions) {
      actionSelect.append(el('option', { value: a.id }, `${a.id} (cost ${a.cost}/mo, min ${a.min_duration_months}mo)`));
    }
    const start = el('input', { type: 'number', value: String(state.current_month), id: 'start-month' }) as HTMLInputElement;
    const end = el('input', { type: 'number', value: String(state.current_month + 2), id: 'end-month' }) as HTMLInputElement;
    const add = el('button', {}, 'add activation');
    add.addEventListener('click', () => {
      view = { ...view, draft: addActivation(view.draft, actionSelect.value, Number(start.value), Number(end.value)) };
      render();
    });
    box.append(actionSelect, el('label', {}, 'months '), start, el('span', {}, ' to '), end, add);

    const list = el('ul', { class: 'draft' });
    view.draft.activations.forEach(([aid, s, e], i) => {
      const remove = el('button', {}, 'x');
      remove.addEventListener('click', () => {
        view = { ...view, draft: removeActivation(view.draft, i) };
        render();
      });
      list.append(el('li', {}, `${aid} months ${s}-${e} `, remove));
    });
    box.append(list);
  }

  const errors = server ? validateDraft(view.draft, server.catalog, server.control) : [];
  if (errors.length > 0) box.append(renderErrors(errors));

  const submit = el('button', { id: 'submit-plan' }, `submit ${view.role} input`);
  if (errors.length > 0) submit.setAttribute('disabled', 'disabled');
  submit.addEventListener('click', async () => {
    const result = await guard(() =>
      api.submitPlan(view.sessionId!, view.phase, view.role, draftPayload(view.draft)),
    );
    if (result) {
      banner(`${view.role} input accepted for phase ${result.phase}`);
      await refresh();
    }
  });
  box.append(submit);

  const advance = el('button', { id: 'advance' }, 'advance phase');
  advance.addEventListener('click', async () => {
    const result = await guard(() => api.advance(view.sessionId!));
    if (result) {
      banner(`phase ${result.phase} closed at week ${result.end_week} (${result.boundary_reason})`);
      await refresh();
    }
  });
  box.append(advance);
  return box;
}

function renderForecastControls(): HTMLElement {
  const box = el('div', { class: 'forecast' }, el('h3', {}, 'forecast and assessment'));
  const varSelect = el('select', { id: 'forecast-var' });
  for (const vid of server!.variables) varSelect.append(el('option', { value: vid }, vid));
  const show = el('button', {}, 'load forecast');
  const chartBox = el('div', { id: 'chart-box' });
  show.addEventListener('click', async () => {
    const forecast = await guard(() => api.getForecast(view.sessionId!));
    if (!forecast) return;
    const series = forecastSeries(forecast, varSelect.value);
    chartBox.replaceChildren(renderChart(series));
    const watched = new Set<string>([varSelect.value]);
    chartBox.append(
      el('h4', {}, 'unwatched large movers'),
      renderNovelFlags(novelEffectFlags(forecast, watched, 0.1)),
    );
    const trace = await guard(() => api.getTrace(view.sessionId!, varSelect.value, 2));
    if (trace) {
      chartBox.append(el('h4', {}, 'dependency trace'), renderTrace(traceRows(trace)));
    }
    // White override with local preview
    const adjValue = el('input', { type: 'number', step: '0.01', id: 'adj-value' }) as HTMLInputElement;
    const from = el('input', { type: 'number', value: String(forecast.start_week), id: 'adj-from' }) as HTMLInputElement;
    const to = el('input', { type: 'number', value: String(forecast.start_week + 8), id: 'adj-to' }) as HTMLInputElement;
    const preview = el('button', {}, 'preview override');
    const post = el('button', {}, 'post override');
    preview.addEventListener('click', () => {
      const adj: AdjustmentBody = {
        variable_id: varSelect.value,
        start_week: Number(from.value),
        end_week: Number(to.value),
        value: Number(adjValue.value),
      };
      const shown = previewAdjustment(forecast.values, forecast.start_week, forecast.variables, adj);
      const adjusted = forecastSeries(
        { ...forecast, values: shown.values },
        varSelect.value,
      );
      chartBox.replaceChildren(renderChart(series, adjusted.values));
      banner(shown.clamped ? 'preview: some weeks clamped to [0, 1]' : 'preview applied locally');
    });
    post.addEventListener('click', async () => {
      const adj: AdjustmentBody = {
        variable_id: varSelect.value,
        start_week: Number(from.value),
        end_week: Number(to.value),
        value: Number(adjValue.value),
        rationale: 'console override',
      };
      const applied = await guard(() => api.postAdjustments(view.sessionId!, [adj]));
      if (applied) banner('override applied by the server');
    });
    chartBox.append(el('h4', {}, 'White override'), from, to, adjValue, preview, post);
  });
  box.append(varSelect, show, chartBox);
  return box;
}

function renderLedgerControls(): HTMLElement {
  const box = el('div', { class: 'ledger-view' }, el('h3', {}, 'reconciliation ledger'));
  const kindSelect = el('select', { id: 'ledger-kind' }, el('option', { value: '' }, 'all kinds'));
  for (const kind of LEDGER_KINDS) kindSelect.append(el('option', { value: kind }, kind));
  const listBox = el('div', { id: 'ledger-box' });
  const load = el('button', {}, 'load ledger');
  load.addEventListener('click', async () => {
    const kind = (kindSelect.value || null) as LedgerKind | null;
    const got = await guard(() => api.getLedger(view.sessionId!, kind ?? undefined));
    if (got) listBox.replaceChildren(renderLedger(ledgerRows(got.entries, kind, null)));
  });
  const rationale = el('input', { type: 'text', id: 'ledger-rationale' }) as HTMLInputElement;
  const record = el('button', {}, 'record entry');
  record.addEventListener('click', async () => {
    const kind = (kindSelect.value || 'ASSUMPTION_SURFACED') as LedgerKind;
    const result = await guard(() =>
      api.recordLedger(view.sessionId!, { kind, variables: [], rationale: rationale.value }),
    );
    if (result) banner(`ledger entry ${result.position} recorded`);
  });
  box.append(kindSelect, load, rationale, record, listBox);
  return box;
}

document.getElementById('create')!.addEventListener('click', createSession);
window.setInterval(() => void refresh(), POLL_INTERVAL_MS);
