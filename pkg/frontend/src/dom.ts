/** DOM rendering of view-models. Values land in the page exactly as the
 * view-model carries them (fixed-precision formatting only). */

import { DEFAULT_GEOMETRY, linePath } from './charts.js';
import type { DraftError } from './validate.js';
import type { ForecastSeries, LedgerRow, NovelFlag, StateRow, TraceRow } from './viewmodels.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === 'class') node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

export function renderStateTable(rows: StateRow[]): HTMLTableElement {
  const table = el('table', { class: 'state-table' });
  table.append(
    el('tr', {}, el('th', {}, 'variable'), el('th', {}, 'label'), el('th', {}, 'assessed')),
  );
  for (const row of rows) {
    table.append(
      el(
        'tr',
        { 'data-var': row.variableId },
        el('td', {}, row.variableId),
        el('td', {}, row.label),
        el('td', { class: 'num' }, row.value.toFixed(3)),
      ),
    );
  }
  return table;
}

export function renderChart(series: ForecastSeries, overlay?: number[]): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${DEFAULT_GEOMETRY.width} ${DEFAULT_GEOMETRY.height}`);
  svg.setAttribute('class', 'chart');
  const base = document.createElementNS(SVG_NS, 'path');
  base.setAttribute('d', linePath(series.weeks, series.values));
  base.setAttribute('class', 'series-base');
  base.setAttribute('fill', 'none');
  svg.append(base);
  if (overlay) {
    const adj = document.createElementNS(SVG_NS, 'path');
    adj.setAttribute('d', linePath(series.weeks, overlay));
    adj.setAttribute('class', 'series-adjusted');
    adj.setAttribute('fill', 'none');
    svg.append(adj);
  }
  return svg;
}

export function renderErrors(errors: DraftError[]): HTMLUListElement {
  const list = el('ul', { class: 'errors' });
  for (const err of errors) {
    list.append(el('li', { 'data-field': err.field }, `${err.field}: ${err.message}`));
  }
  return list;
}

export function renderTrace(rows: TraceRow[]): HTMLUListElement {
  const list = el('ul', { class: 'trace' });
  for (const row of rows) {
    const sign = row.coupling === null ? '' : row.coupling >= 0 ? '+' : '-';
    const strength = row.coupling === null ? '' : ` (${row.coupling.toFixed(3)})`;
    const repeat = row.repeat ? ' [cycle]' : '';
    list.append(
      el(
        'li',
        { style: `margin-left: ${row.depth}em`, 'data-var': row.variableId },
        `${sign} ${row.variableId}${strength}${repeat}`,
      ),
    );
  }
  return list;
}

export function renderNovelFlags(flags: NovelFlag[]): HTMLUListElement {
  const list = el('ul', { class: 'novel-flags' });
  for (const flag of flags) {
    list.append(
      el(
        'li',
        { 'data-var': flag.variableId },
        `${flag.variableId}: net change ${flag.netChange >= 0 ? '+' : ''}${flag.netChange.toFixed(3)}`,
      ),
    );
  }
  return list;
}

export function renderLedger(rows: LedgerRow[]): HTMLTableElement {
  const table = el('table', { class: 'ledger' });
  table.append(
    el('tr', {},
      el('th', {}, '#'), el('th', {}, 'kind'), el('th', {}, 'phase'),
      el('th', {}, 'variables'), el('th', {}, 'rationale')),
  );
  for (const row of rows) {
    table.append(
      el('tr', {},
        el('td', {}, String(row.position)),
        el('td', {}, row.kind),
        el('td', {}, String(row.phase)),
        el('td', {}, row.variables),
        el('td', {}, row.rationale)),
    );
  }
  return table;
}
