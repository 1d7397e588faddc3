// DOM rendering: pending queue on the left, relation palette on the right,
// metrics strip along the bottom. Re-rendered wholesale on every store change.

import { PendingCard, RelationEntry } from './api.js';
import { AppState, SessionStore, budgetLine, latestMetricsLine, suggestionsFor } from './state.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function neighborList(title: string, rows: { id: number; distance: number; label: string | null }[]) {
  const wrap = el('div', 'neighbors');
  wrap.appendChild(el('div', 'neighbors-title', title));
  for (const row of rows) {
    const tag = row.label ? ` -> ${row.label}` : '';
    wrap.appendChild(el('div', 'neighbor', `#${row.id} (${row.distance.toFixed(2)})${tag}`));
  }
  return wrap;
}

function renderCard(card: PendingCard, state: AppState, store: SessionStore): HTMLElement {
  const box = el('article', 'card');
  box.appendChild(el('h3', 'card-title', `instance #${card.id}`));
  if (card.text) box.appendChild(el('p', 'card-text', card.text));
  if (card.labeled_neighbors.length) {
    box.appendChild(neighborList('nearest labeled', card.labeled_neighbors));
  }
  if (card.unlabeled_neighbors.length) {
    box.appendChild(neighborList('nearest unlabeled', card.unlabeled_neighbors));
  }

  const controls = el('div', 'card-controls');
  const input = el('input', 'name-input');
  input.placeholder = 'relation name';
  const send = el('button', 'send', 'label');
  send.addEventListener('click', () => void store.submitLabel(card.id, input.value));
  input.addEventListener('keydown', (event) => {
    if (event.key === 'Enter') void store.submitLabel(card.id, input.value);
  });
  controls.appendChild(input);
  controls.appendChild(send);
  box.appendChild(controls);

  const chips = el('div', 'chips');
  for (const name of suggestionsFor(card, state.relations)) {
    const chip = el('button', 'chip', name);
    chip.addEventListener('click', () => void store.submitLabel(card.id, name));
    chips.appendChild(chip);
  }
  box.appendChild(chips);

  const error = state.cardErrors[card.id];
  if (error) box.appendChild(el('p', 'card-error', error));
  return box;
}

export function render(root: HTMLElement, state: AppState, store: SessionStore): void {
  root.textContent = '';

  const header = el('header', 'topbar');
  header.appendChild(el('h1', undefined, 'relation annotation'));
  header.appendChild(el('span', 'budget', budgetLine(state.session)));
  if (state.connection === 'retrying') {
    header.appendChild(el('span', 'status status-bad', 'connection lost, retrying'));
  } else if (state.notice) {
    header.appendChild(el('span', 'status', state.notice));
  }
  root.appendChild(header);

  const main = el('main', 'columns');
  const queue = el('section', 'queue');
  if (state.session?.done) {
    queue.appendChild(el('p', 'empty', 'run finished'));
  } else if (state.pending.length === 0) {
    queue.appendChild(el('p', 'empty', 'no cards pending; the engine is training'));
  }
  for (const card of state.pending) queue.appendChild(renderCard(card, state, store));
  main.appendChild(queue);

  main.appendChild(renderPalette(state.relations));
  root.appendChild(main);

  const strip = el('footer', 'metrics');
  strip.appendChild(el('span', undefined, latestMetricsLine(state.metrics)));
  root.appendChild(strip);
}

function renderPalette(relations: RelationEntry[]): HTMLElement {
  const side = el('aside', 'palette');
  side.appendChild(el('h2', undefined, `relations (${relations.length})`));
  for (const entry of relations) {
    side.appendChild(el('div', 'relation', `${entry.name}  · iter ${entry.first_seen}`));
  }
  if (!relations.length) side.appendChild(el('p', 'empty', 'nothing discovered yet'));
  return side;
}
