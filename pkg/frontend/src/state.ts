// Session store: everything on screen is reconstructed from the API, so a
// page reload loses nothing. Label submissions go through here so rejections
// and connectivity problems surface in one place.

import { AnnotationApi, ApiError, MetricsRow, PendingCard, RelationEntry, SessionStatus } from './api.js';

export interface AppState {
  session: SessionStatus | null;
  pending: PendingCard[];
  relations: RelationEntry[];
  metrics: MetricsRow[];
  cardErrors: Record<number, string>;
  connection: 'ok' | 'retrying';
  notice: string;
}

type Listener = (state: AppState) => void;

export class SessionStore {
  private state: AppState = {
    session: null,
    pending: [],
    relations: [],
    metrics: [],
    cardErrors: {},
    connection: 'ok',
    notice: '',
  };
  private listeners: Listener[] = [];

  constructor(private readonly api: AnnotationApi) {}

  snapshot(): AppState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Pull every view from the API; the UI holds no other state. */
  async refresh(): Promise<void> {
    try {
      const [session, pending, relations, metrics] = await Promise.all([
        this.api.getSession(),
        this.api.getPending(),
        this.api.getRelations(),
        this.api.getMetrics(),
      ]);
      this.update({ session, pending, relations, metrics, connection: 'ok' });
    } catch {
      this.update({ connection: 'retrying' });
    }
  }

  /**
   * Submit one label. On acceptance the card leaves the queue and the
   * relation palette refreshes; a rejection lands on the card verbatim.
   */
  async submitLabel(id: number, relation: string): Promise<boolean> {
    const name = relation.trim();
    if (!name) {
      this.update({ cardErrors: { ...this.state.cardErrors, [id]: 'name must be non-empty' } });
      return false;
    }
    try {
      await this.api.postLabel(id, name);
    } catch (err) {
      if (err instanceof ApiError) {
        this.update({ cardErrors: { ...this.state.cardErrors, [id]: err.message } });
      } else {
        this.update({ connection: 'retrying', notice: 'network failure, label not sent' });
      }
      return false;
    }
    const cardErrors = { ...this.state.cardErrors };
    delete cardErrors[id];
    this.update({
      pending: this.state.pending.filter((card) => card.id !== id),
      cardErrors,
      notice: `labeled #${id} as "${name}"`,
    });
    await this.refresh();
    return true;
  }
}

/** Relation names to offer on a card: palette first, then the card's own hints. */
export function suggestionsFor(card: PendingCard, relations: RelationEntry[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const name of [...relations.map((r) => r.name), ...card.suggested]) {
    if (name && !seen.has(name)) {
      seen.add(name);
      out.push(name);
    }
  }
  return out;
}

export function budgetLine(session: SessionStatus | null): string {
  if (!session) return 'connecting...';
  const stopped = session.labeling_stopped ? ' (labeling stopped)' : '';
  return `${session.labeled_total} / ${session.budget} labeled, ` +
    `${session.discovered} relations, iteration ${session.iteration}${stopped}`;
}

export function latestMetricsLine(metrics: MetricsRow[]): string {
  const last = metrics[metrics.length - 1];
  if (!last) return 'no scores yet';
  const cell = (key: string) => {
    const value = last[key];
    return typeof value === 'number' ? value.toFixed(3) : '-';
  };
  return `B3 ${cell('b3_f1')} | V ${cell('v_f1')} | ARI ${cell('ari')} | cls ${cell('cls_f1')}`;
}
