// Typed client for the engine's annotation API. Payload shapes mirror the
// server exactly; nothing is invented client-side.

export interface NeighborRow {
  id: number;
  distance: number;
  label: string | null;
}

export interface PendingCard {
  id: number;
  text: string | null;
  labeled_neighbors: NeighborRow[];
  unlabeled_neighbors: NeighborRow[];
  suggested: string[];
}

export interface RelationEntry {
  name: string;
  first_seen: number;
}

export interface SessionStatus {
  iteration: number;
  labeled_total: number;
  budget: number;
  discovered: number;
  labeling_stopped: boolean;
  strategy: string;
  dataset: string;
  done: boolean;
  pending: number;
  error: string | null;
}

export type MetricsRow = Record<string, number | string>;

export interface LabelAck {
  status: 'ok' | 'duplicate';
  id: number;
  relation: string;
}

/** Server-side rejection: carries the HTTP status and the reason verbatim. */
export class ApiError extends Error {
  constructor(readonly status: number, reason: string) {
    super(reason);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const reason = typeof body?.error === 'string' ? body.error : `HTTP ${response.status}`;
      throw new ApiError(response.status, reason);
    }
    return body as T;
  }

  getSession(): Promise<SessionStatus> {
    return this.request<SessionStatus>('/api/session');
  }

  async getPending(): Promise<PendingCard[]> {
    const body = await this.request<{ pending: PendingCard[] }>('/api/pending');
    return body.pending;
  }

  async getRelations(): Promise<RelationEntry[]> {
    const body = await this.request<{ relations: RelationEntry[] }>('/api/relations');
    return body.relations;
  }

  async getMetrics(): Promise<MetricsRow[]> {
    const body = await this.request<{ history: MetricsRow[] }>('/api/metrics');
    return body.history;
  }

  postLabel(id: number, relation: string): Promise<LabelAck> {
    return this.request<LabelAck>('/api/label', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ id, relation }),
    });
  }
}
