import { describe, expect, it } from 'vitest';

import { AnnotationApi, ApiError } from '../src/api.js';

type Call = { url: string; init?: RequestInit };

function fakeFetch(routes: Record<string, { status?: number; body: unknown }>) {
  const calls: Call[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const route = routes[url.split('?')[0]];
    if (!route) throw new Error(`unrouted ${url}`);
    return new Response(JSON.stringify(route.body), {
      status: route.status ?? 200,
      headers: { 'content-type': 'application/json' },
    });
  };
  return { fetchFn, calls };
}

describe('AnnotationApi', () => {
  it('fetches the pending queue without reshaping it', async () => {
    const card = {
      id: 7,
      text: 'acme was founded by jane',
      labeled_neighbors: [{ id: 1, distance: 0.4, label: 'founded_by' }],
      unlabeled_neighbors: [{ id: 2, distance: 0.9, label: null }],
      suggested: ['founded_by'],
    };
    const { fetchFn, calls } = fakeFetch({ '/api/pending': { body: { pending: [card] } } });
    const api = new AnnotationApi('', fetchFn);
    const pending = await api.getPending();
    expect(pending).toEqual([card]);
    expect(calls[0].url).toBe('/api/pending');
  });

  it('posts labels as JSON bodies', async () => {
    const { fetchFn, calls } = fakeFetch({
      '/api/label': { body: { status: 'ok', id: 7, relation: 'works_at' } },
    });
    const api = new AnnotationApi('', fetchFn);
    const ack = await api.postLabel(7, 'works_at');
    expect(ack.status).toBe('ok');
    expect(calls[0].init?.method).toBe('POST');
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ id: 7, relation: 'works_at' });
  });

  it('surfaces server rejections verbatim', async () => {
    const { fetchFn } = fakeFetch({
      '/api/label': { status: 409, body: { error: "instance 7 already labeled 'x'" } },
    });
    const api = new AnnotationApi('', fetchFn);
    const err = await api.postLabel(7, 'y').catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).message).toBe("instance 7 already labeled 'x'");
  });

  it('reads session, relations, and metrics from their endpoints', async () => {
    const { fetchFn, calls } = fakeFetch({
      '/api/session': { body: { iteration: 2, labeled_total: 4, budget: 20, discovered: 3,
                               labeling_stopped: false, strategy: 'ours', dataset: 'd',
                               done: false, pending: 4, error: null } },
      '/api/relations': { body: { relations: [{ name: 'a', first_seen: 1 }] } },
      '/api/metrics': { body: { history: [{ iteration: 1, b3_f1: 0.5 }] } },
    });
    const api = new AnnotationApi('', fetchFn);
    expect((await api.getSession()).budget).toBe(20);
    expect(await api.getRelations()).toEqual([{ name: 'a', first_seen: 1 }]);
    expect((await api.getMetrics())[0].b3_f1).toBe(0.5);
    expect(calls.map((c) => c.url)).toEqual(['/api/session', '/api/relations', '/api/metrics']);
  });
});
