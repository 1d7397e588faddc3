import { AnnotationApi } from './api.js';
import { SessionStore } from './state.js';
import { render } from './view.js';

const POLL_MS = 1500;

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const store = new SessionStore(new AnnotationApi());
store.subscribe((state) => render(root, state, store));

async function poll(): Promise<void> {
  await store.refresh();
  const session = store.snapshot().session;
  if (!session?.done) setTimeout(() => void poll(), POLL_MS);
}

void poll();
