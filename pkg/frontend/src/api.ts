/** Thin typed client for the four server endpoints. Only annotation
 * writes ever leave the client; the tree itself is never mutated. */

import type { Annotation, RegenReport, TreeDoc } from './types.js';

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  const body = await resp.text();
  if (!resp.ok) {
    let message = `HTTP ${resp.status}`;
    try {
      const doc = JSON.parse(body) as { error?: string };
      if (doc.error) message = doc.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, message);
  }
  return JSON.parse(body) as T;
}

export class ApiClient {
  constructor(readonly base: string) {}

  tree(fearedEventId: string): Promise<TreeDoc> {
    return fetch(`${this.base}/tree/${encodeURIComponent(fearedEventId)}`)
      .then((r) => asJson<TreeDoc>(r));
  }

  report(fearedEventId: string): Promise<RegenReport> {
    return fetch(`${this.base}/report/${encodeURIComponent(fearedEventId)}`)
      .then((r) => asJson<RegenReport>(r));
  }

  putAnnotation(path: string, annotation: Annotation): Promise<void> {
    const encoded = path.split('/').map(encodeURIComponent).join('/');
    return fetch(`${this.base}/annotation/${encoded}`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(annotation),
    }).then((r) => asJson<unknown>(r)).then(() => undefined);
  }

  regenerate(fearedEventId: string): Promise<RegenReport> {
    return fetch(`${this.base}/regenerate`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ feared_event: fearedEventId }),
    }).then((r) => asJson<RegenReport>(r));
  }

  events(): Promise<{ feared_events: { id: string; severity: string | null; label: string }[] }> {
    return fetch(`${this.base}/events`).then((r) => asJson(r));
  }
}
