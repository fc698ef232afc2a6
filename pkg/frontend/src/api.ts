// Thin typed client over the service's /api endpoints. The fetch
// implementation is injectable so the logic is testable without a browser.

import type {
  DocumentOut,
  DocumentSummary,
  LabelSubmission,
  MatchResult,
  PairAssignment,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private fetchFn: FetchLike = (...args) => globalThis.fetch(...args)) {}

  private async get<T>(url: string): Promise<T> {
    const res = await this.fetchFn(url);
    if (!res.ok) throw new ApiError(res.status, `GET ${url} -> ${res.status}`);
    return (await res.json()) as T;
  }

  /** Next unrated pair for this judge, or null when the queue is done (204). */
  async nextPair(judge: string): Promise<PairAssignment | null> {
    const res = await this.fetchFn(`/api/pairs/next?judge=${encodeURIComponent(judge)}`);
    if (res.status === 204) return null;
    if (!res.ok) throw new ApiError(res.status, `next pair -> ${res.status}`);
    return (await res.json()) as PairAssignment;
  }

  async submitLabel(label: LabelSubmission): Promise<void> {
    const res = await this.fetchFn('/api/labels', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(label),
    });
    if (res.status !== 201) throw new ApiError(res.status, `label -> ${res.status}`);
  }

  matches(aId: string, k: number): Promise<MatchResult[]> {
    return this.get<MatchResult[]>(`/api/match/${encodeURIComponent(aId)}?k=${k}`);
  }

  document(id: string): Promise<DocumentOut> {
    return this.get<DocumentOut>(`/api/docs/${encodeURIComponent(id)}`);
  }

  listDocuments(side: 'a' | 'b'): Promise<DocumentSummary[]> {
    return this.get<DocumentSummary[]>(`/api/documents?side=${side}`);
  }
}
