import type { DecisionRequest, Flag, QueueResponse } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function asApiError(resp: Response): Promise<ApiError> {
  let code = 'unknown_error';
  let message = `HTTP ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.error === 'string') code = body.error;
    if (body && typeof body.message === 'string') message = body.message;
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(resp.status, code, message);
}

export interface QueueQuery {
  status?: string;
  order?: 'created_at' | 'urgency';
  offset?: number;
  limit?: number;
}

/** Thin typed client for the screener's /api/v1 endpoints. */
export class ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  private url(path: string): string {
    return `${this.baseUrl}/api/v1${path}`;
  }

  async queue(query: QueueQuery = {}): Promise<QueueResponse> {
    const params = new URLSearchParams();
    if (query.status) params.set('status', query.status);
    if (query.order) params.set('order', query.order);
    if (query.offset !== undefined) params.set('offset', String(query.offset));
    if (query.limit !== undefined) params.set('limit', String(query.limit));
    const qs = params.toString();
    const resp = await fetch(this.url(`/queue${qs ? `?${qs}` : ''}`));
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }

  async getFlag(id: string): Promise<Flag> {
    const resp = await fetch(this.url(`/flags/${encodeURIComponent(id)}`));
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }

  async submitDecision(id: string, decision: DecisionRequest): Promise<Flag> {
    const resp = await fetch(this.url(`/flags/${encodeURIComponent(id)}/decision`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(decision),
    });
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }

  async health(): Promise<{ status: string; model_version: string }> {
    const resp = await fetch(this.url('/health'));
    if (!resp.ok) throw await asApiError(resp);
    return resp.json();
  }
}
