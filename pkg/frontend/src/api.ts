// Thin client for the engine's query API. The UI consumes exactly
// /api/query and /api/health and adds no retrieval logic of its own.

export interface ChunkPayload {
  chunk_id: string;
  doc_id: string;
  title: string;
  category: string;
  text: string;
  score: number;
  rank: number;
}

export interface QueryResponse {
  answer?: string;
  chunks: ChunkPayload[];
  strategy: string;
  k: number;
  timings_ms: Record<string, number>;
}

export interface HealthResponse {
  status: string;
  num_docs: number;
  num_chunks: number;
  provider: string | null;
  defaults: Record<string, unknown>;
}

export interface ApiError {
  status: number;
  message: string;
  stage?: string;
}

export interface QueryRequest {
  question: string;
  strategy: string;
  k: number;
  generate: boolean;
}

export type QueryOutcome =
  | { kind: "ok"; response: QueryResponse }
  | { kind: "error"; error: ApiError };

export async function postQuery(req: QueryRequest, base = ""): Promise<QueryOutcome> {
  let resp: Response;
  try {
    resp = await fetch(`${base}/api/query`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  } catch (err) {
    return { kind: "error", error: { status: 0, message: `engine unreachable: ${err}` } };
  }
  let body: unknown = null;
  try {
    body = await resp.json();
  } catch {
    body = null;
  }
  if (!resp.ok) {
    const err = (body ?? {}) as { error?: string; stage?: string };
    return {
      kind: "error",
      error: {
        status: resp.status,
        message: err.error ?? `HTTP ${resp.status}`,
        stage: err.stage,
      },
    };
  }
  return { kind: "ok", response: body as QueryResponse };
}

export async function getHealth(base = ""): Promise<HealthResponse | null> {
  try {
    const resp = await fetch(`${base}/api/health`);
    if (!resp.ok) return null;
    return (await resp.json()) as HealthResponse;
  } catch {
    return null;
  }
}
