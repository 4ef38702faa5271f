// Thin typed client for the session service endpoints.  Non-2xx responses
// become ApiError so callers can surface the status and detail verbatim.

import type {
  EditOp,
  FinishResponse,
  MetricsResponse,
  SceneDict,
  SceneListEntry,
  SessionPayload,
  TlxRatings,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function detailOf(body: unknown, fallback: string): string {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    // request-validation errors carry a list of field problems
    return typeof detail === "string" ? detail : JSON.stringify(detail);
  }
  return fallback;
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
    private readonly base = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    const body = await resp.json().catch(() => null);
    if (!resp.ok) {
      throw new ApiError(resp.status, detailOf(body, resp.statusText));
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  listScenes(): Promise<{ scenes: SceneListEntry[] }> {
    return this.request("/api/scenes");
  }

  getScene(sceneId: string): Promise<{ id: string; scene: SceneDict }> {
    return this.request(`/api/scene/${sceneId}`);
  }

  createSession(sceneId: string, participant: string): Promise<SessionPayload> {
    return this.post("/api/session", { scene_id: sceneId, participant });
  }

  postEvent(sessionId: string, op: EditOp, objectId: number): Promise<SessionPayload> {
    return this.post(`/api/session/${sessionId}/event`, { op, object_id: objectId });
  }

  finishSession(sessionId: string, tlx: TlxRatings): Promise<FinishResponse> {
    return this.post(`/api/session/${sessionId}/finish`, tlx);
  }

  metrics(sessionId: string): Promise<MetricsResponse> {
    return this.request(`/api/session/${sessionId}/metrics`);
  }
}
