import type {
  GraphResponse,
  LabelsResponse,
  PathResponse,
  PhantomRequest,
  RootResponse,
  SessionCreateResponse,
  StatsResponse,
  SuppressionResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Thin fetch client for the vessel service. The UI never computes paths or
 *  suppression sets itself; every optimality answer comes from here. */
export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  createPhantomSession(phantom: PhantomRequest): Promise<SessionCreateResponse> {
    return this.request("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ phantom }),
    });
  }

  graph(sid: string): Promise<GraphResponse> {
    return this.request(`/v1/sessions/${sid}/graph`);
  }

  async meshText(sid: string): Promise<string | null> {
    const res = await fetch(`${this.baseUrl}/v1/sessions/${sid}/mesh`);
    if (!res.ok) return null; // degrade to skeleton-only
    return res.text();
  }

  setRoot(sid: string, node: number, criterion = "shortest_path"): Promise<RootResponse> {
    return this.request(`/v1/sessions/${sid}/root`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ node, criterion }),
    });
  }

  path(sid: string, to: number): Promise<PathResponse> {
    return this.request(`/v1/sessions/${sid}/path?to=${to}`);
  }

  suppression(sid: string, d: number): Promise<SuppressionResponse> {
    return this.request(`/v1/sessions/${sid}/suppression?d=${d}`);
  }

  labels(sid: string): Promise<LabelsResponse> {
    return this.request(`/v1/sessions/${sid}/labels`);
  }

  stats(sid: string): Promise<StatsResponse> {
    return this.request(`/v1/sessions/${sid}/stats`);
  }

  dualRoot(sid: string, a: number, b: number, band: number): Promise<{ candidates: number[] }> {
    return this.request(`/v1/sessions/${sid}/dualroot?a=${a}&b=${b}&band=${band}`);
  }
}
