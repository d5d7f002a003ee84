import type { Alert, Health, Limits, LimitsMap, Prediction, Snapshot } from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service returned ${status}: ${detail}`);
  }
}

/** Thin typed client over the service HTTP API; all dashboard data flows through here. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = (await res.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  snapshot(): Promise<Snapshot> {
    return this.request<Snapshot>("/snapshot");
  }

  async predictions(limit = 2000): Promise<Prediction[]> {
    const out = await this.request<{ predictions: Prediction[] }>(
      `/predictions?limit=${limit}`,
    );
    return out.predictions;
  }

  async alerts(): Promise<Alert[]> {
    const out = await this.request<{ alerts: Alert[] }>("/alerts");
    return out.alerts;
  }

  acknowledge(alertId: number): Promise<Alert> {
    return this.request<Alert>(`/alerts/${alertId}/ack`, { method: "POST" });
  }

  async limits(): Promise<LimitsMap> {
    const out = await this.request<{ limits: LimitsMap }>("/limits");
    return out.limits;
  }

  async putLimits(target: string, limits: Limits): Promise<LimitsMap> {
    const out = await this.request<{ limits: LimitsMap }>("/limits", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ limits: { [target]: limits } }),
    });
    return out.limits;
  }

  health(): Promise<Health> {
    return this.request<Health>("/health");
  }
}
