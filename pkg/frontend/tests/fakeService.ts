import type { Alert, Limits, Prediction, Snapshot, StreamFrame } from "../src/types.js";
import type { FetchFn } from "../src/api.js";
import type { StreamSource } from "../src/store.js";

/**
 * In-memory stand-in for the predictor service, mirroring the HTTP
 * contract the dashboard consumes (same paths, same response shapes,
 * same 422 behavior on bad limit updates). Tests script it directly.
 */
export class FakeService {
  snapshot: Snapshot = emptySnapshot();
  predictions: Prediction[] = [];
  alerts: Alert[] = [];
  limits: Record<string, Limits> = {};
  requests: string[] = [];

  constructor(targets: string[]) {
    for (const t of targets) this.limits[t] = { lower: null, upper: null };
  }

  setChannel(id: string, value: number, opts: Partial<Snapshot["channels"][string]> = {}): void {
    this.snapshot.channels[id] = {
      value,
      t_ms: opts.t_ms ?? 0,
      quality: "good",
      staleness_ms: opts.staleness_ms ?? 0,
      stale: opts.stale ?? false,
      deviating: opts.deviating ?? false,
      ...opts,
    };
  }

  addPrediction(p: Prediction): StreamFrame {
    this.predictions.push(p);
    return { type: "prediction", ...p };
  }

  addAlert(a: Alert): StreamFrame {
    this.alerts.push(a);
    return { type: "alert", ...a };
  }

  /** fetch-compatible entry point handed to the ApiClient. */
  fetch: FetchFn = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    this.requests.push(`${method} ${path.split("?")[0]}`);

    const json = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "content-type": "application/json" },
      });

    if (method === "GET" && path === "/snapshot") return json(200, this.snapshot);
    if (method === "GET" && path.startsWith("/predictions"))
      return json(200, { predictions: this.predictions });
    if (method === "GET" && path === "/alerts") return json(200, { alerts: this.alerts });
    if (method === "GET" && path === "/limits") return json(200, { limits: this.limits });

    const ack = path.match(/^\/alerts\/(\d+)\/ack$/);
    if (method === "POST" && ack) {
      const id = Number(ack[1]);
      const alert = this.alerts.find((a) => a.alert_id === id);
      if (!alert) return json(404, { detail: `no alert ${id}` });
      alert.acknowledged = true;
      return json(200, alert);
    }

    if (method === "PUT" && path === "/limits") {
      const body = JSON.parse(String(init?.body)) as { limits: Record<string, Limits> };
      for (const [target, lim] of Object.entries(body.limits)) {
        if (!(target in this.limits)) {
          return json(422, { detail: `unknown target '${target}'` });
        }
        if (lim.lower !== null && lim.upper !== null && lim.lower >= lim.upper) {
          return json(422, {
            detail: `lower limit ${lim.lower} must be below upper limit ${lim.upper}`,
          });
        }
        this.limits[target] = lim;
      }
      return json(200, { limits: this.limits });
    }

    return json(404, { detail: `no route ${method} ${path}` });
  };
}

export function emptySnapshot(): Snapshot {
  return {
    channels: {},
    derived: {},
    deviations: [],
    epoch: null,
    statics: { stand_off_distance: 200, coating_velocity: 1, powder_feed_rate: 80 },
  };
}

/** Manually driven stand-in for an EventSource. */
export class FakeStream implements StreamSource {
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: (() => void) | null = null;
  closed = false;

  push(frame: unknown): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }

  fail(): void {
    this.onerror?.();
  }

  close(): void {
    this.closed = true;
  }
}
