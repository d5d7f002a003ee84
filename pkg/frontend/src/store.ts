import { ApiClient, ApiError } from "./api.js";
import type { Alert, Limits, LimitsMap, Prediction, Snapshot, StreamFrame } from "./types.js";

/** The six coating properties charted on the prediction panel. */
export const CHART_TARGETS = [
  "deposition_rate",
  "deposition_efficiency",
  "coating_thickness",
  "coating_roughness",
  "coating_hardness",
  "coating_porosity",
] as const;

/** Key media shown as enlarged live tiles. */
export const TILE_CHANNELS = [
  { id: "fuel_flow", label: "Propane flow" },
  { id: "airjet_flow", label: "Compressed air flow" },
  { id: "oxygen_flow", label: "Oxygen flow" },
  { id: "pyrometer", label: "Pyrometer temperature" },
] as const;

export interface TileView {
  id: string;
  label: string;
  value: number | null;
  stale: boolean;
  deviating: boolean;
}

export interface ChartPoint {
  t_ms: number;
  value: number;
  within: boolean;
  final: boolean;
}

export interface ChartView {
  target: string;
  epoch_id: string | null;
  points: ChartPoint[];
  band: Limits;
  anyOutOfBand: boolean;
}

export interface AlertView extends Alert {}

export interface ViewModel {
  banner: string | null;
  epoch: { epoch_id: string; open: boolean } | null;
  statics: Snapshot["statics"] | null;
  lambdaRatio: number | null;
  tiles: TileView[];
  charts: ChartView[];
  alerts: AlertView[];
  limits: LimitsMap;
  epochs: string[];
  selectedEpoch: string | null;
  limitError: string | null;
}

export interface StreamSource {
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type StreamFactory = (url: string) => StreamSource;

const MAX_POINTS_PER_TARGET = 5000;

/**
 * Holds everything the dashboard renders, populated exclusively from the
 * service API. `load()` rebuilds the full state from REST reads (this is
 * what a page reload does); the event stream only keeps it fresh between
 * loads, so dropping and re-loading always converges to the same view.
 */
export class DashboardStore {
  private snapshot: Snapshot | null = null;
  private predictions: Prediction[] = [];
  private alerts: Alert[] = [];
  private limits: LimitsMap = {};
  private limitError: string | null = null;
  private connection: "connected" | "disconnected" = "disconnected";
  private lastFrameAt = 0;
  private source: StreamSource | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private selectedEpoch: string | null = null;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly options: {
      streamUrl?: string;
      streamFactory?: StreamFactory;
      staleAfterMs?: number;
      reconnectMs?: number;
      now?: () => number;
    } = {},
  ) {}

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  private now(): number {
    return this.options.now ? this.options.now() : Date.now();
  }

  /** Full state rebuild from the API — identical to what a fresh page does. */
  async load(): Promise<void> {
    const [snapshot, predictions, alerts, limits] = await Promise.all([
      this.api.snapshot(),
      this.api.predictions(),
      this.api.alerts(),
      this.api.limits(),
    ]);
    this.snapshot = snapshot;
    this.predictions = predictions;
    this.alerts = alerts;
    this.limits = limits;
    this.notify();
  }

  async refreshSnapshot(): Promise<void> {
    this.snapshot = await this.api.snapshot();
    this.notify();
  }

  // ----------------------------------------------------------- event stream

  connect(): void {
    const factory = this.options.streamFactory;
    const url = this.options.streamUrl;
    if (!factory || !url) return;
    this.source = factory(url);
    this.connection = "connected";
    this.lastFrameAt = this.now();
    this.source.onmessage = (ev) => {
      let frame: StreamFrame;
      try {
        frame = JSON.parse(ev.data) as StreamFrame;
      } catch {
        return; // keepalives and malformed frames are not data
      }
      this.lastFrameAt = this.now();
      this.applyFrame(frame);
    };
    this.source.onerror = () => {
      this.connection = "disconnected";
      this.source?.close();
      this.source = null;
      this.notify();
      const delay = this.options.reconnectMs ?? 2000;
      this.reconnectTimer = setTimeout(() => {
        this.connect();
        // state may have moved while we were away; re-sync in full
        void this.load().catch(() => undefined);
      }, delay);
    };
    this.notify();
  }

  disconnect(): void {
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.source?.close();
    this.source = null;
    this.connection = "disconnected";
  }

  applyFrame(frame: StreamFrame): void {
    if (frame.type === "prediction") {
      const { type: _type, ...pred } = frame;
      this.predictions.push(pred);
      if (this.predictions.length > MAX_POINTS_PER_TARGET * 8) {
        this.predictions.splice(0, this.predictions.length - MAX_POINTS_PER_TARGET * 8);
      }
    } else if (frame.type === "alert") {
      const { type: _type, ...alert } = frame;
      if (!this.alerts.some((a) => a.alert_id === alert.alert_id)) {
        this.alerts.push(alert);
      }
    }
    this.notify();
  }

  // ---------------------------------------------------------------- actions

  async acknowledge(alertId: number): Promise<void> {
    const updated = await this.api.acknowledge(alertId);
    this.alerts = this.alerts.map((a) => (a.alert_id === updated.alert_id ? updated : a));
    this.notify();
  }

  /**
   * Validates client-side before touching the network; a server rejection
   * (e.g. an unknown target) is surfaced through `limitError` as well.
   */
  async setLimits(target: string, limits: Limits): Promise<boolean> {
    if (limits.lower !== null && limits.upper !== null && limits.lower >= limits.upper) {
      this.limitError = `lower limit ${limits.lower} must be below upper limit ${limits.upper}`;
      this.notify();
      return false;
    }
    try {
      this.limits = await this.api.putLimits(target, limits);
      this.limitError = null;
      this.notify();
      return true;
    } catch (err) {
      this.limitError = err instanceof ApiError ? err.detail : String(err);
      this.notify();
      return false;
    }
  }

  selectEpoch(epochId: string | null): void {
    this.selectedEpoch = epochId;
    this.notify();
  }

  // ------------------------------------------------------------------- view

  view(): ViewModel {
    const snap = this.snapshot;
    const epochs = [...new Set(this.predictions.map((p) => p.epoch_id))];
    const currentEpoch =
      this.selectedEpoch ?? snap?.epoch?.epoch_id ?? epochs[epochs.length - 1] ?? null;

    const tiles: TileView[] = TILE_CHANNELS.map(({ id, label }) => {
      const ch = snap?.channels[id];
      return {
        id,
        label,
        value: ch?.value ?? null,
        stale: ch?.stale ?? true,
        deviating: ch?.deviating ?? false,
      };
    });
    if (snap) {
      tiles.push({
        id: "coating_velocity",
        label: "Lathe speed",
        value: snap.statics.coating_velocity,
        stale: false,
        deviating: false,
      });
    }

    const charts: ChartView[] = CHART_TARGETS.map((target) => {
      const band = this.limits[target] ?? { lower: null, upper: null };
      const points = this.predictions
        .filter((p) => p.target === target && (currentEpoch === null || p.epoch_id === currentEpoch))
        .map((p) => ({
          t_ms: p.t_ms,
          value: p.value,
          // rendered coloring comes straight from the service's flag
          within: p.within_limits,
          final: p.final,
        }));
      return {
        target,
        epoch_id: currentEpoch,
        points,
        band,
        anyOutOfBand: points.some((pt) => !pt.within),
      };
    });

    let banner: string | null = null;
    if (this.connection === "disconnected" && this.options.streamFactory) {
      banner = "connection lost — reconnecting";
    } else if (
      this.connection === "connected" &&
      (this.options.staleAfterMs ?? 0) > 0 &&
      this.now() - this.lastFrameAt > (this.options.staleAfterMs ?? 0)
    ) {
      banner = "stream stale — no recent updates";
    }

    return {
      banner,
      epoch: snap?.epoch ? { epoch_id: snap.epoch.epoch_id, open: snap.epoch.open } : null,
      statics: snap?.statics ?? null,
      lambdaRatio: snap?.derived["fuel_oxygen_ratio"] ?? null,
      tiles,
      charts,
      alerts: [...this.alerts].sort((a, b) => b.alert_id - a.alert_id),
      limits: this.limits,
      epochs,
      selectedEpoch: this.selectedEpoch,
      limitError: this.limitError,
    };
  }
}
