/** Wire types mirroring the predictor service API. */

export interface ChannelState {
  value: number | null;
  t_ms: number;
  quality: string;
  staleness_ms: number;
  stale: boolean;
  deviating: boolean;
}

export interface Snapshot {
  channels: Record<string, ChannelState>;
  derived: Record<string, number>;
  deviations: string[];
  epoch: { epoch_id: string; start_ms: number; open: boolean } | null;
  statics: {
    stand_off_distance: number;
    coating_velocity: number;
    powder_feed_rate: number;
  };
}

export interface Prediction {
  target: string;
  value: number;
  t_ms: number;
  epoch_id: string;
  within_limits: boolean;
  latency_ms: number;
  final: boolean;
}

export interface Alert {
  alert_id: number;
  target: string;
  direction: "above_upper" | "below_lower";
  value: number;
  t_ms: number;
  epoch_id: string;
  acknowledged: boolean;
}

export interface Limits {
  lower: number | null;
  upper: number | null;
}

export type LimitsMap = Record<string, Limits>;

export interface Health {
  status: "ok" | "degraded";
  reasons: string[];
  models_loaded: string[];
  events_ingested: number;
  open_epoch: string | null;
  finalized_epochs: number;
}

/** Frames arriving on the server-sent event stream. */
export type StreamFrame =
  | ({ type: "prediction" } & Prediction)
  | ({ type: "alert" } & Alert);
