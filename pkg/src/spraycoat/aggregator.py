"""Streaming sensor aggregation: status-driven sampling, deadband storage,
stream alignment, imputation, live views, and epoch feature extraction.

Wire protocol (newline-delimited JSON, one event per line):

    {"channel": "<id>", "t_ms": <int>, "value": <float>, "quality": "good"|"missing"}

The robot status channel carries 1.0 while coating and 0.0 while idle.
Storage follows a deadband rule: the first value of an epoch is always
kept, later values only when they move at least deadband_pct percent of
the channel target away from the last stored value, and the closing value
is always kept so end-of-epoch reconstruction stays bounded.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_NAMES, FeatureVector

STATUS_CHANNEL = "robot_status"
IDLE_INTERVAL_MS = 250
ACTIVE_INTERVAL_MS = 100
DEFAULT_GRID_STEP_MS = 100
DEFAULT_STOICH_RATIO = 5.0  # volumetric oxygen:propane at stoichiometry
DEFAULT_DEVIATION_PCT = 5.0


class AggregationError(RuntimeError):
    """Stream contents violate the aggregation contract."""


@dataclass(frozen=True)
class SensorEvent:
    channel: str
    t_ms: int
    value: float
    quality: str = "good"  # "good" | "missing"

    def to_line(self) -> str:
        return json.dumps(
            {"channel": self.channel, "t_ms": self.t_ms, "value": self.value, "quality": self.quality},
            separators=(",", ":"),
        )

    @staticmethod
    def from_line(line: str) -> "SensorEvent":
        d = json.loads(line)
        return SensorEvent(
            channel=d["channel"],
            t_ms=int(d["t_ms"]),
            value=float(d["value"]),
            quality=d.get("quality", "good"),
        )


def write_event_log(events: list[SensorEvent], path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(ev.to_line() + "\n")


def read_event_log(path) -> list[SensorEvent]:
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(SensorEvent.from_line(line))
    return events


@dataclass(frozen=True)
class ChannelConfig:
    channel_id: str
    unit: str = ""
    target_value: float = 0.0
    deadband_pct: float = 1.0
    role: str = "environment"  # gas_flow | pressure | temperature | robot_status | rate | environment

    def __post_init__(self):
        if not self.deadband_pct > 0:
            raise ValueError(f"deadband_pct must be > 0, got {self.deadband_pct}")

    @property
    def deadband(self) -> float:
        return self.deadband_pct / 100.0 * abs(self.target_value)


@dataclass
class StoredSeries:
    """Deadband-compressed per-channel record of one epoch."""

    channel_id: str
    epoch_start_ms: int
    epoch_end_ms: int
    points: list[tuple[int, float]] = field(default_factory=list)
    rejected_out_of_order: int = 0

    def to_csv(self) -> str:
        lines = ["t_ms,value"]
        lines += [f"{t},{v:.10g}" for t, v in self.points]
        return "\n".join(lines) + "\n"


def deadband_record(
    cfg: ChannelConfig,
    events: list[SensorEvent],
    epoch_start_ms: int,
    epoch_end_ms: int,
) -> StoredSeries:
    """Compress in-epoch events with the deadband rule.

    The final in-epoch value is always stored even when inside the band,
    so the series closes the epoch. Out-of-order events are rejected and
    counted, never raised.
    """
    series = StoredSeries(cfg.channel_id, epoch_start_ms, epoch_end_ms)
    threshold = cfg.deadband
    last_t = None
    last_stored = None
    last_seen: tuple[int, float] | None = None
    for ev in events:
        if ev.quality != "good":
            continue
        if not (epoch_start_ms <= ev.t_ms <= epoch_end_ms):
            continue
        if last_t is not None and ev.t_ms < last_t:
            series.rejected_out_of_order += 1
            continue
        last_t = ev.t_ms
        last_seen = (ev.t_ms, ev.value)
        if last_stored is None or abs(ev.value - last_stored) >= threshold:
            series.points.append((ev.t_ms, ev.value))
            last_stored = ev.value
    if last_seen is not None and (not series.points or series.points[-1][0] != last_seen[0]):
        series.points.append(last_seen)
    return series


def reconstruct(series: StoredSeries, t_ms: int) -> float:
    """Zero-order hold: value of the latest stored point at or before t."""
    if not series.points or t_ms < series.points[0][0]:
        raise AggregationError(
            f"no stored value for {series.channel_id} at t={t_ms} "
            f"(first point at {series.points[0][0] if series.points else 'n/a'})"
        )
    value = series.points[0][1]
    for pt, pv in series.points:
        if pt <= t_ms:
            value = pv
        else:
            break
    return value


@dataclass
class AlignedTable:
    """Channels sampled on a common time grid by zero-order hold."""

    times_ms: np.ndarray
    channels: list[str]
    values: np.ndarray  # shape (len(channels), len(times)); NaN where missing
    present: np.ndarray  # bool mask, same shape
    grid_step_ms: int
    imputation: dict[str, str] = field(default_factory=dict)  # channel -> method

    @property
    def n_rows(self) -> int:
        return int(self.times_ms.shape[0])

    def row_complete(self, k: int) -> bool:
        return bool(self.present[:, k].all())

    def channel_row(self, channel: str) -> np.ndarray:
        return self.values[self.channels.index(channel)]


def synchronize(
    series_set: dict[str, StoredSeries],
    epoch_start_ms: int,
    epoch_end_ms: int,
    grid_step_ms: int = DEFAULT_GRID_STEP_MS,
) -> AlignedTable:
    """Align all channels on a shared grid from epoch start to end inclusive.

    Channels with no stored points become fully missing columns (left for
    imputation); grid instants before a channel's first point are missing.
    """
    times = np.arange(epoch_start_ms, epoch_end_ms + 1, grid_step_ms, dtype=np.int64)
    channels = sorted(series_set)
    values = np.full((len(channels), times.shape[0]), np.nan)
    present = np.zeros((len(channels), times.shape[0]), dtype=bool)
    for ci, ch in enumerate(channels):
        series = series_set[ch]
        if not series.points:
            continue
        pts_t = np.array([p[0] for p in series.points], dtype=np.int64)
        pts_v = np.array([p[1] for p in series.points], dtype=float)
        idx = np.searchsorted(pts_t, times, side="right") - 1
        ok = idx >= 0
        values[ci, ok] = pts_v[idx[ok]]
        present[ci, ok] = True
    return AlignedTable(
        times_ms=times,
        channels=channels,
        values=values,
        present=present,
        grid_step_ms=grid_step_ms,
    )


def impute(
    table: AlignedTable,
    regressors: dict[str, list[str]] | None = None,
    history: "AlignedTable | None" = None,
) -> AlignedTable:
    """Fill missing cells and record the method per channel.

    Scattered gaps take the channel's in-epoch mean of present values.
    A fully missing channel is filled by OLS regression on its configured
    correlated channels, fitted on a reference epoch (history) where both
    sides were present; without configured regressors that is an error
    naming the channel. Present cells are never altered.
    """
    regressors = regressors or {}
    values = table.values.copy()
    imputation = dict(table.imputation)
    for ci, ch in enumerate(table.channels):
        row_present = table.present[ci]
        if row_present.any():
            if not row_present.all():
                values[ci, ~row_present] = values[ci, row_present].mean()
                imputation[ch] = "mean"
            continue
        regs = regressors.get(ch)
        if not regs:
            raise AggregationError(f"channel {ch} fully missing and has no configured regressors")
        if history is None:
            raise AggregationError(f"channel {ch} fully missing and no history epoch to fit on")
        try:
            h_y = history.channel_row(ch)
            h_X = np.column_stack([history.channel_row(r) for r in regs])
        except ValueError as exc:
            raise AggregationError(f"history lacks channels for {ch}: {exc}") from exc
        ok = np.isfinite(h_y) & np.isfinite(h_X).all(axis=1)
        if ok.sum() < len(regs) + 1:
            raise AggregationError(f"not enough history rows to regress {ch}")
        A = np.column_stack([np.ones(int(ok.sum())), h_X[ok]])
        coef, *_ = np.linalg.lstsq(A, h_y[ok], rcond=None)
        cur_X = np.column_stack([table.channel_row(r) for r in regs])
        if not np.isfinite(cur_X).all():
            raise AggregationError(f"regressors for {ch} have missing cells in this epoch")
        values[ci] = np.column_stack([np.ones(table.n_rows), cur_X]) @ coef
        imputation[ch] = "regression"
    return AlignedTable(
        times_ms=table.times_ms,
        channels=table.channels,
        values=values,
        present=np.isfinite(values),
        grid_step_ms=table.grid_step_ms,
        imputation=imputation,
    )


def weighted_average(values: np.ndarray, grid_step_ms: int) -> float:
    """Zero-order-hold time average: the last grid row spans zero duration."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        raise AggregationError("need at least 2 grid rows for a time average")
    return float(v[:-1].mean())


def weighted_std(values: np.ndarray, grid_step_ms: int) -> float:
    """Time-weighted standard deviation under the same hold weights."""
    v = np.asarray(values, dtype=float)
    if v.shape[0] < 2:
        raise AggregationError("need at least 2 grid rows for a time std")
    return float(v[:-1].std())


@dataclass(frozen=True)
class StaticParams:
    """Per-job settings copied into the feature vector unchanged."""

    stand_off_distance: float
    coating_velocity: float
    powder_feed_rate: float


# channel ids expected by feature extraction
CH_ENV_PRESSURE = "env_air_pressure"
CH_ENV_HUMIDITY = "env_humidity"
CH_ENV_TEMPERATURE = "env_temperature"
CH_COOLING_TEMP = "cooling_temperature"
CH_COOLING_FLOW = "cooling_flow"
CH_FUEL_FLOW = "fuel_flow"
CH_OXYGEN_FLOW = "oxygen_flow"
CH_SHROUD_FLOW = "shroud_flow"
CH_FUEL_IN_P = "fuel_inlet_pressure"
CH_FUEL_OUT_P = "fuel_outlet_pressure"
CH_OXYGEN_IN_P = "oxygen_inlet_pressure"
CH_OXYGEN_OUT_P = "oxygen_outlet_pressure"
CH_SHROUD_IN_P = "shroud_inlet_pressure"
CH_SHROUD_OUT_P = "shroud_outlet_pressure"
CH_PROPANE_TEMP = "propane_temperature"
CH_AIRJET_FLOW = "airjet_flow"
CH_PYROMETER = "pyrometer"

SENSOR_CHANNELS = (
    CH_ENV_PRESSURE, CH_ENV_HUMIDITY, CH_ENV_TEMPERATURE,
    CH_COOLING_TEMP, CH_COOLING_FLOW,
    CH_FUEL_FLOW, CH_OXYGEN_FLOW, CH_SHROUD_FLOW,
    CH_FUEL_IN_P, CH_FUEL_OUT_P, CH_OXYGEN_IN_P, CH_OXYGEN_OUT_P,
    CH_SHROUD_IN_P, CH_SHROUD_OUT_P,
    CH_PROPANE_TEMP, CH_AIRJET_FLOW, CH_PYROMETER,
)

_AVG_CHANNEL_BY_FEATURE = {
    "env_air_pressure_avg": CH_ENV_PRESSURE,
    "env_humidity_avg": CH_ENV_HUMIDITY,
    "env_temperature_avg": CH_ENV_TEMPERATURE,
    "cooling_temperature_avg": CH_COOLING_TEMP,
    "cooling_flow_avg": CH_COOLING_FLOW,
    "fuel_flow_avg": CH_FUEL_FLOW,
    "oxygen_flow_avg": CH_OXYGEN_FLOW,
    "shroud_flow_avg": CH_SHROUD_FLOW,
    "fuel_inlet_pressure_avg": CH_FUEL_IN_P,
    "fuel_outlet_pressure_avg": CH_FUEL_OUT_P,
    "oxygen_inlet_pressure_avg": CH_OXYGEN_IN_P,
    "oxygen_outlet_pressure_avg": CH_OXYGEN_OUT_P,
    "shroud_inlet_pressure_avg": CH_SHROUD_IN_P,
    "shroud_outlet_pressure_avg": CH_SHROUD_OUT_P,
    "propane_temperature_avg": CH_PROPANE_TEMP,
    "airjet_flow_avg": CH_AIRJET_FLOW,
}

_STD_CHANNEL_BY_FEATURE = {
    "fuel_flow_std": CH_FUEL_FLOW,
    "oxygen_flow_std": CH_OXYGEN_FLOW,
    "shroud_flow_std": CH_SHROUD_FLOW,
}


def extract_features(
    table: AlignedTable,
    static: StaticParams,
    stoich_ratio: float = DEFAULT_STOICH_RATIO,
    epoch_id: str = "",
) -> FeatureVector:
    """Compute the 27 epoch features from a completed (imputed) table.

    The fuel-oxygen ratio is (oxygen avg / fuel avg) / stoich_ratio, i.e.
    the actual oxidizer-to-fuel ratio normalized by stoichiometry.
    Pyrometer rates are secant slopes start->max and max->end in units/s;
    a flat-at-start trace yields heat_up_rate 0 rather than a division error.
    """
    if table.n_rows < 2:
        raise AggregationError(f"epoch has {table.n_rows} grid rows; need at least 2")
    if not np.isfinite(table.values).all():
        missing = [ch for ci, ch in enumerate(table.channels) if not np.isfinite(table.values[ci]).all()]
        raise AggregationError(f"table has missing cells in {missing}; impute first")

    out: dict[str, float] = {}
    for fname, ch in _AVG_CHANNEL_BY_FEATURE.items():
        out[fname] = weighted_average(table.channel_row(ch), table.grid_step_ms)
    for fname, ch in _STD_CHANNEL_BY_FEATURE.items():
        out[fname] = weighted_std(table.channel_row(ch), table.grid_step_ms)

    out["stand_off_distance"] = static.stand_off_distance
    out["coating_velocity"] = static.coating_velocity
    out["powder_feed_rate"] = static.powder_feed_rate

    fuel_avg = out["fuel_flow_avg"]
    if fuel_avg == 0.0:
        raise AggregationError("fuel flow average is zero; fuel-oxygen ratio undefined")
    out["fuel_oxygen_ratio"] = (out["oxygen_flow_avg"] / fuel_avg) / stoich_ratio

    pyro = table.channel_row(CH_PYROMETER)
    times_s = (table.times_ms - table.times_ms[0]) / 1000.0
    start_temp = float(pyro[0])
    k_max = int(np.argmax(pyro))
    max_temp = float(pyro[k_max])
    end_temp = float(pyro[-1])
    t_max = times_s[k_max]
    t_end = times_s[-1]
    heat_up = (max_temp - start_temp) / t_max if t_max > 0 else 0.0
    cool_down = (end_temp - max_temp) / (t_end - t_max) if t_end > t_max else 0.0
    out["starting_temperature"] = start_temp
    out["max_component_temperature"] = max_temp
    out["heat_up_rate"] = max(heat_up, 0.0)
    out["cool_down_rate"] = min(cool_down, 0.0)

    values = np.array([out[name] for name in FEATURE_NAMES])
    return FeatureVector(values=values, epoch_id=epoch_id)


@dataclass(frozen=True)
class EpochMarker:
    kind: str  # "start" | "end"
    t_ms: int


@dataclass
class SamplingSchedule:
    """Poll instants and epoch boundaries derived from the status stream."""

    idle_polls: list[int] = field(default_factory=list)
    active_samples: list[int] = field(default_factory=list)
    markers: list[EpochMarker] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def epochs(self) -> list[tuple[int, int]]:
        pairs = []
        start = None
        for m in self.markers:
            if m.kind == "start":
                start = m.t_ms
            elif start is not None:
                pairs.append((start, m.t_ms))
                start = None
        return pairs


def sampling_controller(
    status_events: list[tuple[int, bool]],
    t_start_ms: int,
    t_end_ms: int,
    idle_interval_ms: int = IDLE_INTERVAL_MS,
    active_interval_ms: int = ACTIVE_INTERVAL_MS,
    watchdog_ms: int = 5000,
) -> SamplingSchedule:
    """Derive the sampling schedule from coating-status transitions.

    The status channel is polled every idle_interval_ms while idle; within
    one idle poll of a coating start, sampling switches to
    active_interval_ms for all channels, and reverts at the first active
    tick that observes idle again. Status silence beyond the watchdog
    forces idle with a warning.
    """
    events = sorted(status_events)
    schedule = SamplingSchedule()

    def status_at(t: int) -> bool:
        state = False
        last_t = None
        for et, coating in events:
            if et <= t:
                state = coating
                last_t = et
            else:
                break
        if last_t is not None and state and t - last_t > watchdog_ms:
            schedule.warnings.append(f"status silent for {t - last_t} ms at t={t}; assuming idle")
            return False
        return state

    t = t_start_ms
    coating = False
    while t <= t_end_ms:
        now_coating = status_at(t)
        if not coating:
            schedule.idle_polls.append(t)
            if now_coating:
                coating = True
                schedule.markers.append(EpochMarker("start", t))
                schedule.active_samples.append(t)
            t += active_interval_ms if coating else idle_interval_ms
        else:
            if not now_coating:
                coating = False
                schedule.markers.append(EpochMarker("end", t))
                t += idle_interval_ms
            else:
                schedule.active_samples.append(t)
                t += active_interval_ms
    if coating:
        schedule.markers.append(EpochMarker("end", min(t, t_end_ms)))
    return schedule


@dataclass
class ChannelState:
    value: float = math.nan
    t_ms: int = 0
    ingest_wall: float = 0.0
    quality: str = "good"


class LiveView:
    """Latest values, rolling history, and staleness tracking per channel.

    A single logical writer ingests per channel; snapshots copy state so
    readers never observe partial updates.
    """

    def __init__(
        self,
        configs: dict[str, ChannelConfig] | None = None,
        history_len: int = 600,
        stale_after_ms: float = 2000.0,
        deviation_pct: float = DEFAULT_DEVIATION_PCT,
        stoich_ratio: float = DEFAULT_STOICH_RATIO,
    ):
        self.configs = configs or {}
        self.history_len = history_len
        self.stale_after_ms = stale_after_ms
        self.deviation_pct = deviation_pct
        self.stoich_ratio = stoich_ratio
        self._state: dict[str, ChannelState] = {}
        self._history: dict[str, deque] = {}
        self.staleness_samples_ms: deque = deque(maxlen=4096)

    def ingest(self, event: SensorEvent, wall_time: float | None = None) -> None:
        wall = time.monotonic() if wall_time is None else wall_time
        st = self._state.setdefault(event.channel, ChannelState())
        st.t_ms = event.t_ms
        st.ingest_wall = wall
        st.quality = event.quality
        if event.quality == "good":
            st.value = event.value
            self._history.setdefault(event.channel, deque(maxlen=self.history_len)).append(
                (event.t_ms, event.value)
            )

    def history(self, channel: str) -> list[tuple[int, float]]:
        return list(self._history.get(channel, ()))

    def snapshot(self, wall_time: float | None = None) -> dict:
        wall = time.monotonic() if wall_time is None else wall_time
        channels = {}
        deviations = []
        for ch, st in self._state.items():
            staleness_ms = (wall - st.ingest_wall) * 1000.0
            self.staleness_samples_ms.append(staleness_ms)
            cfg = self.configs.get(ch)
            deviating = False
            if (
                cfg is not None
                and cfg.target_value != 0.0
                and st.quality == "good"
                and not math.isnan(st.value)
            ):
                deviating = abs(st.value - cfg.target_value) > (
                    self.deviation_pct / 100.0 * abs(cfg.target_value)
                )
            if deviating:
                deviations.append(ch)
            channels[ch] = {
                "value": None if math.isnan(st.value) else st.value,
                "t_ms": st.t_ms,
                "quality": st.quality,
                "staleness_ms": staleness_ms,
                "stale": staleness_ms > self.stale_after_ms,
                "deviating": deviating,
            }
        derived = {}
        fuel = self._state.get(CH_FUEL_FLOW)
        oxy = self._state.get(CH_OXYGEN_FLOW)
        if fuel and oxy and not math.isnan(fuel.value) and not math.isnan(oxy.value) and fuel.value != 0:
            derived["fuel_oxygen_ratio"] = (oxy.value / fuel.value) / self.stoich_ratio
        return {"channels": channels, "derived": derived, "deviations": deviations}
