"""Real-time prediction and alerting service.

Consumes the sensor event stream (HTTP ingestion), tracks coating epochs
via the robot status channel, extracts epoch-so-far features on every
prediction tick, evaluates the per-target trained models against
configured quality limits, and emits edge-triggered alerts. The HTTP API
is the sole boundary consumed by the operator dashboard.

Ticks are explicit (`POST /tick`) so tests and replays are deterministic;
`serve()` additionally runs a wall-clock ticker at the configured cadence.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from . import aggregator as agg
from .aggregator import (
    STATUS_CHANNEL,
    AggregationError,
    AlignedTable,
    ChannelConfig,
    LiveView,
    SensorEvent,
    StaticParams,
    deadband_record,
    extract_features,
    impute,
    synchronize,
)
from .features import FEATURE_NAMES, FeatureVector
from .semkl import QualityTarget, SemklModel, load_model, predict

log = logging.getLogger(__name__)

STATIC_CHANNELS = ("stand_off_distance", "coating_velocity", "powder_feed_rate")

DEFAULT_STATICS = StaticParams(
    stand_off_distance=200.0, coating_velocity=1.0, powder_feed_rate=80.0
)


class LimitError(ValueError):
    """Invalid quality-limit configuration."""


@dataclass(frozen=True)
class QualityLimits:
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and not self.lower < self.upper:
            raise LimitError(f"lower limit {self.lower} must be below upper limit {self.upper}")

    def contains(self, value: float) -> bool:
        if self.lower is not None and value < self.lower:
            return False
        if self.upper is not None and value > self.upper:
            return False
        return True


@dataclass(frozen=True)
class Prediction:
    target: QualityTarget
    value: float
    t_ms: int
    epoch_id: str
    within_limits: bool
    latency_ms: float
    final: bool = False


@dataclass
class AlertEvent:
    alert_id: int
    target: QualityTarget
    direction: str  # "above_upper" | "below_lower"
    value: float
    t_ms: int
    epoch_id: str
    acknowledged: bool = False


@dataclass(frozen=True)
class ServiceConfig:
    channel_configs: dict[str, ChannelConfig] = field(default_factory=dict)
    limits: dict[QualityTarget, QualityLimits] = field(default_factory=dict)
    cadence_ms: int = 1000
    stoich_ratio: float = agg.DEFAULT_STOICH_RATIO
    stale_after_ms: float = 2000.0
    regressors: dict[str, list[str]] = field(default_factory=dict)
    statics: StaticParams = DEFAULT_STATICS
    dataset_out: Path | None = None  # finalized feature rows appended here
    history_len: int = 600


def default_config(**overrides) -> ServiceConfig:
    from .simulator import DEFAULT_REGRESSORS, channel_configs, default_scenario

    base = ServiceConfig(
        channel_configs=channel_configs(default_scenario()),
        regressors={k: list(v) for k, v in DEFAULT_REGRESSORS.items()},
    )
    return replace(base, **overrides) if overrides else base


@dataclass
class EpochState:
    epoch_id: str
    start_ms: int
    statics: StaticParams
    events: dict[str, list[SensorEvent]] = field(default_factory=dict)
    end_ms: int | None = None

    def add(self, event: SensorEvent) -> None:
        self.events.setdefault(event.channel, []).append(event)


class PredictorService:
    """All mutable service state behind one lock.

    Ingestion, ticking, and API reads may run on different threads; every
    public method takes the lock, so ticks see a consistent epoch and
    snapshots never observe a half-applied limit update.
    """

    def __init__(
        self,
        models: dict[QualityTarget, SemklModel] | None = None,
        config: ServiceConfig | None = None,
    ):
        self.config = config or default_config()
        self.models = dict(models or {})
        self.limits: dict[QualityTarget, QualityLimits] = {
            t: QualityLimits() for t in QualityTarget
        }
        self.limits.update(self.config.limits)
        self.live = LiveView(
            configs=self.config.channel_configs,
            history_len=self.config.history_len,
            stale_after_ms=self.config.stale_after_ms,
        )
        self._lock = threading.RLock()
        self._epoch: EpochState | None = None
        self._epoch_counter = itertools.count()
        self._alert_ids = itertools.count(1)
        self._out_of_limits: dict[QualityTarget, bool] = {t: False for t in QualityTarget}
        self._last_table: AlignedTable | None = None
        self._statics = self.config.statics
        self.predictions: list[Prediction] = []
        self.alerts: list[AlertEvent] = []
        self.tick_latencies_ms: list[float] = []
        self.finalized_epochs: list[str] = []
        self.diagnostics: list[str] = []
        self._subscribers: list[tuple[asyncio.Queue, asyncio.AbstractEventLoop]] = []
        self._events_ingested = 0
        self._last_event_wall: float | None = None
        # sensor events at the newest timestamp seen, so an epoch opening at
        # that same instant can adopt samples that arrived just before the
        # status transition in the stream
        self._same_t_buffer: list[SensorEvent] = []

    # ------------------------------------------------------------------ ingest

    def ingest(self, events: list[SensorEvent], wall_time: float | None = None) -> int:
        with self._lock:
            # status transitions act after same-instant sensor samples, so a
            # closing epoch still includes its boundary readings
            ordered = sorted(
                events, key=lambda e: (e.t_ms, 1 if e.channel == STATUS_CHANNEL else 0)
            )
            for ev in ordered:
                self._ingest_one(ev, wall_time)
            return self._events_ingested

    def _ingest_one(self, ev: SensorEvent, wall_time: float | None) -> None:
        self._events_ingested += 1
        self._last_event_wall = time.monotonic() if wall_time is None else wall_time
        if ev.channel == STATUS_CHANNEL:
            self._on_status(ev)
            return
        if ev.channel in STATIC_CHANNELS:
            self._statics = replace(self._statics, **{ev.channel: ev.value})
            if self._epoch is not None:
                self._epoch.statics = self._statics
            return
        self.live.ingest(ev, wall_time=wall_time)
        if self._same_t_buffer and self._same_t_buffer[0].t_ms != ev.t_ms:
            self._same_t_buffer.clear()
        self._same_t_buffer.append(ev)
        if self._epoch is not None and ev.t_ms >= self._epoch.start_ms:
            self._epoch.add(ev)

    def _on_status(self, ev: SensorEvent) -> None:
        coating = ev.value > 0.5
        if coating and self._epoch is None:
            self._epoch = EpochState(
                epoch_id=f"epoch-{next(self._epoch_counter)}",
                start_ms=ev.t_ms,
                statics=self._statics,
            )
            # adopt sensor samples taken at the exact opening instant that
            # were ingested just before this status transition
            for buffered in self._same_t_buffer:
                if buffered.t_ms == ev.t_ms:
                    self._epoch.add(buffered)
        elif not coating and self._epoch is not None:
            self._epoch.end_ms = ev.t_ms
            self.finalize_epoch()

    # ------------------------------------------------------------ featurization

    def _epoch_table(self, epoch: EpochState, t_end_ms: int) -> AlignedTable:
        series_set = {}
        for ch, cfg in self.config.channel_configs.items():
            series_set[ch] = deadband_record(
                cfg, epoch.events.get(ch, []), epoch.start_ms, t_end_ms
            )
        table = synchronize(series_set, epoch.start_ms, t_end_ms)
        return impute(table, regressors=self.config.regressors, history=self._last_table)

    def _epoch_features(self, epoch: EpochState, t_end_ms: int) -> tuple[FeatureVector, AlignedTable]:
        table = self._epoch_table(epoch, t_end_ms)
        fv = extract_features(
            table, epoch.statics, stoich_ratio=self.config.stoich_ratio, epoch_id=epoch.epoch_id
        )
        return fv, table

    # ----------------------------------------------------------------- predict

    def tick(self, t_ms: int | None = None) -> list[Prediction]:
        """One rolling-prediction pass over the epoch so far.

        Returns the predictions emitted; an empty list when no epoch is
        open, no models are loaded, or partial-epoch features are not yet
        extractable (recorded as a diagnostic, never an exception).
        """
        with self._lock:
            if self._epoch is None or not self.models:
                return []
            epoch = self._epoch
            t_end = t_ms if t_ms is not None else self._latest_event_ms(epoch)
            if t_end is None or t_end <= epoch.start_ms:
                return []
            started = time.perf_counter()
            try:
                fv, _ = self._epoch_features(epoch, t_end)
            except AggregationError as exc:
                self.diagnostics.append(f"tick skipped at t={t_end}: {exc}")
                return []
            emitted = self._predict_all(fv, t_end, epoch.epoch_id, started, final=False)
            return emitted

    def _latest_event_ms(self, epoch: EpochState) -> int | None:
        latest = None
        for evs in epoch.events.values():
            if evs and (latest is None or evs[-1].t_ms > latest):
                latest = evs[-1].t_ms
        return latest

    def _predict_all(
        self,
        fv: FeatureVector,
        t_ms: int,
        epoch_id: str,
        started: float,
        final: bool,
    ) -> list[Prediction]:
        emitted = []
        for target, model in self.models.items():
            try:
                value = predict(model, fv.for_group(target.group))
            except Exception as exc:  # noqa: BLE001 - one bad model must not stop the rest
                self.diagnostics.append(f"prediction failed for {target.value}: {exc}")
                continue
            limits = self.limits[target]
            within = limits.contains(value)
            latency_ms = (time.perf_counter() - started) * 1000.0
            pred = Prediction(
                target=target,
                value=value,
                t_ms=t_ms,
                epoch_id=epoch_id,
                within_limits=within,
                latency_ms=latency_ms,
                final=final,
            )
            self.predictions.append(pred)
            emitted.append(pred)
            self._check_alert(pred, limits)
            self._publish({"type": "prediction", **_prediction_dict(pred)})
        if emitted:
            self.tick_latencies_ms.append(max(p.latency_ms for p in emitted))
        return emitted

    def _check_alert(self, pred: Prediction, limits: QualityLimits) -> None:
        was_out = self._out_of_limits[pred.target]
        now_out = not pred.within_limits
        self._out_of_limits[pred.target] = now_out
        if now_out and not was_out:
            if limits.upper is not None and pred.value > limits.upper:
                direction = "above_upper"
            else:
                direction = "below_lower"
            alert = AlertEvent(
                alert_id=next(self._alert_ids),
                target=pred.target,
                direction=direction,
                value=pred.value,
                t_ms=pred.t_ms,
                epoch_id=pred.epoch_id,
            )
            self.alerts.append(alert)
            self._publish({"type": "alert", **_alert_dict(alert)})

    def finalize_epoch(self) -> list[Prediction]:
        """Close the open epoch: full-epoch features, final predictions, and
        one persisted feature row."""
        with self._lock:
            epoch = self._epoch
            if epoch is None:
                return []
            self._epoch = None
            t_end = epoch.end_ms or self._latest_event_ms(epoch) or epoch.start_ms
            started = time.perf_counter()
            try:
                fv, table = self._epoch_features(epoch, t_end)
            except AggregationError as exc:
                self.diagnostics.append(f"finalize failed for {epoch.epoch_id}: {exc}")
                return []
            self._last_table = table
            emitted = self._predict_all(fv, t_end, epoch.epoch_id, started, final=True)
            self.finalized_epochs.append(epoch.epoch_id)
            self._persist_row(fv, table)
            # alert re-arming is per excursion, not per epoch; state carries over
            return emitted

    def _persist_row(self, fv: FeatureVector, table: AlignedTable) -> None:
        path = self.config.dataset_out
        if path is None:
            return
        imputed = ",".join(sorted(table.imputation)) if table.imputation else ""
        line = ",".join(
            [fv.epoch_id, *[repr(float(v)) for v in fv.values], imputed]
        )
        header = ",".join(["epoch_id", *FEATURE_NAMES, "imputed_channels"])
        for attempt in range(2):
            try:
                new = not path.exists() or path.stat().st_size == 0
                with open(path, "a") as fh:
                    if new:
                        fh.write(header + "\n")
                    fh.write(line + "\n")
                return
            except OSError as exc:
                self.diagnostics.append(f"persist attempt {attempt + 1} failed: {exc}")
        dead = path.with_suffix(path.suffix + ".deadletter")
        try:
            with open(dead, "a") as fh:
                fh.write(line + "\n")
        except OSError:
            log.exception("dead-letter write failed for %s", fv.epoch_id)

    # ------------------------------------------------------------------- reads

    def snapshot(self) -> dict:
        with self._lock:
            snap = self.live.snapshot()
            snap["epoch"] = (
                {
                    "epoch_id": self._epoch.epoch_id,
                    "start_ms": self._epoch.start_ms,
                    "open": True,
                }
                if self._epoch is not None
                else None
            )
            snap["statics"] = {
                "stand_off_distance": self._statics.stand_off_distance,
                "coating_velocity": self._statics.coating_velocity,
                "powder_feed_rate": self._statics.powder_feed_rate,
            }
            return snap

    def health(self) -> dict:
        with self._lock:
            reasons = []
            if not self.models:
                reasons.append("no models loaded")
            if self._last_event_wall is not None:
                silence_ms = (time.monotonic() - self._last_event_wall) * 1000.0
                if silence_ms > self.config.stale_after_ms and self._epoch is not None:
                    reasons.append(f"stream stale for {silence_ms:.0f} ms during open epoch")
            return {
                "status": "degraded" if reasons else "ok",
                "reasons": reasons,
                "models_loaded": sorted(t.value for t in self.models),
                "events_ingested": self._events_ingested,
                "open_epoch": self._epoch.epoch_id if self._epoch else None,
                "finalized_epochs": len(self.finalized_epochs),
            }

    def metrics(self) -> dict:
        with self._lock:
            lat = np.asarray(self.tick_latencies_ms, dtype=float)
            stale = np.asarray(self.live.staleness_samples_ms, dtype=float)

            def summary(a: np.ndarray) -> dict:
                if a.size == 0:
                    return {"count": 0}
                return {
                    "count": int(a.size),
                    "mean_ms": float(a.mean()),
                    "p95_ms": float(np.percentile(a, 95)),
                    "max_ms": float(a.max()),
                }

            return {
                "tick_latency": summary(lat),
                "snapshot_staleness": summary(stale),
                "predictions": len(self.predictions),
                "alerts": len(self.alerts),
                "diagnostics": len(self.diagnostics),
            }

    def acknowledge(self, alert_id: int) -> AlertEvent:
        with self._lock:
            for alert in self.alerts:
                if alert.alert_id == alert_id:
                    alert.acknowledged = True
                    return alert
            raise KeyError(alert_id)

    def set_limits(self, target: QualityTarget, limits: QualityLimits) -> None:
        with self._lock:
            self.limits[target] = limits

    # -------------------------------------------------------------- server push

    def subscribe(self, loop: asyncio.AbstractEventLoop) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=1024)
        with self._lock:
            self._subscribers.append((q, loop))
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        with self._lock:
            self._subscribers = [(sq, sl) for sq, sl in self._subscribers if sq is not q]

    def _publish(self, payload: dict) -> None:
        def deliver(q: asyncio.Queue) -> None:
            try:
                q.put_nowait(payload)
            except asyncio.QueueFull:
                self.diagnostics.append("slow stream subscriber; event dropped")

        for q, loop in list(self._subscribers):
            # publishers run on worker threads; hand off via the subscriber's
            # event loop so its pending `await q.get()` actually wakes up
            loop.call_soon_threadsafe(deliver, q)


def _prediction_dict(p: Prediction) -> dict:
    return {
        "target": p.target.value,
        "value": p.value,
        "t_ms": p.t_ms,
        "epoch_id": p.epoch_id,
        "within_limits": p.within_limits,
        "latency_ms": p.latency_ms,
        "final": p.final,
    }


def _alert_dict(a: AlertEvent) -> dict:
    return {
        "alert_id": a.alert_id,
        "target": a.target.value,
        "direction": a.direction,
        "value": a.value,
        "t_ms": a.t_ms,
        "epoch_id": a.epoch_id,
        "acknowledged": a.acknowledged,
    }


# --------------------------------------------------------------------- HTTP API


class EventIn(BaseModel):
    channel: str
    t_ms: int
    value: float
    quality: str = "good"


class EventBatch(BaseModel):
    events: list[EventIn]


class TickIn(BaseModel):
    t_ms: int | None = None


class LimitIn(BaseModel):
    lower: float | None = None
    upper: float | None = None


class LimitsIn(BaseModel):
    limits: dict[str, LimitIn] = Field(default_factory=dict)


def load_models(model_dir: str | Path) -> dict[QualityTarget, SemklModel]:
    """Load every `<target>.json` model file found in a directory."""
    models = {}
    for target in QualityTarget:
        path = Path(model_dir) / f"{target.value}.json"
        if path.exists():
            models[target] = load_model(path)
    return models


def create_app(service: PredictorService) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        ticker = None
        if service.config.cadence_ms > 0:
            ticker = asyncio.create_task(_run_ticker(service))
        yield
        if ticker is not None:
            ticker.cancel()

    app = FastAPI(title="spraycoat predictor", lifespan=lifespan)
    app.state.service = service

    @app.get("/health")
    def health():
        return service.health()

    @app.get("/snapshot")
    def snapshot():
        return service.snapshot()

    @app.get("/channels/{channel}/history")
    def channel_history(channel: str):
        points = service.live.history(channel)
        return {"channel": channel, "points": [{"t_ms": t, "value": v} for t, v in points]}

    @app.post("/events")
    def post_events(batch: EventBatch):
        events = [
            SensorEvent(e.channel, e.t_ms, e.value, quality=e.quality) for e in batch.events
        ]
        total = service.ingest(events)
        return {"accepted": len(events), "total_ingested": total}

    @app.post("/tick")
    def post_tick(body: TickIn | None = None):
        preds = service.tick(t_ms=body.t_ms if body else None)
        return {"emitted": [_prediction_dict(p) for p in preds]}

    @app.get("/predictions")
    def predictions(target: str | None = None, epoch_id: str | None = None, limit: int = 500):
        with service._lock:
            rows = service.predictions
            if target is not None:
                try:
                    t = QualityTarget(target)
                except ValueError:
                    raise HTTPException(status_code=404, detail=f"unknown target {target!r}")
                rows = [p for p in rows if p.target is t]
            if epoch_id is not None:
                rows = [p for p in rows if p.epoch_id == epoch_id]
            return {"predictions": [_prediction_dict(p) for p in rows[-limit:]]}

    @app.get("/alerts")
    def alerts():
        with service._lock:
            return {"alerts": [_alert_dict(a) for a in service.alerts]}

    @app.post("/alerts/{alert_id}/ack")
    def ack_alert(alert_id: int):
        try:
            return _alert_dict(service.acknowledge(alert_id))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no alert {alert_id}")

    @app.get("/limits")
    def get_limits():
        with service._lock:
            return {
                "limits": {
                    t.value: {"lower": lim.lower, "upper": lim.upper}
                    for t, lim in service.limits.items()
                }
            }

    @app.put("/limits")
    def put_limits(body: LimitsIn):
        parsed = {}
        for name, lim in body.limits.items():
            try:
                target = QualityTarget(name)
            except ValueError:
                raise HTTPException(status_code=422, detail=f"unknown target {name!r}")
            try:
                parsed[target] = QualityLimits(lower=lim.lower, upper=lim.upper)
            except LimitError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        for target, lim in parsed.items():
            service.set_limits(target, lim)
        return get_limits()

    @app.get("/models")
    def models():
        with service._lock:
            out = {}
            for target, model in service.models.items():
                out[target.value] = {
                    "target_group": target.group.value,
                    "n_support": int(np.count_nonzero(model.beta)),
                    "n_train": int(model.X_train.shape[0]),
                    "kernels": len(model.bank.specs),
                    "kernel_weights": [float(g) for g in model.weights.gamma],
                    "C": model.hyperparams.C,
                    "p": model.hyperparams.p,
                    "epsilon": model.hyperparams.epsilon,
                    "converged": model.converged,
                }
            return {"models": out}

    @app.get("/metrics")
    def metrics():
        return service.metrics()

    @app.get("/stream")
    async def stream():
        q = service.subscribe(asyncio.get_running_loop())

        async def gen():
            try:
                # initial comment keeps proxies from buffering the stream
                yield ": connected\n\n"
                while True:
                    try:
                        payload = await asyncio.wait_for(q.get(), timeout=15.0)
                    except asyncio.TimeoutError:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(payload)}\n\n"
            finally:
                service.unsubscribe(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    return app


async def _run_ticker(service: PredictorService) -> None:
    cadence = service.config.cadence_ms / 1000.0
    while True:
        await asyncio.sleep(cadence)
        await asyncio.to_thread(service.tick)


def serve(service: PredictorService, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(service), host=host, port=port, log_level="warning")
