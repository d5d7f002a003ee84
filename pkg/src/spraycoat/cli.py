"""Command-line entry points: simulate, train, tune, eval, serve, replay.

Every command is reproducible from its flags (and config file) plus the
seed; batch commands work on the core library directly, while `replay`
is a plain HTTP client feeding a recorded stream into a running service.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np
import yaml

from .aggregator import DEFAULT_STOICH_RATIO, read_event_log, write_event_log
from .data import Dataset
from .kernels import default_bank
from .selection import GridSpec, eps_error, linear_baseline, loo_cv, rmsd
from .semkl import Hyperparams, QualityTarget, load_model, predict_batch, save_model, train
from .service import (
    PredictorService,
    QualityLimits,
    StaticParams,
    default_config,
    load_models,
    serve as run_server,
)
from . import simulator as sim

TARGET_CHOICES = [t.value for t in QualityTarget]


def _fail(message: str) -> None:
    raise click.ClickException(message)


@click.group()
def main():
    """Predictive-quality toolkit for thermal spray coating."""


@main.command()
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--epochs", type=int, default=5, show_default=True)
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="labeled dataset CSV")
@click.option("--events-out", type=click.Path(dir_okay=False), help="raw event log (ndjson)")
def simulate(seed, epochs, scenario_path, out, events_out):
    """Generate a synthetic stream and/or labeled dataset."""
    if not out and not events_out:
        _fail("nothing to do: pass --out and/or --events-out")
    if scenario_path:
        scenario = sim.scenario_from_yaml(scenario_path)
        scenario = sim.SimScenario(
            **{**scenario.__dict__, "seed": seed, "epoch_count": epochs}
        )
    else:
        scenario = sim.default_scenario(seed=seed, epoch_count=epochs)
    if events_out:
        events, _ = sim.generate_stream(scenario)
        write_event_log(events, events_out)
        click.echo(f"wrote {len(events)} events to {events_out}")
    if out:
        dataset = sim.generate_dataset(scenario, regressors=sim.DEFAULT_REGRESSORS)
        dataset.to_csv(out)
        click.echo(f"wrote {len(dataset)} labeled epochs to {out}")


def _load_dataset(path: str) -> Dataset:
    try:
        return Dataset.from_csv(path)
    except (OSError, ValueError) as exc:
        _fail(f"{path}: {exc}")


@main.command("train")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Choice(TARGET_CHOICES))
@click.option("--c", "C", type=float, default=100.0, show_default=True)
@click.option("--p", type=float, default=4.0, show_default=True)
@click.option("--epsilon", type=float, default=0.1, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_train(dataset_path, target, C, p, epsilon, out):
    """Fit one per-target model and save it."""
    dataset = _load_dataset(dataset_path)
    qt = QualityTarget(target)
    try:
        X, y = dataset.xy(qt)
    except KeyError as exc:
        _fail(str(exc))
    model = train(X, y, default_bank(), Hyperparams(C=C, p=p, epsilon=epsilon), target=qt)
    save_model(model, out)
    resid = rmsd(y, predict_batch(model, X))
    click.echo(
        f"trained {target}: {len(y)} epochs, {model.iters} iterations, "
        f"train RMSD {resid:.4g}, converged={model.converged}"
    )


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", required=True, type=click.Choice(TARGET_CHOICES))
@click.option("--c-values", help="comma-separated C grid (default 1..1e5, decades)")
@click.option("--p-values", help="comma-separated p grid (default 1..2^15, octaves)")
@click.option("--epsilon", type=float, default=0.1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="RMSD matrix CSV")
def tune(dataset_path, target, c_values, p_values, epsilon, out):
    """Leave-one-out grid search over (C, p); prints the matrix and best cell."""
    dataset = _load_dataset(dataset_path)
    qt = QualityTarget(target)
    try:
        X, y = dataset.xy(qt)
    except KeyError as exc:
        _fail(str(exc))
    kwargs = {"epsilon": epsilon}
    if c_values:
        kwargs["C_values"] = tuple(float(v) for v in c_values.split(","))
    if p_values:
        kwargs["p_values"] = tuple(float(v) for v in p_values.split(","))
    try:
        grid = GridSpec(**kwargs)
    except ValueError as exc:
        _fail(str(exc))
    report = loo_cv(X, y, default_bank(), grid)
    text = report.to_csv(out)
    click.echo(text, nl=False)
    p_best, c_best, r_best = report.best_cell
    click.echo(f"best: p={p_best:g} C={c_best:g} RMSD={r_best:.6g}")
    if report.failures:
        click.echo(f"{len(report.failures)} grid cells failed", err=True)
    if out:
        click.echo(f"wrote matrix to {out}")


@main.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", "test_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--train-dataset", "train_path", type=click.Path(exists=True, dir_okay=False),
              help="training set for the linear baseline row")
@click.option("--out", type=click.Path(dir_okay=False), help="comparison CSV")
def cmd_eval(model_path, test_path, train_path, out):
    """Held-out comparison row: model vs. ordinary least squares."""
    model = load_model(model_path)
    if model.target is None:
        _fail(f"{model_path} records no target")
    test = _load_dataset(test_path)
    try:
        X_test, y_test = test.xy(model.target)
    except KeyError as exc:
        _fail(str(exc))
    f = predict_batch(model, X_test)
    eps = model.hyperparams.epsilon
    rows = [("semkl", rmsd(y_test, f), eps_error(y_test, f, eps))]
    if train_path:
        train_ds = _load_dataset(train_path)
        X_tr, y_tr = train_ds.xy(model.target)
        rows.append(("linear", *linear_baseline(X_tr, y_tr, X_test, y_test, epsilon=eps)))
    lines = ["model,rmsd,eps_error"]
    lines += [f"{name},{r:.6g},{e:.6g}" for name, r, e in rows]
    text = "\n".join(lines) + "\n"
    click.echo(text, nl=False)
    if out:
        Path(out).write_text(text)


def _service_from_config(config_path: str | None) -> PredictorService:
    doc = {}
    if config_path:
        try:
            with open(config_path) as fh:
                doc = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            _fail(f"{config_path}: {exc}")
    models = {}
    if "models_dir" in doc:
        models_dir = Path(doc["models_dir"])
        if not models_dir.is_dir():
            _fail(f"models_dir {models_dir} does not exist")
        models = load_models(models_dir)
    limits = {}
    for name, lim in (doc.get("limits") or {}).items():
        try:
            limits[QualityTarget(name)] = QualityLimits(
                lower=lim.get("lower"), upper=lim.get("upper")
            )
        except ValueError as exc:
            _fail(f"limits.{name}: {exc}")
    overrides = {"limits": limits}
    if "cadence_ms" in doc:
        overrides["cadence_ms"] = int(doc["cadence_ms"])
    if "stale_after_ms" in doc:
        overrides["stale_after_ms"] = float(doc["stale_after_ms"])
    if "stoich_ratio" in doc:
        overrides["stoich_ratio"] = float(doc["stoich_ratio"])
    if "dataset_out" in doc:
        overrides["dataset_out"] = Path(doc["dataset_out"])
    if "statics" in doc:
        overrides["statics"] = StaticParams(**doc["statics"])
    return PredictorService(models=models, config=default_config(**overrides))


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def cmd_serve(config_path, host, port):
    """Run the prediction/alerting HTTP service."""
    service = _service_from_config(config_path)
    if not service.models:
        click.echo("warning: no models loaded; service will report degraded", err=True)
    run_server(service, host=host, port=port)


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--speed", type=float, default=1.0, show_default=True,
              help="time compression factor; 0 replays as fast as possible")
@click.option("--tick-ms", type=int, default=1000, show_default=True,
              help="stream-time interval between prediction ticks")
def replay(log_path, url, speed, tick_ms, _client=None):
    """Feed a recorded event log into a running service, ticking as it goes."""
    import httpx

    if speed < 0:
        _fail("--speed must be >= 0")
    events = read_event_log(log_path)
    events.sort(key=lambda e: (e.t_ms, e.channel))
    client = _client or httpx.Client(base_url=url, timeout=10.0)
    sent = ticks = 0
    next_tick = events[0].t_ms + tick_ms if events else 0
    i = 0
    while i < len(events):
        j = i
        t_batch = events[i].t_ms
        while j < len(events) and events[j].t_ms == t_batch:
            j += 1
        if speed > 0 and i > 0:
            time.sleep((t_batch - events[i - 1].t_ms) / 1000.0 / speed)
        payload = [
            {"channel": e.channel, "t_ms": e.t_ms, "value": e.value, "quality": e.quality}
            for e in events[i:j]
        ]
        r = client.post("/events", json={"events": payload})
        if r.status_code != 200:
            _fail(f"ingestion rejected at t={t_batch}: {r.text}")
        sent += len(payload)
        while next_tick <= t_batch:
            client.post("/tick", json={"t_ms": next_tick})
            ticks += 1
            next_tick += tick_ms
        i = j
    click.echo(f"replayed {sent} events, {ticks} ticks, from {log_path}")


if __name__ == "__main__":
    main()
