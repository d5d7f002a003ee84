import type { ChartView, TileView, ViewModel } from "./store.js";

/** Pure view-model → DOM rendering; no service logic lives here. */

const CHART_W = 320;
const CHART_H = 120;
const PAD = 6;

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderTile(tile: TileView): HTMLElement {
  const classes = ["tile"];
  if (tile.stale) classes.push("stale");
  if (tile.deviating) classes.push("deviating");
  const node = el("div", classes.join(" "));
  node.dataset["channel"] = tile.id;
  node.appendChild(el("div", "tile-label", tile.label));
  node.appendChild(
    el("div", "tile-value", tile.value === null ? "—" : tile.value.toFixed(2)),
  );
  return node;
}

function chartScales(chart: ChartView) {
  const values = chart.points.map((p) => p.value);
  if (chart.band.lower !== null) values.push(chart.band.lower);
  if (chart.band.upper !== null) values.push(chart.band.upper);
  const t0 = chart.points[0]?.t_ms ?? 0;
  const t1 = chart.points[chart.points.length - 1]?.t_ms ?? 1;
  const vMin = values.length ? Math.min(...values) : 0;
  const vMax = values.length ? Math.max(...values) : 1;
  const span = vMax - vMin || 1;
  const tSpan = t1 - t0 || 1;
  return {
    x: (t: number) => PAD + ((t - t0) / tSpan) * (CHART_W - 2 * PAD),
    y: (v: number) => CHART_H - PAD - ((v - vMin) / span) * (CHART_H - 2 * PAD),
  };
}

function renderChart(chart: ChartView): HTMLElement {
  const wrap = el("div", "chart" + (chart.anyOutOfBand ? " has-out-of-band" : ""));
  wrap.dataset["target"] = chart.target;
  wrap.appendChild(el("h3", "chart-title", chart.target.replace(/_/g, " ")));

  const svgNS = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(svgNS, "svg");
  svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
  const { x, y } = chartScales(chart);

  if (chart.band.lower !== null && chart.band.upper !== null) {
    const band = document.createElementNS(svgNS, "rect");
    band.setAttribute("class", "limit-band");
    band.setAttribute("x", String(PAD));
    band.setAttribute("width", String(CHART_W - 2 * PAD));
    band.setAttribute("y", String(y(chart.band.upper)));
    band.setAttribute("height", String(Math.max(0, y(chart.band.lower) - y(chart.band.upper))));
    svg.appendChild(band);
  } else if (chart.band.upper !== null) {
    const line = document.createElementNS(svgNS, "line");
    line.setAttribute("class", "limit-line");
    line.setAttribute("x1", String(PAD));
    line.setAttribute("x2", String(CHART_W - PAD));
    line.setAttribute("y1", String(y(chart.band.upper)));
    line.setAttribute("y2", String(y(chart.band.upper)));
    svg.appendChild(line);
  }

  if (chart.points.length > 1) {
    const poly = document.createElementNS(svgNS, "polyline");
    poly.setAttribute("class", "series");
    poly.setAttribute(
      "points",
      chart.points.map((p) => `${x(p.t_ms).toFixed(1)},${y(p.value).toFixed(1)}`).join(" "),
    );
    svg.appendChild(poly);
  }
  for (const p of chart.points) {
    const dot = document.createElementNS(svgNS, "circle");
    dot.setAttribute("class", p.within ? "point" : "point out-of-band");
    dot.setAttribute("cx", x(p.t_ms).toFixed(1));
    dot.setAttribute("cy", y(p.value).toFixed(1));
    dot.setAttribute("r", p.final ? "4" : "2");
    svg.appendChild(dot);
  }
  wrap.appendChild(svg);
  return wrap;
}

export interface Actions {
  acknowledge(alertId: number): void;
  setLimits(target: string, lower: number | null, upper: number | null): void;
  selectEpoch(epochId: string | null): void;
}

function renderAlerts(view: ViewModel, actions: Actions): HTMLElement {
  const feed = el("section", "alert-feed");
  feed.appendChild(el("h2", undefined, "Alerts"));
  const list = el("ul", "alerts");
  for (const alert of view.alerts) {
    const item = el("li", "alert" + (alert.acknowledged ? " acknowledged" : ""));
    item.dataset["alertId"] = String(alert.alert_id);
    item.appendChild(
      el(
        "span",
        "alert-text",
        `${alert.target} ${alert.direction === "above_upper" ? "above upper" : "below lower"} ` +
          `limit (${alert.value.toFixed(3)}) in ${alert.epoch_id}`,
      ),
    );
    if (!alert.acknowledged) {
      const btn = el("button", "ack", "Acknowledge") as HTMLButtonElement;
      btn.addEventListener("click", () => actions.acknowledge(alert.alert_id));
      item.appendChild(btn);
    } else {
      item.appendChild(el("span", "ack-state", "acknowledged"));
    }
    list.appendChild(item);
  }
  feed.appendChild(list);
  return feed;
}

function renderLimitEditor(view: ViewModel, actions: Actions): HTMLElement {
  const editor = el("section", "limit-editor");
  editor.appendChild(el("h2", undefined, "Quality limits"));
  const form = el("form") as HTMLFormElement;

  const select = el("select") as HTMLSelectElement;
  select.name = "target";
  for (const target of Object.keys(view.limits).sort()) {
    const opt = el("option", undefined, target) as HTMLOptionElement;
    opt.value = target;
    select.appendChild(opt);
  }
  const lower = el("input") as HTMLInputElement;
  lower.name = "lower";
  lower.placeholder = "lower";
  const upper = el("input") as HTMLInputElement;
  upper.name = "upper";
  upper.placeholder = "upper";
  const submit = el("button", undefined, "Apply") as HTMLButtonElement;
  submit.type = "submit";

  form.append(select, lower, upper, submit);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const parse = (s: string) => (s.trim() === "" ? null : Number(s));
    actions.setLimits(select.value, parse(lower.value), parse(upper.value));
  });
  editor.appendChild(form);
  if (view.limitError) {
    editor.appendChild(el("div", "limit-error", view.limitError));
  }
  return editor;
}

export function render(root: HTMLElement, view: ViewModel, actions: Actions): void {
  root.textContent = "";

  if (view.banner) {
    root.appendChild(el("div", "banner", view.banner));
  }

  const header = el("header");
  header.appendChild(el("h1", undefined, "Spray booth monitor"));
  header.appendChild(
    el(
      "div",
      "epoch-state",
      view.epoch
        ? `${view.epoch.epoch_id} ${view.epoch.open ? "(coating)" : "(idle)"}`
        : "no epoch",
    ),
  );
  if (view.lambdaRatio !== null) {
    header.appendChild(el("div", "lambda", `λ ${view.lambdaRatio.toFixed(3)}`));
  }
  root.appendChild(header);

  const tiles = el("section", "tiles");
  for (const tile of view.tiles) tiles.appendChild(renderTile(tile));
  root.appendChild(tiles);

  if (view.statics) {
    const statics = el("section", "statics");
    statics.appendChild(
      el(
        "div",
        "statics-row",
        `stand-off ${view.statics.stand_off_distance} mm · ` +
          `velocity ${view.statics.coating_velocity} · ` +
          `feed ${view.statics.powder_feed_rate}`,
      ),
    );
    root.appendChild(statics);
  }

  const epochBar = el("section", "epoch-selector");
  const select = el("select") as HTMLSelectElement;
  const current = el("option", undefined, "current epoch") as HTMLOptionElement;
  current.value = "";
  select.appendChild(current);
  for (const eid of view.epochs) {
    const opt = el("option", undefined, eid) as HTMLOptionElement;
    opt.value = eid;
    if (view.selectedEpoch === eid) opt.selected = true;
    select.appendChild(opt);
  }
  select.addEventListener("change", () => actions.selectEpoch(select.value || null));
  epochBar.appendChild(select);
  root.appendChild(epochBar);

  const charts = el("section", "charts");
  for (const chart of view.charts) charts.appendChild(renderChart(chart));
  root.appendChild(charts);

  root.appendChild(renderAlerts(view, actions));
  root.appendChild(renderLimitEditor(view, actions));
}
