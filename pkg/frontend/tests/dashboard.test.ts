import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { render, type Actions } from "../src/render.js";
import { DashboardStore } from "../src/store.js";
import type { Alert, Prediction } from "../src/types.js";
import { FakeService, FakeStream } from "./fakeService.js";

const TARGETS = [
  "deposition_rate",
  "deposition_efficiency",
  "coating_thickness",
  "coating_roughness",
  "coating_hardness",
  "coating_porosity",
];

function pred(over: Partial<Prediction>): Prediction {
  return {
    target: "coating_hardness",
    value: 10.5,
    t_ms: 1000,
    epoch_id: "epoch-0",
    within_limits: true,
    latency_ms: 2.0,
    final: false,
    ...over,
  };
}

function alert(over: Partial<Alert>): Alert {
  return {
    alert_id: 1,
    target: "coating_hardness",
    direction: "above_upper",
    value: 12.4,
    t_ms: 5000,
    epoch_id: "epoch-0",
    acknowledged: false,
    ...over,
  };
}

function setup() {
  const service = new FakeService(TARGETS);
  const stream = new FakeStream();
  const api = new ApiClient("http://svc", service.fetch);
  const store = new DashboardStore(api, {
    streamUrl: "http://svc/stream",
    streamFactory: () => stream,
    staleAfterMs: 5000,
    reconnectMs: 1,
  });
  const root = document.createElement("div");
  const actions: Actions = {
    acknowledge: (id) => void store.acknowledge(id),
    setLimits: (target, lower, upper) => void store.setLimits(target, { lower, upper }),
    selectEpoch: (eid) => store.selectEpoch(eid),
  };
  store.onChange(() => render(root, store.view(), actions));
  return { service, stream, store, root, actions };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("S1: end-to-end excursion scenario", () => {
  it("live tiles, out-of-band highlight, alert feed, and ack round-trip", async () => {
    const { service, stream, store, root } = setup();

    // booth running: media values on the wire, an epoch open
    service.setChannel("fuel_flow", 74.5);
    service.setChannel("airjet_flow", 310.2);
    service.setChannel("oxygen_flow", 357.6);
    service.setChannel("pyrometer", 1975.0);
    service.snapshot.derived["fuel_oxygen_ratio"] = 1.001;
    service.snapshot.epoch = { epoch_id: "epoch-0", start_ms: 0, open: true };
    service.limits["coating_hardness"] = { lower: null, upper: 11.0 };

    store.connect();
    await store.load();

    // --- live tiles reflect the stream state
    const tile = (id: string) => root.querySelector<HTMLElement>(`.tile[data-channel="${id}"]`);
    expect(tile("fuel_flow")?.querySelector(".tile-value")?.textContent).toBe("74.50");
    expect(tile("pyrometer")?.querySelector(".tile-value")?.textContent).toBe("1975.00");
    expect(root.querySelectorAll(".tile").length).toBeGreaterThanOrEqual(5);

    // tile update arrives: snapshot poll brings the new value within a cadence
    service.setChannel("fuel_flow", 91.0, { deviating: true });
    await store.refreshSnapshot();
    expect(tile("fuel_flow")?.querySelector(".tile-value")?.textContent).toBe("91.00");
    expect(tile("fuel_flow")?.classList.contains("deviating")).toBe(true);

    // --- excursion: hardness predictions drift out of the limit band
    stream.push(service.addPrediction(pred({ t_ms: 1000, value: 10.4 })));
    stream.push(
      service.addPrediction(pred({ t_ms: 2000, value: 12.4, within_limits: false })),
    );
    stream.push(service.addPrediction(pred({ t_ms: 3000, value: 12.6, within_limits: false })));

    const hardness = root.querySelector<HTMLElement>('.chart[data-target="coating_hardness"]');
    expect(hardness?.classList.contains("has-out-of-band")).toBe(true);
    expect(hardness?.querySelectorAll(".point.out-of-band").length).toBe(2);
    // in-band chart stays unhighlighted
    const thickness = root.querySelector<HTMLElement>('.chart[data-target="coating_thickness"]');
    expect(thickness?.classList.contains("has-out-of-band")).toBe(false);

    // --- the alert arrives on the stream and shows in the feed
    stream.push(service.addAlert(alert({ alert_id: 1 })));
    const item = root.querySelector<HTMLElement>('.alert[data-alert-id="1"]');
    expect(item).not.toBeNull();
    expect(item?.textContent).toContain("coating_hardness above upper");
    expect(item?.classList.contains("acknowledged")).toBe(false);

    // --- acknowledge round-trips through the service
    item?.querySelector<HTMLButtonElement>("button.ack")?.click();
    await new Promise((resolve) => setTimeout(resolve, 0)); // async ack → re-render settles
    expect(service.alerts[0]?.acknowledged).toBe(true);
    expect(
      root
        .querySelector<HTMLElement>('.alert[data-alert-id="1"]')
        ?.classList.contains("acknowledged"),
    ).toBe(true);
  });

  it("renders six prediction charts with the service's within flag only", async () => {
    const { service, stream, store, root } = setup();
    store.connect();
    await store.load();
    expect(root.querySelectorAll(".chart").length).toBe(6);
    // a value numerically above the band but flagged within by the service
    // must render as within: no client-side recomputation
    service.limits["coating_porosity"] = { lower: null, upper: 1.0 };
    stream.push(
      service.addPrediction(
        pred({ target: "coating_porosity", value: 99.0, within_limits: true }),
      ),
    );
    const porosity = root.querySelector<HTMLElement>('.chart[data-target="coating_porosity"]');
    expect(porosity?.querySelectorAll(".point.out-of-band").length).toBe(0);
  });
});

describe("limit editor", () => {
  it("rejects inverted limits client-side without a network call", async () => {
    const { service, store, root } = setup();
    await store.load();
    const before = service.requests.filter((r) => r.startsWith("PUT")).length;
    const ok = await store.setLimits("coating_hardness", { lower: 15, upper: 9 });
    expect(ok).toBe(false);
    expect(service.requests.filter((r) => r.startsWith("PUT")).length).toBe(before);
    expect(root.querySelector(".limit-error")?.textContent).toContain("must be below");
  });

  it("surfaces a server rejection", async () => {
    const { store, root } = setup();
    await store.load();
    const ok = await store.setLimits("not_a_target", { lower: null, upper: 1 });
    expect(ok).toBe(false);
    expect(root.querySelector(".limit-error")?.textContent).toContain("unknown target");
  });

  it("applies valid limits and redraws the band", async () => {
    const { service, stream, store, root } = setup();
    await store.load();
    store.connect();
    const ok = await store.setLimits("coating_hardness", { lower: 9, upper: 12 });
    expect(ok).toBe(true);
    expect(service.limits["coating_hardness"]).toEqual({ lower: 9, upper: 12 });
    stream.push(service.addPrediction(pred({ value: 10 })));
    stream.push(service.addPrediction(pred({ t_ms: 2000, value: 11 })));
    const band = root.querySelector('.chart[data-target="coating_hardness"] .limit-band');
    expect(band).not.toBeNull();
  });
});

describe("connection health", () => {
  it("shows a banner on stream loss and recovers by reloading", async () => {
    const { stream, store, root } = setup();
    store.connect();
    await store.load();
    expect(root.querySelector(".banner")).toBeNull();

    stream.fail();
    expect(root.querySelector(".banner")?.textContent).toContain("connection lost");

    // reconnect timer fires, the store reconnects and re-syncs
    await new Promise((resolve) => setTimeout(resolve, 10));
    expect(root.querySelector(".banner")).toBeNull();
  });

  it("marks a silent stream as stale", async () => {
    let clock = 0;
    const service = new FakeService(TARGETS);
    const stream = new FakeStream();
    const store = new DashboardStore(new ApiClient("http://svc", service.fetch), {
      streamUrl: "http://svc/stream",
      streamFactory: () => stream,
      staleAfterMs: 5000,
      now: () => clock,
    });
    store.connect();
    await store.load();
    expect(store.view().banner).toBeNull();
    clock = 6000;
    expect(store.view().banner).toContain("stale");
    stream.push(service.addPrediction(pred({})));
    expect(store.view().banner).toBeNull();
  });
});
