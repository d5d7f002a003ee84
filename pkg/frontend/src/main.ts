import { ApiClient } from "./api.js";
import { render, type Actions } from "./render.js";
import { DashboardStore, type StreamSource } from "./store.js";

function eventSourceStream(url: string): StreamSource {
  const es = new EventSource(url);
  const source: StreamSource = {
    onmessage: null,
    onerror: null,
    close: () => es.close(),
  };
  es.onmessage = (ev) => source.onmessage?.({ data: String(ev.data) });
  es.onerror = () => source.onerror?.();
  return source;
}

/** Browser entry point: wires the store to the real service and the DOM. */
export function start(baseUrl = "", rootId = "app"): DashboardStore {
  const root = document.getElementById(rootId);
  if (!root) throw new Error(`missing #${rootId} mount point`);

  const api = new ApiClient(baseUrl);
  const store = new DashboardStore(api, {
    streamUrl: `${baseUrl}/stream`,
    streamFactory: eventSourceStream,
    staleAfterMs: 5000,
    reconnectMs: 2000,
  });

  const actions: Actions = {
    acknowledge: (id) => void store.acknowledge(id),
    setLimits: (target, lower, upper) => void store.setLimits(target, { lower, upper }),
    selectEpoch: (eid) => store.selectEpoch(eid),
  };

  const repaint = () => render(root, store.view(), actions);
  store.onChange(repaint);
  store.connect();
  void store.load();
  // snapshot tiles are REST-served; poll at the service cadence so tiles
  // stay no more than a second behind the stream
  setInterval(() => void store.refreshSnapshot().catch(() => undefined), 1000);
  setInterval(repaint, 1000); // re-evaluates the stale banner
  return store;
}

declare global {
  interface Window {
    spraycoatStart: typeof start;
  }
}

if (typeof window !== "undefined") {
  window.spraycoatStart = start;
}
