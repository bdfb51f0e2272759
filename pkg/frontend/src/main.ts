/** Entry point: wire the store to the renderer against a live API. */

import { ApiClient } from "./api.js";
import { renderApp } from "./render.js";
import { PortfolioStore } from "./store.js";
import type { MetricName } from "./types.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.location.origin;

const api = new ApiClient(baseUrl);
const store = new PortfolioStore(api);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const handlers = {
  onToggle: (controlId: string) => void store.toggleControl(controlId),
  onSort: (metric: MetricName) => void store.sortBy(metric),
  onPlan: (budget: number, objective: "technique_count" | "risk") =>
    void store.requestPlan(budget, objective),
  onAdopt: (controlId: string) => void store.adoptPlanned(controlId),
};

store.subscribe((state) => renderApp(root, state, handlers));
void store.initialize();
