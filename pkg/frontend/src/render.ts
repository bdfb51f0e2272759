/**
 * Pure DOM builders. Every numeric text node is the verbatim string form
 * of an API response field; nothing on screen is computed client-side.
 * All interactive elements are native buttons/inputs, so the whole page
 * stays keyboard-operable for free.
 */

import type { UiState } from "./store.js";
import type { ControlRecord, MetricName, PlanResponse, ResidualReport, Summary } from "./types.js";
import { METRIC_NAMES } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) node.append(child);
  return node;
}

/** Verbatim rendering of a response number (null cr shows as a dash). */
export function num(value: number | null): string {
  return value === null ? "-" : String(value);
}

export function renderSummary(summary: Summary): HTMLElement {
  const items: [string, number][] = [
    ["tactics", summary.tactics],
    ["techniques", summary.techniques],
    ["controls", summary.controls],
    ["adversaries", summary.adversaries],
    ["mitigating controls", summary.mitigating_controls],
    ["unmitigated techniques", summary.unmitigated_techniques],
  ];
  return el(
    "dl",
    { class: "summary", "data-testid": "summary" },
    items.flatMap(([label, value]) => [
      el("dt", {}, [label]),
      el("dd", { "data-field": label.replace(/ /g, "_") }, [num(value)]),
    ]),
  );
}

export function renderMetricTable(
  rows: ControlRecord[],
  metric: MetricName,
  selected: ReadonlySet<string>,
  onToggle: (controlId: string) => void,
): HTMLElement {
  const head = el("tr", {}, [
    el("th", {}, ["#"]),
    el("th", {}, ["control"]),
    ...METRIC_NAMES.map((name) =>
      el("th", name === metric ? { class: "sorted" } : {}, [name]),
    ),
    el("th", {}, ["portfolio"]),
  ]);
  const body = rows.map((row, index) =>
    el("tr", { "data-control": row.control_id }, [
      el("td", {}, [String(index + 1)]),
      el("td", { class: "control-id" }, [row.control_id]),
      ...METRIC_NAMES.map((name) =>
        el("td", { "data-metric": name }, [num(row[name])]),
      ),
      el("td", {}, [
        el(
          "button",
          {
            type: "button",
            "data-toggle": row.control_id,
            "aria-pressed": selected.has(row.control_id) ? "true" : "false",
          },
          [selected.has(row.control_id) ? "remove" : "add"],
        ),
      ]),
    ]),
  );
  const table = el("table", { class: "metric-table", "data-testid": "metric-table" }, [
    el("thead", {}, [head]),
    el("tbody", {}, body),
  ]);
  table.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const controlId = target.getAttribute("data-toggle");
    if (controlId) onToggle(controlId);
  });
  return table;
}

export function renderResidual(report: ResidualReport, selected: ReadonlySet<string>): HTMLElement {
  const techniqueList = (ids: string[], kind: string) =>
    el(
      "ul",
      { "data-testid": `residual-${kind}` },
      ids.map((id) => el("li", { "data-technique": id }, [id])),
    );
  return el("section", { class: "residual", "data-testid": "residual" }, [
    el("h3", {}, ["residual coverage"]),
    el("p", {}, [
      "enforced: ",
      el("span", { "data-field": "enforced" }, [[...selected].sort().join(", ") || "(none)"]),
    ]),
    el("dl", {}, [
      el("dt", {}, ["covered techniques"]),
      el("dd", { "data-field": "covered_count" }, [String(report.covered_techniques.length)]),
      el("dt", {}, ["adversaries touched (fraction)"]),
      el("dd", { "data-field": "fa" }, [num(report.fa)]),
      el("dt", {}, ["mean technique coverage per adversary"]),
      el("dd", { "data-field": "aftma" }, [num(report.aftma)]),
      el("dt", {}, ["residual risk"]),
      el("dd", { "data-field": "residual_risk" }, [num(report.residual_risk)]),
      el("dt", {}, ["total risk in scope"]),
      el("dd", { "data-field": "total_risk" }, [num(report.total_risk)]),
    ]),
    el("h4", {}, ["still exposed, mitigable"]),
    techniqueList(report.residual_mitigable, "mitigable"),
    el("h4", {}, ["still exposed, no mapped control"]),
    techniqueList(report.residual_unmitigable, "unmitigable"),
    el("p", { class: "caveat" }, [report.caveat]),
  ]);
}

export function renderPlan(plan: PlanResponse, onAdopt: (controlId: string) => void): HTMLElement {
  const rows = plan.steps.map((step, index) =>
    el("tr", { "data-plan-control": step.control_id }, [
      el("td", {}, [String(index + 1)]),
      el("td", {}, [step.control_id]),
      el("td", { "data-field": "gain" }, [num(step.gain)]),
      el("td", { "data-field": "techniques" }, [num(step.techniques)]),
      el("td", { "data-field": "risk" }, [num(step.risk)]),
      el("td", { "data-field": "adversaries" }, [num(step.adversaries)]),
      el("td", {}, [
        el("button", { type: "button", "data-adopt": step.control_id }, ["adopt"]),
      ]),
    ]),
  );
  const table = el("table", { class: "plan-table", "data-testid": "plan" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["step"]),
        el("th", {}, ["control"]),
        el("th", {}, [`gain (${plan.objective})`]),
        el("th", {}, ["techniques"]),
        el("th", {}, ["risk"]),
        el("th", {}, ["adversaries"]),
        el("th", {}, [""]),
      ]),
    ]),
    el("tbody", {}, rows.length ? rows : [el("tr", {}, [el("td", { colspan: "7" }, ["nothing left to gain"])])]),
  ]);
  table.addEventListener("click", (event) => {
    const controlId = (event.target as HTMLElement).getAttribute("data-adopt");
    if (controlId) onAdopt(controlId);
  });
  return table;
}

export function renderErrorBanner(error: string | null): HTMLElement {
  return el(
    "div",
    {
      class: error ? "banner banner-error" : "banner banner-hidden",
      role: "alert",
      "data-testid": "error-banner",
    },
    error ? [error] : [],
  );
}

/**
 * Static TEC-vs-CR scatter with quadrant shading. Splits are the midpoints
 * of the observed ranges; positioning is presentation, the underlying
 * numbers stay verbatim in data attributes.
 */
export function renderScatter(rows: ControlRecord[], width = 420, height = 300): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", "technique coverage versus control redundancy");
  svg.setAttribute("data-testid", "scatter");
  const points = rows.filter((r) => r.cr !== null);
  if (!points.length) return svg;
  const tecs = points.map((r) => r.tec);
  const crs = points.map((r) => r.cr as number);
  const [tecMin, tecMax] = [Math.min(...tecs), Math.max(...tecs)];
  const [crMin, crMax] = [Math.min(...crs), Math.max(...crs)];
  const sx = (v: number) => (tecMax === tecMin ? width / 2 : ((v - tecMin) / (tecMax - tecMin)) * (width - 20) + 10);
  const sy = (v: number) => (crMax === crMin ? height / 2 : height - (((v - crMin) / (crMax - crMin)) * (height - 20) + 10));

  const shade = (x: number, y: number, w: number, h: number, label: string) => {
    const rect = document.createElementNS(svg.namespaceURI, "rect");
    rect.setAttribute("x", String(x));
    rect.setAttribute("y", String(y));
    rect.setAttribute("width", String(w));
    rect.setAttribute("height", String(h));
    rect.setAttribute("class", `quadrant ${label}`);
    svg.append(rect);
  };
  const midX = sx((tecMin + tecMax) / 2);
  const midY = sy((crMin + crMax) / 2);
  shade(midX, 0, width - midX, midY, "qt1"); // high tec, high cr
  shade(0, 0, midX, midY, "qt2"); // low tec, high cr
  shade(0, midY, midX, height - midY, "qt3"); // low tec, low cr
  shade(midX, midY, width - midX, height - midY, "qt4"); // high tec, low cr

  for (const row of points) {
    const circle = document.createElementNS(svg.namespaceURI, "circle");
    circle.setAttribute("cx", String(sx(row.tec)));
    circle.setAttribute("cy", String(sy(row.cr as number)));
    circle.setAttribute("r", "4");
    circle.setAttribute("data-control", row.control_id);
    circle.setAttribute("data-tec", String(row.tec));
    circle.setAttribute("data-cr", String(row.cr));
    const title = document.createElementNS(svg.namespaceURI, "title");
    title.textContent = `${row.control_id}: tec ${row.tec}, cr ${row.cr}`;
    circle.append(title);
    svg.append(circle);
  }
  return svg;
}

/** Remember which interactive element held focus so a re-render can restore it. */
function focusKey(element: Element | null): string | null {
  if (!element) return null;
  for (const attr of ["data-toggle", "data-adopt", "data-testid"]) {
    const value = element.getAttribute(attr);
    if (value) return `[${attr}="${value}"]`;
  }
  return null;
}

/** Full-page render from one state value; mounted into #app. */
export function renderApp(
  root: HTMLElement,
  state: UiState,
  handlers: {
    onToggle: (controlId: string) => void;
    onSort: (metric: MetricName) => void;
    onPlan: (budget: number, objective: "technique_count" | "risk") => void;
    onAdopt: (controlId: string) => void;
  },
): void {
  const focusSelector = focusKey(document.activeElement);
  root.replaceChildren();
  root.append(renderErrorBanner(state.error));
  if (state.summary) root.append(renderSummary(state.summary));

  const sortSelect = el(
    "select",
    { "data-testid": "sort-select", "aria-label": "sort metric" },
    METRIC_NAMES.map((name) =>
      el("option", name === state.sortMetric ? { value: name, selected: "" } : { value: name }, [name]),
    ),
  );
  sortSelect.addEventListener("change", () => {
    handlers.onSort(sortSelect.value as MetricName);
  });
  root.append(el("label", {}, ["sort by ", sortSelect]));
  root.append(renderMetricTable(state.rows, state.sortMetric, state.selected, handlers.onToggle));
  if (state.rows.length) root.append(renderScatter(state.rows));
  if (state.residual) root.append(renderResidual(state.residual, state.selected));

  const budgetInput = el("input", {
    type: "number",
    min: "1",
    value: String(state.budget),
    "data-testid": "budget-input",
    "aria-label": "plan budget",
  }) as HTMLInputElement;
  const objectiveSelect = el(
    "select",
    { "data-testid": "objective-select", "aria-label": "plan objective" },
    (["technique_count", "risk"] as const).map((o) =>
      el("option", o === state.objective ? { value: o, selected: "" } : { value: o }, [o]),
    ),
  ) as HTMLSelectElement;
  const planButton = el("button", { type: "button", "data-testid": "plan-button" }, ["plan next controls"]);
  planButton.addEventListener("click", () => {
    handlers.onPlan(Number(budgetInput.value), objectiveSelect.value as "technique_count" | "risk");
  });
  root.append(el("div", { class: "plan-controls" }, [budgetInput, objectiveSelect, planButton]));
  if (state.plan) root.append(renderPlan(state.plan, handlers.onAdopt));

  if (focusSelector) {
    const target = root.querySelector(focusSelector);
    if (target instanceof HTMLElement) target.focus();
  }
}
