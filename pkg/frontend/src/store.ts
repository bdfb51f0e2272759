/**
 * Portfolio/session state for the single-page app.
 *
 * The store is the only mutable thing in the UI. Every async action tags
 * its request with a sequence number per channel; a response is applied
 * only if it is still the newest request on that channel, so slow
 * responses can never clobber fresh state. A failed toggle reverts the
 * selection and keeps the previous report.
 */

import type { Api } from "./api.js";
import type {
  ControlRecord,
  MetricName,
  Objective,
  PlanResponse,
  PortfolioDoc,
  ResidualReport,
  Summary,
} from "./types.js";

export interface UiState {
  summary: Summary | null;
  sortMetric: MetricName;
  topN: number;
  rows: ControlRecord[];
  selected: ReadonlySet<string>;
  adversaryFilter: string[] | null;
  residual: ResidualReport | null;
  plan: PlanResponse | null;
  budget: number;
  objective: Objective;
  error: string | null;
}

type Listener = (state: UiState) => void;
type Channel = "controls" | "evaluate" | "plan";

export class PortfolioStore {
  private state: UiState = {
    summary: null,
    sortMetric: "tec",
    topN: 20,
    rows: [],
    selected: new Set<string>(),
    adversaryFilter: null,
    residual: null,
    plan: null,
    budget: 3,
    objective: "technique_count",
    error: null,
  };

  private listeners: Listener[] = [];
  private sequence: Record<Channel, number> = { controls: 0, evaluate: 0, plan: 0 };

  constructor(private readonly api: Api) {}

  getState(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private set(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  private begin(channel: Channel): number {
    this.sequence[channel] += 1;
    return this.sequence[channel];
  }

  private isCurrent(channel: Channel, ticket: number): boolean {
    return this.sequence[channel] === ticket;
  }

  private portfolioDoc(selected: ReadonlySet<string>): PortfolioDoc {
    return {
      enforced: [...selected].sort(),
      adversary_filter: this.state.adversaryFilter,
    };
  }

  async initialize(): Promise<void> {
    try {
      const summary = await this.api.getSummary();
      this.set({ summary, error: null });
    } catch (err) {
      this.set({ error: String(err) });
      return;
    }
    await this.sortBy(this.state.sortMetric);
    await this.refreshResidual();
  }

  /** Re-sort the metric explorer; stale responses are dropped. */
  async sortBy(metric: MetricName, topN = this.state.topN): Promise<void> {
    const ticket = this.begin("controls");
    try {
      const response = await this.api.getControls(metric, topN);
      if (!this.isCurrent("controls", ticket)) return;
      this.set({ sortMetric: metric, topN, rows: response.records, error: null });
    } catch (err) {
      if (!this.isCurrent("controls", ticket)) return;
      this.set({ error: String(err) });
    }
  }

  private async refreshResidual(): Promise<void> {
    const ticket = this.begin("evaluate");
    try {
      const residual = await this.api.evaluatePortfolio(this.portfolioDoc(this.state.selected));
      if (!this.isCurrent("evaluate", ticket)) return;
      this.set({ residual, error: null });
    } catch (err) {
      if (!this.isCurrent("evaluate", ticket)) return;
      this.set({ error: String(err) });
    }
  }

  /**
   * Add/remove one control: exactly one evaluate POST per toggle. The
   * selection is applied optimistically so rapid toggles compose; a failed
   * request reverts its own toggle (unless a newer one superseded it).
   */
  async toggleControl(controlId: string): Promise<void> {
    const previous = this.state.selected;
    const next = new Set(previous);
    if (next.has(controlId)) {
      next.delete(controlId);
    } else {
      next.add(controlId);
    }
    this.set({ selected: next });
    const ticket = this.begin("evaluate");
    try {
      const residual = await this.api.evaluatePortfolio(this.portfolioDoc(next));
      if (!this.isCurrent("evaluate", ticket)) return;
      this.set({ residual, error: null });
    } catch (err) {
      if (!this.isCurrent("evaluate", ticket)) return;
      this.set({ selected: previous, error: String(err) });
    }
  }

  async requestPlan(budget = this.state.budget, objective = this.state.objective): Promise<void> {
    const ticket = this.begin("plan");
    try {
      const plan = await this.api.planPortfolio(
        this.portfolioDoc(this.state.selected),
        budget,
        objective,
      );
      if (!this.isCurrent("plan", ticket)) return;
      this.set({ budget, objective, plan, error: null });
    } catch (err) {
      if (!this.isCurrent("plan", ticket)) return;
      this.set({ error: String(err) });
    }
  }

  /** Adopt a planned control: move it into the portfolio and re-plan. */
  async adoptPlanned(controlId: string): Promise<void> {
    if (this.state.selected.has(controlId)) return;
    await this.toggleControl(controlId);
    await this.requestPlan();
  }
}
