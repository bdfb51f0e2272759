/** Thin typed client for the controlscope HTTP API. */

import type {
  ClustersResponse,
  ControlsResponse,
  MetricName,
  Objective,
  PlanResponse,
  PortfolioDoc,
  ResidualReport,
  Summary,
  TechniqueDetail,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

/** What the store needs from the backend; ApiClient is the HTTP implementation. */
export interface Api {
  getSummary(): Promise<Summary>;
  getControls(sort: MetricName, n: number, direction?: string): Promise<ControlsResponse>;
  getTechnique(id: string): Promise<TechniqueDetail>;
  getClusters(): Promise<ClustersResponse>;
  evaluatePortfolio(portfolio: PortfolioDoc): Promise<ResidualReport>;
  planPortfolio(portfolio: PortfolioDoc, budget: number, objective: Objective): Promise<PlanResponse>;
}

type FetchLike = typeof fetch;

export class ApiClient implements Api {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, body?.detail ?? body);
    }
    return body as T;
  }

  getSummary(): Promise<Summary> {
    return this.request<Summary>("/api/v1/summary");
  }

  getControls(sort: MetricName, n: number, direction = "desc"): Promise<ControlsResponse> {
    const params = new URLSearchParams({ sort, n: String(n), direction });
    return this.request<ControlsResponse>(`/api/v1/controls?${params}`);
  }

  getTechnique(id: string): Promise<TechniqueDetail> {
    return this.request<TechniqueDetail>(`/api/v1/techniques/${encodeURIComponent(id)}`);
  }

  getClusters(): Promise<ClustersResponse> {
    return this.request<ClustersResponse>("/api/v1/clusters");
  }

  evaluatePortfolio(portfolio: PortfolioDoc): Promise<ResidualReport> {
    return this.request<ResidualReport>("/api/v1/portfolio/evaluate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(portfolio),
    });
  }

  planPortfolio(portfolio: PortfolioDoc, budget: number, objective: Objective): Promise<PlanResponse> {
    return this.request<PlanResponse>("/api/v1/portfolio/plan", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ...portfolio, budget, objective }),
    });
  }
}
