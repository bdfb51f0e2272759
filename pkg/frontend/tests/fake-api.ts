/**
 * Deterministic in-memory backend shaped like the two-adversary fixture:
 * G0018 uses T1059/T1566/T1204, G0099 uses T1059/T1027/T1105, CC-1
 * mitigates T1059+T1566, CC-2 mitigates T1566. Numbers only need to be
 * stable, not meaningful; the real figures are checked end-to-end.
 */

import type { Api } from "../src/api.js";
import type {
  ClustersResponse,
  ControlRecord,
  ControlsResponse,
  MetricName,
  Objective,
  PlanResponse,
  PortfolioDoc,
  ResidualReport,
  Summary,
  TechniqueDetail,
} from "../src/types.js";

const MITIGATIONS: Record<string, string[]> = {
  "CC-1": ["T1059", "T1566"],
  "CC-2": ["T1566"],
};

const USED = ["T1059", "T1566", "T1204", "T1027", "T1105"];

const RISK: Record<string, number> = {
  T1059: 3.7578125,
  T1566: 0.5,
  T1204: 1.0,
  T1027: 1.0,
  T1105: 1.0,
};

const ADVERSARIES: Record<string, string[]> = {
  G0018: ["T1059", "T1566", "T1204"],
  G0099: ["T1059", "T1027", "T1105"],
};

export const FAKE_SUMMARY: Summary = {
  tactics: 4,
  techniques: 5,
  controls: 2,
  adversaries: 2,
  mitigating_controls: 2,
  unmitigated_techniques: 3,
  metadata: {
    source: "fake",
    alpha: 8,
    seed: 42,
    k_max: 10,
    restarts: 10,
    dataset_fingerprint: "fake-fingerprint",
    loaded_at: "2026-01-01T00:00:00+00:00",
  },
};

export const FAKE_RECORDS: ControlRecord[] = [
  {
    control_id: "CC-1",
    tec: 2,
    tac: { TA0001: 1.0, TA0002: 0.5, TA0005: 0.0, TA0011: 0.0 },
    mtac: 0.375,
    cr: 0.5,
    ac: 1.0,
    atc: 2 / 3,
    cmr: 4.2578125,
  },
  {
    control_id: "CC-2",
    tec: 1,
    tac: { TA0001: 1.0, TA0002: 0.0, TA0005: 0.0, TA0011: 0.0 },
    mtac: 0.25,
    cr: 1.0,
    ac: 0.5,
    atc: 1 / 6,
    cmr: 0.5,
  },
];

function covered(enforced: string[]): Set<string> {
  const out = new Set<string>();
  for (const cid of enforced) for (const tid of MITIGATIONS[cid] ?? []) out.add(tid);
  return out;
}

export function fakeResidual(doc: PortfolioDoc): ResidualReport {
  const cov = covered(doc.enforced);
  const residual = USED.filter((t) => !cov.has(t));
  const mitigable = residual.filter((t) =>
    Object.values(MITIGATIONS).some((ts) => ts.includes(t)),
  );
  const perAdversary: Record<string, number> = {};
  let hit = 0;
  let fracSum = 0;
  for (const [aid, ts] of Object.entries(ADVERSARIES)) {
    const c = ts.filter((t) => cov.has(t)).length / ts.length;
    perAdversary[aid] = c;
    if (c > 0) hit += 1;
    fracSum += c;
  }
  return {
    covered_techniques: [...cov].sort(),
    residual_mitigable: mitigable.sort(),
    residual_unmitigable: residual.filter((t) => !mitigable.includes(t)).sort(),
    per_adversary_coverage: perAdversary,
    fa: hit / 2,
    aftma: fracSum / 2,
    residual_risk: residual.reduce((acc, t) => acc + RISK[t]!, 0),
    total_risk: USED.reduce((acc, t) => acc + RISK[t]!, 0),
    caveat: "mapping treats mitigation as binary",
  };
}

export function fakePlan(doc: PortfolioDoc, budget: number, objective: Objective): PlanResponse {
  const steps = [];
  const enforced = [...doc.enforced];
  for (let i = 0; i < budget; i += 1) {
    const before = fakeResidual({ enforced, adversary_filter: null });
    let best: { cid: string; techniques: number; risk: number } | null = null;
    for (const cid of Object.keys(MITIGATIONS).sort()) {
      if (enforced.includes(cid)) continue;
      const after = fakeResidual({ enforced: [...enforced, cid], adversary_filter: null });
      const techniques = after.covered_techniques.length - before.covered_techniques.length;
      const risk = before.residual_risk - after.residual_risk;
      const value = objective === "risk" ? risk : techniques;
      const bestValue =
        best === null ? -1 : objective === "risk" ? best.risk : best.techniques;
      if (value > bestValue) best = { cid, techniques, risk };
    }
    if (!best) break;
    const gain = objective === "risk" ? best.risk : best.techniques;
    if (gain <= 0) break;
    steps.push({
      control_id: best.cid,
      gain,
      techniques: best.techniques,
      risk: best.risk,
      adversaries: 0,
    });
    enforced.push(best.cid);
  }
  return { objective, budget, steps };
}

interface Deferred<T> {
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

export class FakeApi implements Api {
  calls: { method: string; args: unknown[] }[] = [];
  failEvaluate = false;
  failControls = false;
  /** When set, getControls responses wait until released via releaseControls. */
  gateControls = false;
  /** When set, evaluatePortfolio responses wait until released via releaseEvaluate. */
  gateEvaluate = false;
  private pendingControls: { deferred: Deferred<ControlsResponse>; response: ControlsResponse }[] = [];
  private pendingEvaluate: { deferred: Deferred<ResidualReport>; response: ResidualReport }[] = [];

  private record(method: string, ...args: unknown[]): void {
    this.calls.push({ method, args });
  }

  countOf(method: string): number {
    return this.calls.filter((c) => c.method === method).length;
  }

  async getSummary(): Promise<Summary> {
    this.record("getSummary");
    return structuredClone(FAKE_SUMMARY);
  }

  private controlsResponse(sort: MetricName, n: number): ControlsResponse {
    const records = [...FAKE_RECORDS].sort(
      (a, b) => Number(b[sort] ?? 0) - Number(a[sort] ?? 0),
    );
    return { metric: sort, direction: "desc", records: structuredClone(records.slice(0, n)) };
  }

  getControls(sort: MetricName, n: number): Promise<ControlsResponse> {
    this.record("getControls", sort, n);
    if (this.failControls) return Promise.reject(new Error("controls unavailable"));
    const response = this.controlsResponse(sort, n);
    if (!this.gateControls) return Promise.resolve(response);
    return new Promise<ControlsResponse>((resolve, reject) => {
      this.pendingControls.push({ deferred: { resolve, reject }, response });
    });
  }

  /** Release the i-th gated getControls call (in call order). */
  releaseControls(index: number): void {
    const pending = this.pendingControls[index];
    if (!pending) throw new Error(`no gated controls call #${index}`);
    pending.deferred.resolve(pending.response);
  }

  async getTechnique(id: string): Promise<TechniqueDetail> {
    this.record("getTechnique", id);
    throw new Error(`not modeled: ${id}`);
  }

  async getClusters(): Promise<ClustersResponse> {
    this.record("getClusters");
    throw new Error("not modeled");
  }

  evaluatePortfolio(portfolio: PortfolioDoc): Promise<ResidualReport> {
    this.record("evaluatePortfolio", structuredClone(portfolio));
    if (this.failEvaluate) return Promise.reject(new Error("evaluate failed"));
    const response = fakeResidual(portfolio);
    if (!this.gateEvaluate) return Promise.resolve(response);
    return new Promise<ResidualReport>((resolve, reject) => {
      this.pendingEvaluate.push({ deferred: { resolve, reject }, response });
    });
  }

  /** Release the i-th gated evaluatePortfolio call (in call order). */
  releaseEvaluate(index: number): void {
    const pending = this.pendingEvaluate[index];
    if (!pending) throw new Error(`no gated evaluate call #${index}`);
    pending.deferred.resolve(pending.response);
  }

  async planPortfolio(
    portfolio: PortfolioDoc,
    budget: number,
    objective: Objective,
  ): Promise<PlanResponse> {
    this.record("planPortfolio", structuredClone(portfolio), budget, objective);
    return fakePlan(portfolio, budget, objective);
  }
}
