/**
 * Response shapes for the controlscope /api/v1 endpoints.
 * The UI renders these fields verbatim; it never derives metrics itself.
 */

export type MetricName = "tec" | "mtac" | "cr" | "ac" | "atc" | "cmr";

export const METRIC_NAMES: MetricName[] = ["tec", "mtac", "cr", "ac", "atc", "cmr"];

export type Objective = "technique_count" | "risk";

export interface SnapshotMetadata {
  source: string;
  alpha: number;
  seed: number;
  k_max: number;
  restarts: number;
  dataset_fingerprint: string;
  loaded_at: string;
}

export interface Summary {
  tactics: number;
  techniques: number;
  controls: number;
  adversaries: number;
  mitigating_controls: number;
  unmitigated_techniques: number;
  metadata: SnapshotMetadata;
}

export interface ControlRecord {
  control_id: string;
  tec: number;
  tac: Record<string, number>;
  mtac: number;
  cr: number | null;
  ac: number;
  atc: number;
  cmr: number;
}

export interface ControlsResponse {
  metric: string;
  direction: string;
  records: ControlRecord[];
}

export interface TechniqueDetail {
  id: string;
  name: string;
  tactic_ids: string[];
  mitigating_controls: string[];
  users: number;
  conjunction: Record<string, number>;
  degree: number;
  likelihood: number;
  severity: number;
  risk: number;
}

export interface ClusterSummary {
  label: string;
  count: number;
  control_ids: string[];
  mean_tec: number;
  mitigated_techniques: number;
  aftm: number;
  fa: number;
  aftma: number;
}

export interface ClustersResponse {
  k: number;
  seed: number;
  explained_variance: number[];
  clusters: ClusterSummary[];
}

export interface PortfolioDoc {
  enforced: string[];
  adversary_filter: string[] | null;
}

export interface ResidualReport {
  covered_techniques: string[];
  residual_mitigable: string[];
  residual_unmitigable: string[];
  per_adversary_coverage: Record<string, number>;
  fa: number;
  aftma: number;
  residual_risk: number;
  total_risk: number;
  caveat: string;
}

export interface PlanStep {
  control_id: string;
  gain: number;
  techniques: number;
  risk: number;
  adversaries: number;
}

export interface PlanResponse {
  objective: Objective;
  budget: number;
  steps: PlanStep[];
}
