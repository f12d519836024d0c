// Wire types mirroring the feedback service, field for field.

export type ResidualKind = "r_trans" | "r_bound" | "r_conf";

export const RESIDUAL_KINDS: ResidualKind[] = ["r_trans", "r_bound", "r_conf"];

export interface SensorSeries {
  r_trans: number[];
  r_bound: number[];
  r_conf: number[];
}

export interface ScoresResponse {
  version: number;
  from: number;
  to: number;
  n_pred: number;
  smoothing: number;
  timestamps: number[];
  aggregated: number[];
  labels: number[] | null;
  per_sensor: Record<string, SensorSeries>;
}

export interface WindowResponse {
  version: number;
  window_start: number;
  n_pred: number;
  sensors: string[];
  r_trans: number[];
  r_bound: number[];
  r_conf: number[];
  normalized: Record<ResidualKind, number[]>;
  aggregated: number;
  dominant: { sensor: string; residual: ResidualKind; value: number };
  delta: number;
  slice: {
    timestamps: number[];
    values: Record<string, number[]>;
    labels: number[] | null;
  };
}

export interface ModelResponse {
  version: number;
  versions: number[];
  hyper: { n_q: number; delta: number; eta: number; n_w: number | null };
  n_pred: number;
  eps: number;
  train_range: [number, number];
  frame_length: number;
  sensors: Record<
    string,
    { transitions: number; boxes: number; representative_vectors: number }
  >;
  journal: JournalRecord[];
}

export interface JournalRecord {
  seq: number;
  type: "feedback" | "rollback";
  event?: {
    window: [number, number];
    verdict: Verdict;
    zeta: number | null;
    note: string;
    submitted_at: string;
  };
  base_version?: number;
  result_version?: number;
  target_version?: number;
}

export type Verdict = "normal" | "anomalous";

export interface FeedbackRequest {
  window: [number, number];
  verdict: Verdict;
  version: number;
  zeta?: number;
  note?: string;
}
