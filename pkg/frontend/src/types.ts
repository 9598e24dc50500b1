export type HeadName = "vegetable" | "spoilage" | "day";

export type Disposition = "keep" | "discard" | "undecided";

export interface ClassificationOutput {
  label: string;
  /** class name -> probability, sums to 1 */
  probs: Record<string, number>;
}

export interface PredictionResponse {
  schema_version: number;
  vegetable: ClassificationOutput;
  spoilage: ClassificationOutput;
  day_estimate: number;
  remaining_shelf_life_days: number;
  model_id: string;
  latency_ms: number;
}

export interface ExplanationResponse {
  schema_version: number;
  params: { segments: number; samples: number; seed: number };
  /** head -> per-segment surrogate weights */
  weights: Record<HeadName, number[]>;
  targets: Record<string, number | string>;
  surrogate_fit_r2: Record<string, number>;
  n_segments: number;
  warnings: string[];
  /** head -> overlay image path, present when the server renders overlays */
  overlays: Partial<Record<HeadName, string>>;
  model_id: string;
}

export interface HealthResponse {
  status: string;
  model_id: string;
  uptime_s: number;
}
