/** Wire types mirroring the prediction service's JSON contracts. */

export interface ProcessParams {
  layer_height: number;
  extrusion_temp: number;
  outer_wall_speed: number;
  infill_density: number;
  wall_thickness: number;
  bed_temp: number;
  fan_speed: number;
}

export interface OrientationDeg {
  rx: number;
  ry: number;
  rz: number;
}

export type ColorRangeRequest =
  | { mode: "auto" }
  | { mode: "fixed"; lo: number; hi: number };

export interface FacetEntry {
  id: number;
  angle_deg: number;
  ra_um: number | null;
  rgb: [number, number, number];
  clamped: boolean;
  degenerate: boolean;
}

export interface FieldSummary {
  count: number;
  predicted_count: number;
  degenerate_count: number;
  clamped_count: number;
  min_ra: number | null;
  max_ra: number | null;
  mean_ra: number | null;
  area_weighted_mean_ra: number | null;
  histogram: { counts: number[]; bin_edges: number[] };
}

export interface RoughnessField {
  facets: FacetEntry[];
  summary: FieldSummary;
  params: ProcessParams;
  orientation: OrientationDeg;
  color_range: { mode: string; lo: number; hi: number };
  mesh_id: string;
}

export interface FactorRange {
  min: number;
  max: number;
  levels: number[];
  unit: string;
}

export interface ModelInfo {
  feature_order: string[];
  format_version: number;
  service_version: string;
  metrics: { mae: number; mse: number; r2: number; mape: number } | null;
  scaler: { feature_min: number[]; feature_max: number[] } | null;
  target_units: string;
  factor_ranges: Record<string, FactorRange>;
  angle_domain: { min: number; max: number; unit: string };
}

export interface MeshHandle {
  id: string;
  triangle_count: number;
  bbox: { min: number[]; max: number[] };
  uploaded_at: string;
}

export interface PredictRequest {
  mesh_id: string;
  params: ProcessParams;
  orientation: OrientationDeg;
  color_range: ColorRangeRequest;
}
