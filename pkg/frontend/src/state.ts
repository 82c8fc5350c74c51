/**
 * Session state and the update rules the interface must honor:
 *
 * - parameters are always clamped to the ranges served by /api/model/info;
 * - prediction responses carry a monotone sequence number and a stale
 *   (out-of-order) response is never rendered;
 * - a field whose facet count disagrees with the loaded mesh is rejected
 *   and the previous view is kept;
 * - the facet detail panel always reads from the latest applied field.
 */

import type {
  FacetEntry,
  MeshHandle,
  ModelInfo,
  OrientationDeg,
  ProcessParams,
  RoughnessField,
} from "./types.js";

export const DEFAULT_PARAMS: ProcessParams = {
  layer_height: 0.2,
  extrusion_temp: 200,
  outer_wall_speed: 200,
  infill_density: 15,
  wall_thickness: 0.42,
  bed_temp: 60,
  fan_speed: 80,
};

export type ColorRangeMode = { mode: "auto" } | { mode: "fixed"; lo: number; hi: number };

export interface SessionSnapshot {
  mesh: MeshHandle | null;
  params: ProcessParams;
  orientation: OrientationDeg;
  colorRange: ColorRangeMode;
  field: RoughnessField | null;
  selectedFacet: number | null;
  error: string | null;
}

export class SessionState {
  private info: ModelInfo | null = null;
  private mesh: MeshHandle | null = null;
  private params: ProcessParams = { ...DEFAULT_PARAMS };
  private orientation: OrientationDeg = { rx: 0, ry: 0, rz: 0 };
  private colorRange: ColorRangeMode = { mode: "auto" };
  private field: RoughnessField | null = null;
  private selectedFacet: number | null = null;
  private error: string | null = null;

  private nextSeq = 0;
  private appliedSeq = -1;
  private listeners: Array<(s: SessionSnapshot) => void> = [];

  snapshot(): SessionSnapshot {
    return {
      mesh: this.mesh,
      params: { ...this.params },
      orientation: { ...this.orientation },
      colorRange: { ...this.colorRange },
      field: this.field,
      selectedFacet: this.selectedFacet,
      error: this.error,
    };
  }

  subscribe(listener: (s: SessionSnapshot) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) listener(snap);
  }

  setModelInfo(info: ModelInfo): void {
    this.info = info;
    // re-clamp current parameters into the served ranges
    for (const key of Object.keys(this.params) as Array<keyof ProcessParams>) {
      this.params[key] = this.clampParam(key, this.params[key]);
    }
    this.emit();
  }

  modelInfo(): ModelInfo | null {
    return this.info;
  }

  /** Clamp a parameter into the slider bounds served by the model info. */
  clampParam(name: keyof ProcessParams, value: number): number {
    const range = this.info?.factor_ranges[name];
    if (!range || !Number.isFinite(value)) {
      return range ? range.min : DEFAULT_PARAMS[name];
    }
    return Math.min(range.max, Math.max(range.min, value));
  }

  setParam(name: keyof ProcessParams, value: number): number {
    const clamped = this.clampParam(name, value);
    this.params[name] = clamped;
    this.emit();
    return clamped;
  }

  setOrientation(axis: keyof OrientationDeg, degrees: number): void {
    if (Number.isFinite(degrees)) {
      this.orientation[axis] = degrees;
      this.emit();
    }
  }

  setColorRange(mode: ColorRangeMode): void {
    this.colorRange = mode;
    this.emit();
  }

  setMesh(handle: MeshHandle): void {
    this.mesh = handle;
    this.field = null;
    this.selectedFacet = null;
    this.error = null;
    // a new mesh invalidates every in-flight response
    this.appliedSeq = this.nextSeq;
    this.emit();
  }

  /** Sequence number for an outgoing prediction request. */
  beginRequest(): number {
    this.nextSeq += 1;
    return this.nextSeq;
  }

  /**
   * Apply a prediction response. Returns true when rendered; stale
   * responses (an earlier sequence than one already applied) and fields
   * that do not match the mesh's facet count are dropped.
   */
  applyField(seq: number, field: RoughnessField): boolean {
    if (seq <= this.appliedSeq) {
      return false; // out-of-order response, a newer field is on screen
    }
    if (this.mesh && field.facets.length !== this.mesh.triangle_count) {
      this.error = `field has ${field.facets.length} facets but the mesh has ${this.mesh.triangle_count}`;
      this.emit();
      return false;
    }
    this.appliedSeq = seq;
    this.field = field;
    this.error = null;
    this.emit();
    return true;
  }

  /** A failed request keeps the previous field on screen. */
  failRequest(seq: number, message: string): void {
    if (seq > this.appliedSeq) {
      this.error = message;
      this.emit();
    }
  }

  selectFacet(id: number | null): void {
    if (id !== null && this.field && (id < 0 || id >= this.field.facets.length)) {
      id = null;
    }
    this.selectedFacet = id;
    this.emit();
  }

  /** Detail for the selected facet, read from the latest applied field. */
  selectedFacetEntry(): FacetEntry | null {
    if (this.field === null || this.selectedFacet === null) return null;
    return this.field.facets[this.selectedFacet] ?? null;
  }

  currentRequestBody(): {
    mesh_id: string;
    params: ProcessParams;
    orientation: OrientationDeg;
    color_range: ColorRangeMode;
  } | null {
    if (!this.mesh) return null;
    return {
      mesh_id: this.mesh.id,
      params: { ...this.params },
      orientation: { ...this.orientation },
      color_range: { ...this.colorRange },
    };
  }
}

/** Display strings for the facet panel: verbatim field values, rounded to
 * two decimals for display; the raw value is exposed for hover. */
export function formatFacetDetail(facet: FacetEntry): {
  raText: string;
  raRaw: string;
  angleText: string;
  angleRaw: string;
  clampedBadge: string | null;
} {
  const raText = facet.ra_um === null ? "n/a" : facet.ra_um.toFixed(2);
  const angleText = facet.angle_deg.toFixed(2);
  return {
    raText,
    raRaw: facet.ra_um === null ? "degenerate facet" : String(facet.ra_um),
    angleText,
    angleRaw: String(facet.angle_deg),
    clampedBadge: facet.clamped ? "clamped to 170°" : null,
  };
}
