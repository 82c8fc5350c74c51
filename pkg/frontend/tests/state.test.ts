import { describe, expect, it } from "vitest";

import { SessionState, formatFacetDetail } from "../src/state.js";
import type { MeshHandle, ModelInfo, RoughnessField } from "../src/types.js";

import modelInfoFixture from "./fixtures/model_info.json";
import fieldIdentity from "./fixtures/cube_field_identity.json";
import fieldRx90 from "./fixtures/cube_field_rx90.json";

const info = modelInfoFixture as unknown as ModelInfo;
const identity = fieldIdentity as unknown as RoughnessField;
const rx90 = fieldRx90 as unknown as RoughnessField;

const cubeHandle: MeshHandle = {
  id: "fixture-cube",
  triangle_count: 12,
  bbox: { min: [0, 0, 0], max: [1, 1, 1] },
  uploaded_at: "2026-01-01T00:00:00Z",
};

function freshState(): SessionState {
  const state = new SessionState();
  state.setModelInfo(info);
  state.setMesh(cubeHandle);
  return state;
}

describe("parameter clamping", () => {
  it("clamps to the served factor ranges", () => {
    const state = freshState();
    expect(state.setParam("layer_height", 99)).toBe(0.28);
    expect(state.setParam("layer_height", -5)).toBe(0.12);
    expect(state.setParam("fan_speed", 80)).toBe(80);
  });

  it("sliders can never emit out-of-range values", () => {
    const state = freshState();
    for (const probe of [-1e9, -0.001, 0.1999, 0.2001, 1e9, NaN]) {
      const v = state.setParam("layer_height", probe);
      expect(v).toBeGreaterThanOrEqual(0.12);
      expect(v).toBeLessThanOrEqual(0.28);
    }
  });
});

describe("stale-response guard", () => {
  it("renders only the final state's response for two rapid changes", () => {
    const state = freshState();
    const first = state.beginRequest();
    const second = state.beginRequest();
    // the later request resolves first
    expect(state.applyField(second, rx90)).toBe(true);
    expect(state.applyField(first, identity)).toBe(false);
    expect(state.snapshot().field).toBe(rx90);
  });

  it("in-order responses all render", () => {
    const state = freshState();
    const first = state.beginRequest();
    expect(state.applyField(first, identity)).toBe(true);
    const second = state.beginRequest();
    expect(state.applyField(second, rx90)).toBe(true);
    expect(state.snapshot().field).toBe(rx90);
  });

  it("a new mesh invalidates responses for the old one", () => {
    const state = freshState();
    const seq = state.beginRequest();
    state.setMesh({ ...cubeHandle, id: "another" });
    expect(state.applyField(seq, identity)).toBe(false);
  });

  it("a failed request keeps the previous field", () => {
    const state = freshState();
    const first = state.beginRequest();
    state.applyField(first, identity);
    const second = state.beginRequest();
    state.failRequest(second, "boom");
    const snap = state.snapshot();
    expect(snap.field).toBe(identity);
    expect(snap.error).toBe("boom");
  });
});

describe("facet-count mismatch", () => {
  it("rejects a field that does not match the mesh", () => {
    const state = freshState();
    state.setMesh({ ...cubeHandle, id: "bigger", triangle_count: 99 });
    const seq = state.beginRequest();
    expect(state.applyField(seq, identity)).toBe(false);
    expect(state.snapshot().error).toMatch(/12 facets/);
    expect(state.snapshot().field).toBeNull();
  });
});

describe("facet inspection", () => {
  it("reads values from the latest applied field", () => {
    const state = freshState();
    state.applyField(state.beginRequest(), identity);
    state.selectFacet(2); // top face at identity: 0 degrees
    expect(state.selectedFacetEntry()?.angle_deg).toBe(0);

    state.applyField(state.beginRequest(), rx90);
    // same selection after re-orientation shows the NEW field's values
    expect(state.selectedFacetEntry()?.angle_deg).toBeCloseTo(90, 5);
  });

  it("pick miss clears the panel", () => {
    const state = freshState();
    state.applyField(state.beginRequest(), identity);
    state.selectFacet(3);
    expect(state.selectedFacetEntry()).not.toBeNull();
    state.selectFacet(null);
    expect(state.selectedFacetEntry()).toBeNull();
  });

  it("out-of-range selection is treated as a miss", () => {
    const state = freshState();
    state.applyField(state.beginRequest(), identity);
    state.selectFacet(400);
    expect(state.selectedFacetEntry()).toBeNull();
  });
});

describe("display formatting", () => {
  it("rounds to two decimals and keeps the raw value for hover", () => {
    const facet = identity.facets[4]; // vertical wall
    const detail = formatFacetDetail(facet);
    expect(detail.raText).toBe((facet.ra_um as number).toFixed(2));
    expect(Number(detail.raRaw)).toBe(facet.ra_um);
    expect(detail.angleText).toBe("90.00");
  });

  it("marks clamped facets", () => {
    const clamped = identity.facets.find((f) => f.clamped);
    expect(clamped).toBeDefined();
    expect(formatFacetDetail(clamped!).clampedBadge).toMatch(/170/);
  });
});
