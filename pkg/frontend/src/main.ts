/** Wires the session together: model info -> sliders, upload -> viewer,
 * debounced what-if updates -> predictions -> colors/legend/panel. */

import { ApiClient, ApiError } from "./api.js";
import { buildOrientationControls, buildParameterControls } from "./controls.js";
import { debounce, PREDICT_DEBOUNCE_MS } from "./debounce.js";
import { renderLegend } from "./legend.js";
import { renderFacetPanel, renderSummary } from "./panel.js";
import { loadShapArtifact, renderImportanceBars } from "./shap.js";
import { SessionState } from "./state.js";
import { parseMeshBytes, Viewer } from "./viewer.js";

const api = new ApiClient("");
const state = new SessionState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showToast(message: string): void {
  const toast = el<HTMLDivElement>("toast");
  toast.textContent = message;
  toast.classList.add("visible");
  setTimeout(() => toast.classList.remove("visible"), 4000);
}

async function requestPrediction(): Promise<void> {
  const body = state.currentRequestBody();
  if (!body) return;
  const seq = state.beginRequest();
  try {
    const field = await api.predict(body);
    const applied = state.applyField(seq, field);
    if (!applied && state.snapshot().error) {
      showToast(state.snapshot().error ?? "field rejected");
    }
  } catch (err) {
    const message = err instanceof ApiError ? err.detail : String(err);
    state.failRequest(seq, message);
    showToast(`prediction failed: ${message}`);
  }
}

const schedulePrediction = debounce(() => {
  void requestPrediction();
}, PREDICT_DEBOUNCE_MS);

async function boot(): Promise<void> {
  const viewer = new Viewer(el<HTMLCanvasElement>("viewport"));

  try {
    const info = await api.modelInfo();
    state.setModelInfo(info);
    buildParameterControls(el("param-controls"), info, state, schedulePrediction);
    if (info.metrics) {
      el("model-metrics").textContent =
        `model hold-out: MAE ${info.metrics.mae.toFixed(3)} µm, ` +
        `R² ${info.metrics.r2.toFixed(3)}`;
    }
  } catch (err) {
    showToast(`model info unavailable: ${err instanceof ApiError ? err.detail : err}`);
  }
  buildOrientationControls(el("orientation-controls"), state, () => {
    const { orientation } = state.snapshot();
    viewer.setOrientation(orientation.rx, orientation.ry, orientation.rz);
    schedulePrediction();
  });

  el<HTMLInputElement>("mesh-file").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    try {
      const buffer = await file.arrayBuffer();
      const handle = await api.uploadMesh(buffer, "auto", file.name);
      state.setMesh(handle);
      viewer.setMesh(parseMeshBytes(buffer, file.name));
      const { orientation } = state.snapshot();
      viewer.setOrientation(orientation.rx, orientation.ry, orientation.rz);
      el("mesh-meta").textContent = `${file.name}: ${handle.triangle_count} facets`;
      schedulePrediction();
    } catch (err) {
      showToast(`upload failed: ${err instanceof ApiError ? err.detail : err}`);
    }
  });

  el<HTMLCanvasElement>("viewport").addEventListener("click", (event) => {
    const facetId = viewer.pickFacet(event);
    state.selectFacet(facetId);
  });

  state.subscribe((snap) => {
    if (snap.field) {
      const ok = viewer.applyFieldColors(snap.field);
      if (!ok && snap.mesh && snap.field.facets.length !== snap.mesh.triangle_count) {
        el("error-banner").textContent = snap.error ?? "facet count mismatch";
        el("error-banner").classList.add("visible");
      } else {
        el("error-banner").classList.remove("visible");
        renderLegend(el("legend"), snap.field.color_range.lo, snap.field.color_range.hi);
        renderSummary(el("field-summary"), snap.field);
      }
    }
    renderFacetPanel(el("facet-panel"), state.selectedFacetEntry());
  });

  const shap = await loadShapArtifact();
  if (shap) {
    el("shap-section").classList.add("visible");
    renderImportanceBars(el("shap-bars"), shap);
  }
}

void boot();
