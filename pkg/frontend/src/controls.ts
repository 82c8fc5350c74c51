/** Parameter sliders (bounded by the served factor ranges) and the
 * three-axis orientation inputs. */

import type { SessionState } from "./state.js";
import type { ModelInfo, OrientationDeg, ProcessParams } from "./types.js";

const PARAM_LABELS: Record<keyof ProcessParams, string> = {
  layer_height: "Layer Height",
  extrusion_temp: "Extrusion Temperature",
  outer_wall_speed: "Outer Wall Speed",
  infill_density: "Infill Density",
  wall_thickness: "Wall Thickness",
  bed_temp: "Bed Temperature",
  fan_speed: "Fan Speed",
};

function sliderStep(min: number, max: number): number {
  const span = max - min;
  if (span <= 1) return 0.01;
  if (span <= 30) return 0.5;
  return 1;
}

export function buildParameterControls(
  container: HTMLElement,
  info: ModelInfo,
  state: SessionState,
  onChange: () => void,
): void {
  container.innerHTML = "";
  const names = Object.keys(PARAM_LABELS) as Array<keyof ProcessParams>;
  for (const name of names) {
    const range = info.factor_ranges[name];
    if (!range) continue;
    const row = document.createElement("label");
    row.className = "control-row";

    const caption = document.createElement("span");
    caption.textContent = `${PARAM_LABELS[name]} (${range.unit})`;

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(range.min);
    slider.max = String(range.max);
    slider.step = String(sliderStep(range.min, range.max));
    slider.value = String(state.snapshot().params[name]);
    slider.dataset.param = name;

    const value = document.createElement("output");
    value.textContent = slider.value;

    slider.addEventListener("input", () => {
      const clamped = state.setParam(name, Number(slider.value));
      slider.value = String(clamped);
      value.textContent = String(clamped);
      onChange();
    });

    row.append(caption, slider, value);
    container.appendChild(row);
  }
}

export function buildOrientationControls(
  container: HTMLElement,
  state: SessionState,
  onChange: () => void,
): void {
  container.innerHTML = "";
  for (const axis of ["rx", "ry", "rz"] as Array<keyof OrientationDeg>) {
    const row = document.createElement("label");
    row.className = "control-row";

    const caption = document.createElement("span");
    caption.textContent = `Rotate ${axis.slice(1).toUpperCase()} (°)`;

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "-180";
    slider.max = "180";
    slider.step = "1";
    slider.value = String(state.snapshot().orientation[axis]);
    slider.dataset.axis = axis;

    const value = document.createElement("output");
    value.textContent = slider.value;

    slider.addEventListener("input", () => {
      state.setOrientation(axis, Number(slider.value));
      value.textContent = slider.value;
      onChange();
    });

    row.append(caption, slider, value);
    container.appendChild(row);
  }
}
