/**
 * Color legend for the roughness map. The gradient mirrors the server's
 * five-stop ramp; tick labels are derived from the color range the server
 * reported with the field (never recomputed from facet values here).
 */

export const RAMP_CSS =
  "linear-gradient(to right, rgb(0,0,255), rgb(0,255,255), rgb(0,255,0), rgb(255,255,0), rgb(255,0,0))";

export function legendTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo]; // uniform field collapses to one tick
  const ticks: number[] = [];
  for (let i = 0; i < count; i++) {
    ticks.push(lo + ((hi - lo) * i) / (count - 1));
  }
  return ticks;
}

export function renderLegend(container: HTMLElement, lo: number, hi: number): void {
  container.innerHTML = "";
  const bar = document.createElement("div");
  bar.className = "legend-bar";
  bar.style.background = RAMP_CSS;
  container.appendChild(bar);
  const labels = document.createElement("div");
  labels.className = "legend-labels";
  for (const tick of legendTicks(lo, hi)) {
    const label = document.createElement("span");
    label.textContent = tick.toFixed(2);
    label.title = String(tick);
    labels.appendChild(label);
  }
  container.appendChild(labels);
}
