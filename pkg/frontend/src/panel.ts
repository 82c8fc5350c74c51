/** Facet detail panel and field summary rendering. Values are shown
 * verbatim from the latest server response (two decimals for display,
 * raw value on hover). */

import { formatFacetDetail } from "./state.js";
import type { FacetEntry, RoughnessField } from "./types.js";

export function renderFacetPanel(container: HTMLElement, facet: FacetEntry | null): void {
  container.innerHTML = "";
  if (facet === null) {
    const empty = document.createElement("p");
    empty.className = "muted";
    empty.textContent = "Click a facet to inspect it.";
    container.appendChild(empty);
    return;
  }
  const detail = formatFacetDetail(facet);
  const rows: Array<[string, string, string]> = [
    ["Facet", String(facet.id), String(facet.id)],
    ["Predicted Ra", `${detail.raText} µm`, detail.raRaw],
    ["Inclination", `${detail.angleText}°`, detail.angleRaw],
  ];
  const dl = document.createElement("dl");
  for (const [label, value, raw] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.textContent = value;
    dd.title = raw;
    if (label === "Predicted Ra") dd.dataset.role = "facet-ra";
    if (label === "Inclination") dd.dataset.role = "facet-angle";
    dl.append(dt, dd);
  }
  container.appendChild(dl);
  if (detail.clampedBadge) {
    const badge = document.createElement("span");
    badge.className = "badge";
    badge.textContent = detail.clampedBadge;
    container.appendChild(badge);
  }
  if (facet.degenerate) {
    const badge = document.createElement("span");
    badge.className = "badge badge-gray";
    badge.textContent = "degenerate facet (not predicted)";
    container.appendChild(badge);
  }
}

export function renderSummary(container: HTMLElement, field: RoughnessField | null): void {
  container.innerHTML = "";
  if (!field) return;
  const s = field.summary;
  const parts = [
    `${s.predicted_count}/${s.count} facets`,
    s.mean_ra === null ? "" : `mean ${s.mean_ra.toFixed(2)} µm`,
    s.area_weighted_mean_ra === null
      ? ""
      : `area-weighted ${s.area_weighted_mean_ra.toFixed(2)} µm`,
    s.clamped_count > 0 ? `${s.clamped_count} clamped` : "",
    s.degenerate_count > 0 ? `${s.degenerate_count} degenerate` : "",
  ].filter(Boolean);
  container.textContent = parts.join(" · ");
}
