/** Optional read-only "Why?" panel: global feature importance bars read
 * from a shap.json artifact served next to the bundle (absent is fine). */

export interface ShapArtifact {
  feature_order: string[];
  global_importance: { mean_abs: Record<string, number>; ranking: string[] };
}

export async function loadShapArtifact(
  fetchFn: (url: string) => Promise<Response> = fetch,
): Promise<ShapArtifact | null> {
  try {
    const response = await fetchFn("./shap.json");
    if (!response.ok) return null;
    return (await response.json()) as ShapArtifact;
  } catch {
    return null;
  }
}

export function renderImportanceBars(container: HTMLElement, artifact: ShapArtifact): void {
  container.innerHTML = "";
  const { ranking, mean_abs } = artifact.global_importance;
  const top = mean_abs[ranking[0]] || 1;
  for (const name of ranking) {
    const row = document.createElement("div");
    row.className = "shap-row";
    const label = document.createElement("span");
    label.textContent = name;
    const bar = document.createElement("div");
    bar.className = "shap-bar";
    bar.style.width = `${Math.max(2, (100 * mean_abs[name]) / top)}%`;
    const value = document.createElement("span");
    value.className = "muted";
    value.textContent = mean_abs[name].toFixed(3);
    row.append(label, bar, value);
    container.appendChild(row);
  }
}
