/**
 * Typed client for the prediction service. All numbers shown in the UI
 * originate from these response bodies; the client never computes
 * roughness values itself.
 */

import type {
  MeshHandle,
  ModelInfo,
  PredictRequest,
  RoughnessField,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function throwApiError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async health(): Promise<{ status: string }> {
    const response = await this.fetchFn(`${this.baseUrl}/api/health`);
    if (!response.ok) await throwApiError(response);
    return response.json();
  }

  async modelInfo(): Promise<ModelInfo> {
    const response = await this.fetchFn(`${this.baseUrl}/api/model/info`);
    if (!response.ok) await throwApiError(response);
    return response.json();
  }

  async uploadMesh(
    body: ArrayBuffer | Uint8Array,
    format: "stl" | "obj" | "auto",
    name?: string,
  ): Promise<MeshHandle> {
    const headers: Record<string, string> = {
      "Content-Type": "application/octet-stream",
      "X-Mesh-Format": format,
    };
    if (name) headers["X-Mesh-Name"] = name;
    const payload: BodyInit =
      body instanceof Uint8Array
        ? (body.slice().buffer as ArrayBuffer)
        : body;
    const response = await this.fetchFn(`${this.baseUrl}/api/mesh`, {
      method: "POST",
      headers,
      body: payload,
    });
    if (!response.ok) await throwApiError(response);
    return response.json();
  }

  async predict(request: PredictRequest): Promise<RoughnessField> {
    const response = await this.fetchFn(`${this.baseUrl}/api/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) await throwApiError(response);
    return response.json();
  }

  async deleteMesh(id: string): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/api/mesh/${id}`, {
      method: "DELETE",
    });
    if (!response.ok && response.status !== 404) await throwApiError(response);
  }
}
