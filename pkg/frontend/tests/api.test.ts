import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("hits the documented endpoints", async () => {
    const calls: Array<{ url: string; init?: RequestInit }> = [];
    const client = new ApiClient("", async (url, init) => {
      calls.push({ url, init });
      if (url.endsWith("/api/health")) return jsonResponse({ status: "ok" });
      if (url.endsWith("/api/model/info")) return jsonResponse({ feature_order: [] });
      if (url.endsWith("/api/mesh")) {
        return jsonResponse({ id: "m1", triangle_count: 12, bbox: {}, uploaded_at: "" });
      }
      return jsonResponse({ facets: [] });
    });

    await client.health();
    await client.modelInfo();
    await client.uploadMesh(new Uint8Array([1, 2, 3]), "stl", "cube.stl");
    await client.predict({
      mesh_id: "m1",
      params: {
        layer_height: 0.2, extrusion_temp: 200, outer_wall_speed: 200,
        infill_density: 15, wall_thickness: 0.42, bed_temp: 60, fan_speed: 80,
      },
      orientation: { rx: 0, ry: 0, rz: 0 },
      color_range: { mode: "auto" },
    });

    expect(calls.map((c) => c.url)).toEqual([
      "/api/health",
      "/api/model/info",
      "/api/mesh",
      "/api/predict",
    ]);
    const upload = calls[2].init!;
    expect((upload.headers as Record<string, string>)["X-Mesh-Format"]).toBe("stl");
    expect((upload.headers as Record<string, string>)["X-Mesh-Name"]).toBe("cube.stl");
    expect(upload.method).toBe("POST");
    const predict = calls[3].init!;
    const body = JSON.parse(predict.body as string);
    expect(body.mesh_id).toBe("m1");
    expect(body.orientation).toEqual({ rx: 0, ry: 0, rz: 0 });
  });

  it("surfaces the server's error detail", async () => {
    const client = new ApiClient("", async () =>
      jsonResponse({ detail: "mesh handle 'x' not found" }, 404),
    );
    await expect(client.predict({} as never)).rejects.toThrowError(ApiError);
    await expect(client.predict({} as never)).rejects.toMatchObject({
      status: 404,
      detail: "mesh handle 'x' not found",
    });
  });

  it("tolerates a missing mesh on delete", async () => {
    const client = new ApiClient("", async () => new Response(null, { status: 404 }));
    await expect(client.deleteMesh("gone")).resolves.toBeUndefined();
  });
});
