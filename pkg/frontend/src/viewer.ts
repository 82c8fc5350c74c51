/**
 * Three.js view: the uploaded mesh with per-facet colors straight from the
 * server's RGB values (no client-side recoloring), orbit/zoom/pan camera,
 * and raycast facet picking.
 *
 * Orientation convention: the service applies extrinsic rotations about
 * the fixed world axes, X then Y then Z (R = Rz * Ry * Rx). Three.js Euler
 * order "ZYX" composes exactly that matrix, so the on-screen rotation
 * matches the inclinations the service computed.
 */

import * as THREE from "three";

import type { RoughnessField } from "./types.js";

export interface ParsedMesh {
  vertices: Float32Array; // 3 per vertex
  triangles: Uint32Array; // 3 indices per facet
}

export class Viewer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private meshObject: THREE.Mesh | null = null;
  private facetCount = 0;
  private raycaster = new THREE.Raycaster();
  private pointer = new THREE.Vector2();

  // simple orbit state
  private orbit = { theta: Math.PI / 4, phi: Math.PI / 3, radius: 4, target: new THREE.Vector3() };
  private dragging = false;
  private panning = false;
  private lastX = 0;
  private lastY = 0;

  constructor(private canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(45, 1, 0.01, 1000);
    this.scene.background = new THREE.Color(0x10141a);
    const ambient = new THREE.AmbientLight(0xffffff, 0.75);
    const key = new THREE.DirectionalLight(0xffffff, 1.4);
    key.position.set(3, 4, 5);
    this.scene.add(ambient, key);
    this.bindControls();
    this.resize();
    this.updateCamera();
    this.renderLoop();
  }

  resize(): void {
    const width = this.canvas.clientWidth || 640;
    const height = this.canvas.clientHeight || 480;
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  /** Replace the displayed mesh; geometry is non-indexed so each facet owns
   * its three vertices and can be colored independently. */
  setMesh(mesh: ParsedMesh): void {
    if (this.meshObject) {
      this.scene.remove(this.meshObject);
      this.meshObject.geometry.dispose();
      (this.meshObject.material as THREE.Material).dispose();
      this.meshObject = null;
    }
    this.facetCount = mesh.triangles.length / 3;
    const position = new Float32Array(this.facetCount * 9);
    for (let t = 0; t < this.facetCount; t++) {
      for (let corner = 0; corner < 3; corner++) {
        const v = mesh.triangles[t * 3 + corner];
        position[t * 9 + corner * 3 + 0] = mesh.vertices[v * 3 + 0];
        position[t * 9 + corner * 3 + 1] = mesh.vertices[v * 3 + 1];
        position[t * 9 + corner * 3 + 2] = mesh.vertices[v * 3 + 2];
      }
    }
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(position, 3));
    const colors = new Float32Array(this.facetCount * 9).fill(0.7);
    geometry.setAttribute("color", new THREE.BufferAttribute(colors, 3));
    geometry.computeVertexNormals();
    geometry.computeBoundingSphere();

    const material = new THREE.MeshLambertMaterial({ vertexColors: true, side: THREE.DoubleSide });
    this.meshObject = new THREE.Mesh(geometry, material);
    this.meshObject.rotation.order = "ZYX"; // extrinsic X -> Y -> Z
    this.scene.add(this.meshObject);

    const sphere = geometry.boundingSphere;
    if (sphere) {
      this.orbit.target.copy(sphere.center);
      this.orbit.radius = Math.max(sphere.radius * 3, 0.5);
    }
    this.updateCamera();
  }

  /** Mirror the service-side orientation for display. */
  setOrientation(rxDeg: number, ryDeg: number, rzDeg: number): void {
    if (!this.meshObject) return;
    this.meshObject.rotation.set(
      THREE.MathUtils.degToRad(rxDeg),
      THREE.MathUtils.degToRad(ryDeg),
      THREE.MathUtils.degToRad(rzDeg),
    );
  }

  /** Paint per-facet colors exactly as served. Returns false (and leaves
   * the view untouched) when the facet count does not match. */
  applyFieldColors(field: RoughnessField): boolean {
    if (!this.meshObject || field.facets.length !== this.facetCount) return false;
    const attr = this.meshObject.geometry.getAttribute("color") as THREE.BufferAttribute;
    const colors = attr.array as Float32Array;
    for (const facet of field.facets) {
      const base = facet.id * 9;
      const [r, g, b] = facet.degenerate ? [128, 128, 128] : facet.rgb;
      for (let corner = 0; corner < 3; corner++) {
        colors[base + corner * 3 + 0] = r / 255;
        colors[base + corner * 3 + 1] = g / 255;
        colors[base + corner * 3 + 2] = b / 255;
      }
    }
    attr.needsUpdate = true;
    return true;
  }

  /** Raycast a pointer event to a facet id; null on miss. */
  pickFacet(event: { clientX: number; clientY: number }): number | null {
    if (!this.meshObject) return null;
    const rect = this.canvas.getBoundingClientRect();
    this.pointer.x = ((event.clientX - rect.left) / rect.width) * 2 - 1;
    this.pointer.y = -((event.clientY - rect.top) / rect.height) * 2 + 1;
    this.raycaster.setFromCamera(this.pointer, this.camera);
    const hits = this.raycaster.intersectObject(this.meshObject, false);
    if (hits.length === 0 || hits[0].faceIndex === undefined || hits[0].faceIndex === null) {
      return null;
    }
    return hits[0].faceIndex;
  }

  highlightFacet(_id: number | null): void {
    // selection is presented in the detail panel; the mesh keeps the
    // server's colors so the map always matches the legend
  }

  private bindControls(): void {
    this.canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.panning = e.button === 2 || e.shiftKey;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointerup", (e) => {
      this.dragging = false;
      this.canvas.releasePointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const dx = e.clientX - this.lastX;
      const dy = e.clientY - this.lastY;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      if (this.panning) {
        const scale = this.orbit.radius * 0.0015;
        const right = new THREE.Vector3().setFromMatrixColumn(this.camera.matrix, 0);
        const up = new THREE.Vector3().setFromMatrixColumn(this.camera.matrix, 1);
        this.orbit.target.addScaledVector(right, -dx * scale);
        this.orbit.target.addScaledVector(up, dy * scale);
      } else {
        this.orbit.theta -= dx * 0.008;
        this.orbit.phi = Math.min(Math.PI - 0.05, Math.max(0.05, this.orbit.phi - dy * 0.008));
      }
      this.updateCamera();
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.orbit.radius *= Math.exp(e.deltaY * 0.001);
      this.orbit.radius = Math.min(200, Math.max(0.05, this.orbit.radius));
      this.updateCamera();
    }, { passive: false });
    this.canvas.addEventListener("contextmenu", (e) => e.preventDefault());
    window.addEventListener("resize", () => this.resize());
  }

  private updateCamera(): void {
    const { theta, phi, radius, target } = this.orbit;
    this.camera.position.set(
      target.x + radius * Math.sin(phi) * Math.cos(theta),
      target.y + radius * Math.sin(phi) * Math.sin(theta),
      target.z + radius * Math.cos(phi),
    );
    this.camera.up.set(0, 0, 1); // build direction points up on screen
    this.camera.lookAt(target);
  }

  private renderLoop(): void {
    const tick = () => {
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }
}

/** Minimal STL/OBJ reader for client-side display only; the service does
 * its own authoritative parse of the same bytes. */
export function parseMeshBytes(buffer: ArrayBuffer, name: string): ParsedMesh {
  const bytes = new Uint8Array(buffer);
  if (isBinaryStl(bytes)) return parseBinaryStl(buffer);
  const text = new TextDecoder().decode(bytes);
  if (text.trimStart().startsWith("solid") && /facet\s+normal/.test(text)) {
    return parseAsciiStl(text);
  }
  if (name.toLowerCase().endsWith(".obj") || /^v\s/m.test(text)) {
    return parseObj(text);
  }
  throw new Error(`cannot parse mesh file ${name}`);
}

function isBinaryStl(bytes: Uint8Array): boolean {
  if (bytes.length < 84) return false;
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const count = view.getUint32(80, true);
  return count >= 1 && bytes.length === 84 + count * 50;
}

function parseBinaryStl(buffer: ArrayBuffer): ParsedMesh {
  const view = new DataView(buffer);
  const count = view.getUint32(80, true);
  const vertices = new Float32Array(count * 9);
  for (let t = 0; t < count; t++) {
    const base = 84 + t * 50 + 12; // skip the stored normal
    for (let k = 0; k < 9; k++) {
      vertices[t * 9 + k] = view.getFloat32(base + k * 4, true);
    }
  }
  const triangles = new Uint32Array(count * 3);
  for (let i = 0; i < triangles.length; i++) triangles[i] = i;
  return { vertices, triangles };
}

function parseAsciiStl(text: string): ParsedMesh {
  const coords: number[] = [];
  const re = /vertex\s+(\S+)\s+(\S+)\s+(\S+)/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(text)) !== null) {
    coords.push(Number(match[1]), Number(match[2]), Number(match[3]));
  }
  const vertices = new Float32Array(coords);
  const triangles = new Uint32Array(coords.length / 3);
  for (let i = 0; i < triangles.length; i++) triangles[i] = i;
  return { vertices, triangles };
}

function parseObj(text: string): ParsedMesh {
  const verts: number[] = [];
  const tris: number[] = [];
  for (const line of text.split(/\r?\n/)) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "v" && parts.length >= 4) {
      verts.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
    } else if (parts[0] === "f" && parts.length >= 4) {
      const ids = parts.slice(1).map((token) => {
        const raw = Number(token.split("/")[0]);
        return raw < 0 ? verts.length / 3 + raw : raw - 1;
      });
      for (let i = 1; i + 1 < ids.length; i++) {
        tris.push(ids[0], ids[i], ids[i + 1]);
      }
    }
  }
  return { vertices: new Float32Array(verts), triangles: new Uint32Array(tris) };
}
