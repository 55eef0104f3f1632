// Software 3D viewport: orbit camera, painter-sorted flat-shaded triangles
// on a plain 2D canvas, with a millimeter grid floor. No WebGL, no deps.

import { MeshPayload } from "./api.js";

export interface Camera {
  yaw: number; // radians around the y axis
  pitch: number; // radians above the horizon
  distance: number;
  target: [number, number, number];
}

export function defaultCamera(): Camera {
  return { yaw: Math.PI / 5, pitch: Math.PI / 7, distance: 120, target: [0, 0, 0] };
}

export interface Projected {
  x: number;
  y: number;
  depth: number;
}

/** Perspective projection of a world point through the orbit camera. */
export function projectPoint(
  p: [number, number, number],
  cam: Camera,
  width: number,
  height: number,
): Projected {
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const dx = p[0] - cam.target[0];
  const dy = p[1] - cam.target[1];
  const dz = p[2] - cam.target[2];
  // rotate into camera space: yaw about y, then pitch about x
  const x1 = cy * dx - sy * dz;
  const z1 = sy * dx + cy * dz;
  const y2 = cp * dy - sp * z1;
  const z2 = sp * dy + cp * z1;
  const depth = cam.distance - z2;
  const f = (0.9 * Math.min(width, height)) / Math.max(depth, 1e-6);
  return { x: width / 2 + x1 * f, y: height / 2 - y2 * f, depth };
}

export function triangleDepthOrder(
  vertices: Float64Array,
  triangles: Uint32Array,
  cam: Camera,
): number[] {
  const count = triangles.length / 3;
  const depths = new Float64Array(count);
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  for (let t = 0; t < count; t++) {
    let z = 0;
    for (let k = 0; k < 3; k++) {
      const v = triangles[3 * t + k] * 3;
      const dx = vertices[v] - cam.target[0];
      const dy = vertices[v + 1] - cam.target[1];
      const dz = vertices[v + 2] - cam.target[2];
      const z1 = sy * dx + cy * dz;
      z += sp * dy + cp * z1;
    }
    depths[t] = z / 3;
  }
  const order = Array.from({ length: count }, (_, i) => i);
  order.sort((a, b) => depths[a] - depths[b]); // far first
  return order;
}

/** Lambert shade in [0.25, 1] for a triangle under a fixed headlight. */
export function triangleShade(
  vertices: Float64Array,
  triangles: Uint32Array,
  t: number,
  cam: Camera,
): number {
  const a = triangles[3 * t] * 3;
  const b = triangles[3 * t + 1] * 3;
  const c = triangles[3 * t + 2] * 3;
  const ux = vertices[b] - vertices[a];
  const uy = vertices[b + 1] - vertices[a + 1];
  const uz = vertices[b + 2] - vertices[a + 2];
  const vx = vertices[c] - vertices[a];
  const vy = vertices[c + 1] - vertices[a + 1];
  const vz = vertices[c + 2] - vertices[a + 2];
  const nx = uy * vz - uz * vy;
  const ny = uz * vx - ux * vz;
  const nz = ux * vy - uy * vx;
  const len = Math.hypot(nx, ny, nz) || 1;
  // headlight direction = camera forward
  const lx = -Math.cos(cam.pitch) * Math.sin(cam.yaw);
  const ly = Math.sin(cam.pitch);
  const lz = -Math.cos(cam.pitch) * Math.cos(cam.yaw);
  const lambert = Math.abs((nx * lx + ny * ly + nz * lz) / len);
  return 0.25 + 0.75 * lambert;
}

export function meshBounds(vertices: Float64Array): { center: [number, number, number]; radius: number } {
  if (vertices.length === 0) return { center: [0, 0, 0], radius: 50 };
  const lo = [Infinity, Infinity, Infinity];
  const hi = [-Infinity, -Infinity, -Infinity];
  for (let i = 0; i < vertices.length; i += 3) {
    for (let k = 0; k < 3; k++) {
      lo[k] = Math.min(lo[k], vertices[i + k]);
      hi[k] = Math.max(hi[k], vertices[i + k]);
    }
  }
  const center: [number, number, number] = [
    (lo[0] + hi[0]) / 2,
    (lo[1] + hi[1]) / 2,
    (lo[2] + hi[2]) / 2,
  ];
  const radius = Math.max(1, Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]) / 2);
  return { center, radius };
}

export class MeshViewer {
  private camera = defaultCamera();
  private vertices = new Float64Array(0);
  private triangles = new Uint32Array(0);
  private floorY = 0;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(private canvas: HTMLCanvasElement) {
    this.attachControls();
  }

  setMesh(mesh: MeshPayload | null) {
    if (!mesh) {
      this.vertices = new Float64Array(0);
      this.triangles = new Uint32Array(0);
    } else {
      this.vertices = Float64Array.from(mesh.vertices);
      this.triangles = Uint32Array.from(mesh.triangles);
      const { center, radius } = meshBounds(this.vertices);
      this.camera.target = center;
      this.camera.distance = radius * 2.8;
      this.floorY = center[1] - radius;
      for (let i = 1; i < this.vertices.length; i += 3) {
        this.floorY = Math.min(this.floorY, this.vertices[i]);
      }
    }
    this.draw();
  }

  private attachControls() {
    this.canvas.addEventListener("mousedown", (e) => {
      this.dragging = true;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
    });
    window.addEventListener("mouseup", () => (this.dragging = false));
    window.addEventListener("mousemove", (e) => {
      if (!this.dragging) return;
      this.camera.yaw += (e.clientX - this.lastX) * 0.01;
      this.camera.pitch = Math.min(
        Math.PI / 2 - 0.05,
        Math.max(-Math.PI / 2 + 0.05, this.camera.pitch + (e.clientY - this.lastY) * 0.01),
      );
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      this.draw();
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.camera.distance *= Math.exp(e.deltaY * 0.001);
      this.draw();
    });
  }

  draw() {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, width, height);
    this.drawFloor(ctx, width, height);
    if (this.triangles.length === 0) {
      ctx.fillStyle = "#5a6478";
      ctx.font = "14px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillText("no mesh staged yet", width / 2, height / 2);
      return;
    }
    const order = triangleDepthOrder(this.vertices, this.triangles, this.camera);
    for (const t of order) {
      const shade = triangleShade(this.vertices, this.triangles, t, this.camera);
      const pts: Projected[] = [];
      for (let k = 0; k < 3; k++) {
        const v = this.triangles[3 * t + k] * 3;
        pts.push(
          projectPoint(
            [this.vertices[v], this.vertices[v + 1], this.vertices[v + 2]],
            this.camera,
            width,
            height,
          ),
        );
      }
      const lum = Math.round(70 + 150 * shade);
      ctx.fillStyle = `rgb(${Math.round(lum * 0.72)}, ${Math.round(lum * 0.85)}, ${lum})`;
      ctx.beginPath();
      ctx.moveTo(pts[0].x, pts[0].y);
      ctx.lineTo(pts[1].x, pts[1].y);
      ctx.lineTo(pts[2].x, pts[2].y);
      ctx.closePath();
      ctx.fill();
    }
  }

  private drawFloor(ctx: CanvasRenderingContext2D, width: number, height: number) {
    // millimeter grid floor under the model, 10 mm pitch
    const span = Math.max(60, this.camera.distance);
    const step = 10;
    const n = Math.ceil(span / step);
    ctx.strokeStyle = "rgba(90, 110, 140, 0.25)";
    ctx.lineWidth = 1;
    const [cx, , cz] = this.camera.target;
    for (let i = -n; i <= n; i++) {
      const a = projectPoint([cx + i * step, this.floorY, cz - n * step], this.camera, width, height);
      const b = projectPoint([cx + i * step, this.floorY, cz + n * step], this.camera, width, height);
      const c = projectPoint([cx - n * step, this.floorY, cz + i * step], this.camera, width, height);
      const d = projectPoint([cx + n * step, this.floorY, cz + i * step], this.camera, width, height);
      ctx.beginPath();
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
      ctx.moveTo(c.x, c.y);
      ctx.lineTo(d.x, d.y);
      ctx.stroke();
    }
  }
}
