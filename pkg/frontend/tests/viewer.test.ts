import { describe, expect, it } from "vitest";

import {
  defaultCamera,
  meshBounds,
  projectPoint,
  triangleDepthOrder,
  triangleShade,
} from "../src/viewer.js";

describe("projection", () => {
  it("maps the camera target to the canvas center", () => {
    const cam = defaultCamera();
    cam.target = [5, 7, -3];
    const p = projectPoint([5, 7, -3], cam, 640, 480);
    expect(p.x).toBeCloseTo(320);
    expect(p.y).toBeCloseTo(240);
  });

  it("moves +x points to the right at zero yaw/pitch", () => {
    const cam = { yaw: 0, pitch: 0, distance: 100, target: [0, 0, 0] as [number, number, number] };
    const p = projectPoint([10, 0, 0], cam, 640, 480);
    expect(p.x).toBeGreaterThan(320);
    const q = projectPoint([0, 10, 0], cam, 640, 480);
    expect(q.y).toBeLessThan(240); // +y is up
  });

  it("orders far triangles before near ones", () => {
    const cam = { yaw: 0, pitch: 0, distance: 100, target: [0, 0, 0] as [number, number, number] };
    // two unit triangles at z = -20 (far) and z = +20 (near the camera)
    const vertices = Float64Array.from([
      0, 0, -20, 1, 0, -20, 0, 1, -20,
      0, 0, 20, 1, 0, 20, 0, 1, 20,
    ]);
    const triangles = Uint32Array.from([0, 1, 2, 3, 4, 5]);
    const order = triangleDepthOrder(vertices, triangles, cam);
    expect(order).toEqual([0, 1]); // painter's algorithm: far first
  });

  it("shades within the expected band", () => {
    const cam = defaultCamera();
    const vertices = Float64Array.from([0, 0, 0, 1, 0, 0, 0, 1, 0]);
    const triangles = Uint32Array.from([0, 1, 2]);
    const shade = triangleShade(vertices, triangles, 0, cam);
    expect(shade).toBeGreaterThanOrEqual(0.25);
    expect(shade).toBeLessThanOrEqual(1.0);
  });

  it("bounds center and radius", () => {
    const vertices = Float64Array.from([0, 0, 0, 10, 20, 30]);
    const { center, radius } = meshBounds(vertices);
    expect(center).toEqual([5, 10, 15]);
    expect(radius).toBeCloseTo(Math.hypot(10, 20, 30) / 2);
  });
});
