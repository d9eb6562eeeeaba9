/**
 * Client-side mirror of the server's scenario geometry rules. Schema shape
 * is handled by zod in types.ts; this module adds the geometric checks the
 * server runs after parsing: spawn regions inside the domain, exit endpoints
 * on a solid face (domain boundary or wall surface, within half a cell).
 */

import { scenarioSchema, EXIT_SNAP } from "./types.js";
import type { Scenario, Wall } from "./types.js";

export interface Problem {
  path: string;
  message: string;
}

/** Signed distance to a rectangle boundary: negative inside. */
export function rectSdf(px: number, py: number, x: number, y: number, w: number, h: number): number {
  const cx = x + w / 2;
  const cy = y + h / 2;
  const qx = Math.abs(px - cx) - w / 2;
  const qy = Math.abs(py - cy) - h / 2;
  const ox = Math.max(qx, 0);
  const oy = Math.max(qy, 0);
  return Math.hypot(ox, oy) + Math.min(Math.max(qx, qy), 0);
}

export function circleSdf(px: number, py: number, cx: number, cy: number, r: number): number {
  return Math.hypot(px - cx, py - cy) - r;
}

function onSolidFace(px: number, py: number, sc: Scenario): boolean {
  const tol = EXIT_SNAP * sc.dx;
  if (Math.abs(rectSdf(px, py, 0, 0, sc.width, sc.height)) <= tol) return true;
  for (const wall of sc.walls) {
    const d = wallSdf(px, py, wall);
    if (Math.abs(d) <= tol) return true;
  }
  return false;
}

function wallSdf(px: number, py: number, wall: Wall): number {
  if (wall.type === "rect") return rectSdf(px, py, wall.x, wall.y, wall.w, wall.h);
  return circleSdf(px, py, wall.cx, wall.cy, wall.r);
}

/**
 * Full client-side validation: zod schema first, then geometry. Returns an
 * empty list when the document should be acceptable to the server.
 */
export function validateScenario(doc: unknown): Problem[] {
  const parsed = scenarioSchema.safeParse(doc);
  if (!parsed.success) {
    return parsed.error.issues.map((issue) => ({
      path: issue.path.join("."),
      message: issue.message,
    }));
  }
  const sc = parsed.data;
  const problems: Problem[] = [];

  sc.spawns.forEach((spawn, i) => {
    const r = spawn.region;
    if (r.x < 0 || r.y < 0 || r.x + r.w > sc.width || r.y + r.h > sc.height) {
      problems.push({
        path: `spawns.${i}.region`,
        message: "spawn region extends outside the domain",
      });
    }
  });

  sc.exits.forEach((ex, i) => {
    const ends: [number, number][] = [
      [ex.x0, ex.y0],
      [ex.x1, ex.y1],
    ];
    for (const [px, py] of ends) {
      if (!onSolidFace(px, py, sc)) {
        problems.push({
          path: `exits.${i}`,
          message: `endpoint (${px}, ${py}) is not on the domain boundary or a wall face`,
        });
      }
    }
  });

  return problems;
}
