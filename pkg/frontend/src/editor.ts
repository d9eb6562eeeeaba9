/**
 * Scenario editor state: pure data manipulation behind the canvas view.
 *
 * The editor holds the scenario document as plain data and edits it through
 * immutable updates, so loading a server-stored scenario and saving it back
 * without touching anything round-trips the JSON unchanged. Handles are
 * small draggable targets (wall corners, exit endpoints, region corners,
 * whole shapes) hit-tested in world coordinates.
 */

import type { ExitSegment, Scenario, Spawn, Wall } from "./types.js";

export type Handle =
  | { kind: "wall"; index: number; part: "body" | "corner" }
  | { kind: "exit"; index: number; part: "p0" | "p1" | "body" }
  | { kind: "spawn"; index: number; part: "body" | "corner" };

export interface EditorState {
  doc: Scenario;
  selection: Handle | null;
  dirty: boolean;
}

export function createEditor(doc: Scenario): EditorState {
  return { doc, selection: null, dirty: false };
}

const HIT_RADIUS = 3.0; // world units; callers may scale by zoom

function near(px: number, py: number, qx: number, qy: number, tol: number): boolean {
  return Math.hypot(px - qx, py - qy) <= tol;
}

function inRect(px: number, py: number, x: number, y: number, w: number, h: number): boolean {
  return px >= x && px <= x + w && py >= y && py <= y + h;
}

function segmentDistance(px: number, py: number, ex: ExitSegment): number {
  const dx = ex.x1 - ex.x0;
  const dy = ex.y1 - ex.y0;
  const len2 = dx * dx + dy * dy;
  const t = len2 === 0 ? 0 : Math.min(Math.max(((px - ex.x0) * dx + (py - ex.y0) * dy) / len2, 0), 1);
  return Math.hypot(px - (ex.x0 + t * dx), py - (ex.y0 + t * dy));
}

/** Topmost handle under the cursor; endpoints win over bodies. */
export function hitTest(doc: Scenario, px: number, py: number, tol: number = HIT_RADIUS): Handle | null {
  for (let i = doc.exits.length - 1; i >= 0; i--) {
    const ex = doc.exits[i];
    if (near(px, py, ex.x0, ex.y0, tol)) return { kind: "exit", index: i, part: "p0" };
    if (near(px, py, ex.x1, ex.y1, tol)) return { kind: "exit", index: i, part: "p1" };
  }
  for (let i = doc.walls.length - 1; i >= 0; i--) {
    const w = doc.walls[i];
    if (w.type === "rect" && near(px, py, w.x + w.w, w.y + w.h, tol)) {
      return { kind: "wall", index: i, part: "corner" };
    }
    if (w.type === "circle" && near(px, py, w.cx + w.r, w.cy, tol)) {
      return { kind: "wall", index: i, part: "corner" };
    }
  }
  for (let i = doc.spawns.length - 1; i >= 0; i--) {
    const r = doc.spawns[i].region;
    if (near(px, py, r.x + r.w, r.y + r.h, tol)) return { kind: "spawn", index: i, part: "corner" };
  }
  for (let i = doc.exits.length - 1; i >= 0; i--) {
    if (segmentDistance(px, py, doc.exits[i]) <= tol) return { kind: "exit", index: i, part: "body" };
  }
  for (let i = doc.walls.length - 1; i >= 0; i--) {
    const w = doc.walls[i];
    const hit =
      w.type === "rect"
        ? inRect(px, py, w.x, w.y, w.w, w.h)
        : Math.hypot(px - w.cx, py - w.cy) <= w.r;
    if (hit) return { kind: "wall", index: i, part: "body" };
  }
  for (let i = doc.spawns.length - 1; i >= 0; i--) {
    const r = doc.spawns[i].region;
    if (inRect(px, py, r.x, r.y, r.w, r.h)) return { kind: "spawn", index: i, part: "body" };
  }
  return null;
}

function replaceAt<T>(arr: T[], index: number, value: T): T[] {
  const out = arr.slice();
  out[index] = value;
  return out;
}

/** Apply a drag delta to the handle; returns a new document. */
export function applyDrag(doc: Scenario, handle: Handle, dx: number, dy: number): Scenario {
  if (handle.kind === "exit") {
    const ex = doc.exits[handle.index];
    let moved: ExitSegment;
    if (handle.part === "p0") moved = { ...ex, x0: ex.x0 + dx, y0: ex.y0 + dy };
    else if (handle.part === "p1") moved = { ...ex, x1: ex.x1 + dx, y1: ex.y1 + dy };
    else moved = { x0: ex.x0 + dx, y0: ex.y0 + dy, x1: ex.x1 + dx, y1: ex.y1 + dy };
    return { ...doc, exits: replaceAt(doc.exits, handle.index, moved) };
  }
  if (handle.kind === "wall") {
    const w = doc.walls[handle.index];
    let moved: Wall;
    if (w.type === "rect") {
      moved =
        handle.part === "body"
          ? { ...w, x: w.x + dx, y: w.y + dy }
          : { ...w, w: Math.max(w.w + dx, 0.1), h: Math.max(w.h + dy, 0.1) };
    } else {
      moved =
        handle.part === "body"
          ? { ...w, cx: w.cx + dx, cy: w.cy + dy }
          : { ...w, r: Math.max(w.r + dx, 0.1) };
    }
    return { ...doc, walls: replaceAt(doc.walls, handle.index, moved) };
  }
  const spawn = doc.spawns[handle.index];
  const r = spawn.region;
  const region =
    handle.part === "body"
      ? { ...r, x: r.x + dx, y: r.y + dy }
      : { ...r, w: Math.max(r.w + dx, 0.1), h: Math.max(r.h + dy, 0.1) };
  return { ...doc, spawns: replaceAt(doc.spawns, handle.index, { ...spawn, region }) };
}

export function addWall(doc: Scenario, wall: Wall): Scenario {
  return { ...doc, walls: [...doc.walls, wall] };
}

export function addExit(doc: Scenario, exit: ExitSegment): Scenario {
  return { ...doc, exits: [...doc.exits, exit] };
}

export function addSpawn(doc: Scenario, spawn: Spawn): Scenario {
  return { ...doc, spawns: [...doc.spawns, spawn] };
}

export function removeSelected(doc: Scenario, handle: Handle): Scenario {
  if (handle.kind === "wall") {
    return { ...doc, walls: doc.walls.filter((_, i) => i !== handle.index) };
  }
  if (handle.kind === "exit") {
    return { ...doc, exits: doc.exits.filter((_, i) => i !== handle.index) };
  }
  return { ...doc, spawns: doc.spawns.filter((_, i) => i !== handle.index) };
}

/** Set a numeric field through a dotted path, e.g. "material.epsilon". */
export function setField(doc: Scenario, path: string, value: number): Scenario {
  const keys = path.split(".");
  const clone: Record<string, unknown> = { ...doc } as unknown as Record<string, unknown>;
  let node = clone;
  for (let i = 0; i < keys.length - 1; i++) {
    const next = node[keys[i]];
    const copy = Array.isArray(next) ? (next as unknown[]).slice() : { ...(next as object) };
    node[keys[i]] = copy;
    node = copy as Record<string, unknown>;
  }
  node[keys[keys.length - 1]] = value;
  return clone as unknown as Scenario;
}

export function serialize(doc: Scenario): string {
  return JSON.stringify(doc, null, 2);
}

export function deserialize(text: string): Scenario {
  return JSON.parse(text) as Scenario;
}
