/**
 * Wire types for the crowdmpm HTTP API, plus zod schemas that mirror the
 * server-side validation rules so most mistakes are caught before submit.
 * The server remains the authority; anything accepted here can still be
 * rejected with a 400/422, which the UI surfaces verbatim.
 */

import { z } from "zod";

export const SCENARIO_SCHEMA_VERSION = 1;

// exit endpoints must sit within this many cells of a solid face
export const EXIT_SNAP = 0.5;

export const rectWallSchema = z.object({
  type: z.literal("rect"),
  x: z.number(),
  y: z.number(),
  w: z.number().positive(),
  h: z.number().positive(),
});

export const circleWallSchema = z.object({
  type: z.literal("circle"),
  cx: z.number(),
  cy: z.number(),
  r: z.number().positive(),
});

export const wallSchema = z.discriminatedUnion("type", [rectWallSchema, circleWallSchema]);

export const exitSchema = z.object({
  x0: z.number(),
  y0: z.number(),
  x1: z.number(),
  y1: z.number(),
});

export const regionSchema = z.object({
  x: z.number(),
  y: z.number(),
  w: z.number().positive(),
  h: z.number().positive(),
});

export const spawnSchema = z
  .object({
    region: regionSchema,
    count: z.number().int().positive(),
    r_a: z.number().positive(),
    r_b: z.number().positive(),
    v0: z.tuple([z.number(), z.number()]).default([0, 0]),
  })
  .refine((s) => s.r_b > s.r_a, {
    message: "r_b must exceed r_a",
    path: ["r_b"],
  });

export const bodyForceSchema = z
  .object({
    kind: z.enum(["none", "goal", "centripetal"]).default("none"),
    goal: z.tuple([z.number(), z.number()]).nullish(),
    v_d: z.number().min(0).default(0),
    center: z.tuple([z.number(), z.number()]).nullish(),
    radius: z.number().min(0).default(0),
  })
  .refine((b) => b.kind !== "goal" || b.goal != null, {
    message: "goal force needs a goal point",
    path: ["goal"],
  })
  .refine((b) => b.kind !== "centripetal" || (b.center != null && b.radius > 0), {
    message: "centripetal force needs a center and radius > 0",
    path: ["center"],
  });

export const materialSchema = z.object({
  epsilon: z.number().positive().default(1),
  k: z.number().min(0).default(1),
  model_path: z.string().nullish(),
});

export const activeSchema = z.object({
  alpha: z.number().default(0),
  beta: z.number().min(0).default(0),
  d_l: z.number().default(0),
  d1: z.number().default(0),
  d2: z.number().default(0),
  noise_sigma: z.number().min(0).default(0),
});

export const scenarioSchema = z.object({
  schema_version: z.number().int().default(SCENARIO_SCHEMA_VERSION),
  width: z.number().positive(),
  height: z.number().positive(),
  dx: z.number().positive(),
  walls: z.array(wallSchema).default([]),
  exits: z.array(exitSchema).default([]),
  spawns: z.array(spawnSchema).default([]),
  body_force: bodyForceSchema.default({ kind: "none", goal: null, v_d: 0, center: null, radius: 0 }),
  material: materialSchema.default({ epsilon: 1, k: 1, model_path: null }),
  active: activeSchema.default({ alpha: 0, beta: 0, d_l: 0, d1: 0, d2: 0, noise_sigma: 0 }),
  dt: z.number().positive(),
  steps: z.number().int().positive(),
  gamma: z.number().min(0).max(1).default(0.9),
  seed: z.number().int().default(0),
  snapshot_every: z.number().int().positive().default(1),
});

export type RectWall = z.infer<typeof rectWallSchema>;
export type CircleWall = z.infer<typeof circleWallSchema>;
export type Wall = z.infer<typeof wallSchema>;
export type ExitSegment = z.infer<typeof exitSchema>;
export type RectRegion = z.infer<typeof regionSchema>;
export type Spawn = z.infer<typeof spawnSchema>;
export type Scenario = z.infer<typeof scenarioSchema>;

export type JobState = "queued" | "running" | "done" | "failed" | "cancelled";

export interface RunReport {
  schema_version: number;
  status: "ok" | "cancelled";
  /** snapshot ids addressable under /frames/{id}; strided when snapshot_every > 1 */
  frames: number[];
  steps_requested: number;
  steps_done: number;
  n_initial: number;
  exited_total: number;
  evacuated_at: number | null;
  series: {
    mass: number[];
    peak_stress: number[];
    peak_exit_stress: number[];
    exited: number[];
  };
  grid: GridInfo;
}

export interface JobStatus {
  id: string;
  scenario_id: string;
  status: JobState;
  progress: number;
  error: string | null;
  report: RunReport | null;
}

export interface GridInfo {
  nx: number;
  ny: number;
  dx: number;
  origin: [number, number];
}

export interface FrameResponse {
  job_id: string;
  frame: number;
  grid: GridInfo;
  layers: {
    velocity?: number[][];
    stress?: number[];
    curl?: number[];
    divergence?: number[];
    particles?: number[][]; // [x, y, vx, vy, r_a, r_b]
  };
}

export type LayerName = "velocity" | "stress" | "curl" | "divergence" | "particles";
