/**
 * Studio application: wires the editor canvas, run controls, and the A/B
 * comparison view to the HTTP API. All DOM access lives here; the modules
 * it composes are pure and covered by tests.
 */

import { StudioApi, ApiError } from "./api.js";
import { legendGradient } from "./colormap.js";
import {
  applyDrag,
  addExit,
  addSpawn,
  addWall,
  createEditor,
  hitTest,
  removeSelected,
  serialize,
  setField,
  type EditorState,
  type Handle,
} from "./editor.js";
import { renderScalarLayer, speedFromVelocity } from "./heatmap.js";
import {
  emptyCompare,
  frameIdAt,
  lowerStressSlot,
  maxLinkedFrame,
  pin,
  readout,
  scrub,
  type CompareState,
  type Slot,
} from "./compare.js";
import { validateScenario } from "./validate.js";
import type { FrameResponse, JobStatus, LayerName, Scenario } from "./types.js";

type Tool = "select" | "rect" | "circle" | "exit" | "spawn";

const DEFAULT_SCENARIO: Scenario = {
  schema_version: 1,
  width: 100,
  height: 100,
  dx: 2.5,
  walls: [],
  exits: [{ x0: 46, y0: 0, x1: 54, y1: 0 }],
  spawns: [
    {
      region: { x: 15, y: 45, w: 70, h: 45 },
      count: 48,
      r_a: 2.5,
      r_b: 5,
      v0: [0, -0.3],
    },
  ],
  body_force: { kind: "goal", goal: [50, -60], v_d: 0.8, center: null, radius: 0 },
  material: { epsilon: 1, k: 2, model_path: null },
  active: { alpha: 0, beta: 0, d_l: 0, d1: 0, d2: 0, noise_sigma: 0 },
  dt: 0.5,
  steps: 600,
  gamma: 0.9,
  seed: 11,
  snapshot_every: 2,
};

export class StudioApp {
  private api: StudioApi;
  private editor: EditorState;
  private tool: Tool = "select";
  private dragging: { handle: Handle; lastX: number; lastY: number } | null = null;
  private creating: { startX: number; startY: number } | null = null;
  private compare: CompareState = emptyCompare();
  private layer: Exclude<LayerName, "particles"> = "stress";
  private showParticles = true;
  private frameCache = new Map<string, FrameResponse>();
  private scenarioId: string | null = null;

  constructor(
    private root: Document,
    api?: StudioApi,
  ) {
    this.api = api ?? new StudioApi();
    this.editor = createEditor(structuredClone(DEFAULT_SCENARIO));
  }

  start(): void {
    this.bindToolbar();
    this.bindEditorCanvas();
    this.bindInspector();
    this.bindRunPanel();
    const legend = this.root.getElementById("legend");
    if (legend) legend.style.background = legendGradient();
    this.refreshInspector();
    this.drawEditor();
  }

  // ------------------------------------------------------------------ editor

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private bindToolbar(): void {
    for (const tool of ["select", "rect", "circle", "exit", "spawn"] as Tool[]) {
      this.el<HTMLButtonElement>(`tool-${tool}`).addEventListener("click", () => {
        this.tool = tool;
        this.root.querySelectorAll(".tool").forEach((b) => b.classList.remove("active"));
        this.el(`tool-${tool}`).classList.add("active");
      });
    }
    this.el<HTMLButtonElement>("delete-selected").addEventListener("click", () => {
      if (this.editor.selection) {
        this.editor = {
          ...this.editor,
          doc: removeSelected(this.editor.doc, this.editor.selection),
          selection: null,
          dirty: true,
        };
        this.afterEdit();
      }
    });
  }

  private canvasTransform(): { scale: number; canvas: HTMLCanvasElement } {
    const canvas = this.el<HTMLCanvasElement>("editor-canvas");
    const scale = Math.min(
      canvas.width / this.editor.doc.width,
      canvas.height / this.editor.doc.height,
    );
    return { scale, canvas };
  }

  private toWorld(evX: number, evY: number): [number, number] {
    const { scale, canvas } = this.canvasTransform();
    const rect = canvas.getBoundingClientRect();
    const px = ((evX - rect.left) * canvas.width) / rect.width;
    const py = ((evY - rect.top) * canvas.height) / rect.height;
    return [px / scale, (canvas.height - py) / scale];
  }

  private bindEditorCanvas(): void {
    const canvas = this.el<HTMLCanvasElement>("editor-canvas");
    canvas.addEventListener("mousedown", (ev) => {
      const [wx, wy] = this.toWorld(ev.clientX, ev.clientY);
      if (this.tool === "select") {
        const handle = hitTest(this.editor.doc, wx, wy);
        this.editor = { ...this.editor, selection: handle };
        if (handle) this.dragging = { handle, lastX: wx, lastY: wy };
        this.refreshInspector();
        this.drawEditor();
      } else {
        this.creating = { startX: wx, startY: wy };
      }
    });
    canvas.addEventListener("mousemove", (ev) => {
      if (!this.dragging) return;
      const [wx, wy] = this.toWorld(ev.clientX, ev.clientY);
      const doc = applyDrag(
        this.editor.doc,
        this.dragging.handle,
        wx - this.dragging.lastX,
        wy - this.dragging.lastY,
      );
      this.dragging = { ...this.dragging, lastX: wx, lastY: wy };
      this.editor = { ...this.editor, doc, dirty: true };
      this.afterEdit();
    });
    const finish = (ev: MouseEvent) => {
      if (this.creating) {
        const [wx, wy] = this.toWorld(ev.clientX, ev.clientY);
        this.createShape(this.creating.startX, this.creating.startY, wx, wy);
        this.creating = null;
      }
      this.dragging = null;
    };
    canvas.addEventListener("mouseup", finish);
    canvas.addEventListener("mouseleave", () => {
      this.dragging = null;
    });
  }

  private createShape(x0: number, y0: number, x1: number, y1: number): void {
    const doc = this.editor.doc;
    const w = Math.abs(x1 - x0);
    const h = Math.abs(y1 - y0);
    let next = doc;
    if (this.tool === "rect" && w > 0.5 && h > 0.5) {
      next = addWall(doc, { type: "rect", x: Math.min(x0, x1), y: Math.min(y0, y1), w, h });
    } else if (this.tool === "circle") {
      const r = Math.max(Math.hypot(x1 - x0, y1 - y0), 0.5);
      next = addWall(doc, { type: "circle", cx: x0, cy: y0, r });
    } else if (this.tool === "exit") {
      next = addExit(doc, { x0, y0, x1, y1 });
    } else if (this.tool === "spawn" && w > 0.5 && h > 0.5) {
      next = addSpawn(doc, {
        region: { x: Math.min(x0, x1), y: Math.min(y0, y1), w, h },
        count: 20,
        r_a: 2.5,
        r_b: 5,
        v0: [0, 0],
      });
    }
    if (next !== doc) {
      this.editor = { ...this.editor, doc: next, dirty: true };
      this.afterEdit();
    }
  }

  private afterEdit(): void {
    this.scenarioId = null; // edits invalidate the stored copy
    this.refreshProblems();
    this.refreshInspector();
    this.drawEditor();
  }

  private refreshProblems(): void {
    const problems = validateScenario(this.editor.doc);
    const box = this.el("problems");
    box.textContent = problems.map((p) => `${p.path}: ${p.message}`).join("\n");
    box.classList.toggle("hidden", problems.length === 0);
    this.el<HTMLButtonElement>("run-a").disabled = problems.length > 0;
    this.el<HTMLButtonElement>("run-b").disabled = problems.length > 0;
  }

  private drawEditor(): void {
    const { scale, canvas } = this.canvasTransform();
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const doc = this.editor.doc;
    ctx.save();
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.translate(0, canvas.height);
    ctx.scale(scale, -scale);

    ctx.fillStyle = "#13161c";
    ctx.fillRect(0, 0, doc.width, doc.height);
    ctx.strokeStyle = "#3c4250";
    ctx.lineWidth = 2 / scale;
    ctx.strokeRect(0, 0, doc.width, doc.height);

    for (const spawn of doc.spawns) {
      const r = spawn.region;
      ctx.fillStyle = "rgba(80, 140, 255, 0.18)";
      ctx.fillRect(r.x, r.y, r.w, r.h);
      ctx.strokeStyle = "rgba(80, 140, 255, 0.7)";
      ctx.lineWidth = 1 / scale;
      ctx.strokeRect(r.x, r.y, r.w, r.h);
    }

    ctx.fillStyle = "#59606e";
    for (const wall of doc.walls) {
      if (wall.type === "rect") {
        ctx.fillRect(wall.x, wall.y, wall.w, wall.h);
      } else {
        ctx.beginPath();
        ctx.arc(wall.cx, wall.cy, wall.r, 0, Math.PI * 2);
        ctx.fill();
      }
    }

    ctx.strokeStyle = "#46d67c";
    ctx.lineWidth = 3 / scale;
    for (const ex of doc.exits) {
      ctx.beginPath();
      ctx.moveTo(ex.x0, ex.y0);
      ctx.lineTo(ex.x1, ex.y1);
      ctx.stroke();
      ctx.fillStyle = "#46d67c";
      for (const [hx, hy] of [
        [ex.x0, ex.y0],
        [ex.x1, ex.y1],
      ]) {
        ctx.beginPath();
        ctx.arc(hx, hy, 2 / scale + 1, 0, Math.PI * 2);
        ctx.fill();
      }
    }

    const sel = this.editor.selection;
    if (sel) {
      ctx.strokeStyle = "#ffd166";
      ctx.lineWidth = 1.5 / scale;
      if (sel.kind === "wall") {
        const w = doc.walls[sel.index];
        if (w) {
          if (w.type === "rect") ctx.strokeRect(w.x, w.y, w.w, w.h);
          else {
            ctx.beginPath();
            ctx.arc(w.cx, w.cy, w.r, 0, Math.PI * 2);
            ctx.stroke();
          }
        }
      } else if (sel.kind === "spawn") {
        const r = doc.spawns[sel.index]?.region;
        if (r) ctx.strokeRect(r.x, r.y, r.w, r.h);
      } else {
        const ex = doc.exits[sel.index];
        if (ex) {
          ctx.beginPath();
          ctx.moveTo(ex.x0, ex.y0);
          ctx.lineTo(ex.x1, ex.y1);
          ctx.stroke();
        }
      }
    }
    ctx.restore();
  }

  // --------------------------------------------------------------- inspector

  private inspectorFields: [string, string][] = [
    ["dt", "dt"],
    ["steps", "steps"],
    ["seed", "seed"],
    ["snapshot_every", "snapshot_every"],
    ["material.epsilon", "epsilon"],
    ["material.k", "k"],
    ["active.alpha", "alpha"],
    ["active.beta", "beta"],
    ["active.noise_sigma", "noise_sigma"],
  ];

  private bindInspector(): void {
    for (const [path] of this.inspectorFields) {
      const input = this.el<HTMLInputElement>(`field-${path.replace(".", "-")}`);
      input.addEventListener("change", () => {
        const value = Number(input.value);
        if (!Number.isFinite(value)) return;
        this.editor = {
          ...this.editor,
          doc: setField(this.editor.doc, path, value),
          dirty: true,
        };
        this.afterEdit();
      });
    }
    this.el<HTMLTextAreaElement>("scenario-json").addEventListener("change", (ev) => {
      const area = ev.target as HTMLTextAreaElement;
      try {
        const doc = JSON.parse(area.value) as Scenario;
        this.editor = { ...this.editor, doc, dirty: true };
        this.afterEdit();
      } catch (err) {
        this.setStatus(`invalid JSON: ${(err as Error).message}`);
      }
    });
  }

  private refreshInspector(): void {
    const doc = this.editor.doc as unknown as Record<string, unknown>;
    for (const [path] of this.inspectorFields) {
      const input = this.el<HTMLInputElement>(`field-${path.replace(".", "-")}`);
      const value = path
        .split(".")
        .reduce<unknown>((node, key) => (node as Record<string, unknown>)[key], doc);
      input.value = String(value);
    }
    this.el<HTMLTextAreaElement>("scenario-json").value = serialize(this.editor.doc);
  }

  // -------------------------------------------------------------- run panel

  private bindRunPanel(): void {
    this.el<HTMLButtonElement>("run-a").addEventListener("click", () => void this.runTo("a"));
    this.el<HTMLButtonElement>("run-b").addEventListener("click", () => void this.runTo("b"));
    this.el<HTMLSelectElement>("layer-select").addEventListener("change", (ev) => {
      this.layer = (ev.target as HTMLSelectElement).value as typeof this.layer;
      void this.refreshFrames();
    });
    this.el<HTMLInputElement>("show-particles").addEventListener("change", (ev) => {
      this.showParticles = (ev.target as HTMLInputElement).checked;
      void this.refreshFrames();
    });
    this.el<HTMLInputElement>("scrubber").addEventListener("input", (ev) => {
      const frame = Number((ev.target as HTMLInputElement).value);
      this.compare = scrub(this.compare, frame);
      void this.refreshFrames();
    });
  }

  private setStatus(text: string): void {
    this.el("status").textContent = text;
  }

  private async runTo(slot: Slot): Promise<void> {
    try {
      this.setStatus(`submitting job to slot ${slot.toUpperCase()}...`);
      if (this.scenarioId === null) {
        const created = await this.api.createScenario(this.editor.doc);
        this.scenarioId = created.id;
      }
      const { job_id } = await this.api.submitJob(this.scenarioId);
      const final = await this.api.pollJob(job_id, (status) => {
        this.setStatus(
          `slot ${slot.toUpperCase()}: job ${job_id} ${status.status} ` +
            `(${Math.round(status.progress * 100)}%)`,
        );
      });
      if (final.status !== "done") {
        this.setStatus(`slot ${slot.toUpperCase()}: job ${final.status}: ${final.error ?? ""}`);
        return;
      }
      this.compare = pin(this.compare, slot, final);
      this.frameCache.clear();
      const scrubber = this.el<HTMLInputElement>("scrubber");
      scrubber.max = String(maxLinkedFrame(this.compare));
      scrubber.value = String(this.compare.frame);
      this.setStatus(`slot ${slot.toUpperCase()}: job ${job_id} done`);
      await this.refreshFrames();
    } catch (err) {
      if (err instanceof ApiError) this.setStatus(`[${err.status}] ${err.message}`);
      else this.setStatus(`request failed: ${(err as Error).message}`);
    }
  }

  private async fetchFrame(job: JobStatus, index: number): Promise<FrameResponse | null> {
    const frame = frameIdAt(job, index);
    if (frame === null) return null;
    const key = `${job.id}:${frame}:${this.layer}`;
    const cached = this.frameCache.get(key);
    if (cached) return cached;
    try {
      const layers: LayerName[] = [this.layer, "particles"];
      const res = await this.api.getFrame(job.id, frame, layers);
      this.frameCache.set(key, res);
      return res;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.setStatus(`frame ${frame} not written yet`);
        return null;
      }
      throw err;
    }
  }

  private async refreshFrames(): Promise<void> {
    for (const slot of ["a", "b"] as Slot[]) {
      const job = this.compare[slot];
      const canvas = this.el<HTMLCanvasElement>(`view-${slot}`);
      const ctx = canvas.getContext("2d");
      if (!job || !ctx) continue;
      const frame = await this.fetchFrame(job, this.compare.frame);
      if (!frame) continue;
      this.drawHeatmap(ctx, canvas, frame);
      this.refreshReadout(slot);
    }
    const winner = lowerStressSlot(this.compare);
    this.el("winner").textContent =
      winner === null ? "" : `slot ${winner.toUpperCase()} has lower exit stress at this frame`;
  }

  private drawHeatmap(
    ctx: CanvasRenderingContext2D,
    canvas: HTMLCanvasElement,
    frame: FrameResponse,
  ): void {
    const values =
      this.layer === "velocity"
        ? speedFromVelocity(frame.layers.velocity ?? [])
        : (frame.layers[this.layer] ?? []);
    const pixels = renderScalarLayer(values, frame.grid);
    const image = new ImageData(pixels.data, pixels.width, pixels.height);
    const off = this.root.createElement("canvas");
    off.width = pixels.width;
    off.height = pixels.height;
    off.getContext("2d")?.putImageData(image, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.drawImage(off, 0, 0, canvas.width, canvas.height);

    const particles = frame.layers.particles;
    if (this.showParticles && particles) {
      const { nx, ny, dx, origin } = frame.grid;
      const sx = canvas.width / (nx * dx);
      const sy = canvas.height / (ny * dx);
      ctx.fillStyle = "rgba(20, 20, 20, 0.85)";
      for (const [x, y] of particles) {
        const px = (x - origin[0]) * sx;
        const py = canvas.height - (y - origin[1]) * sy;
        ctx.beginPath();
        ctx.arc(px, py, 2, 0, Math.PI * 2);
        ctx.fill();
      }
    }
  }

  private refreshReadout(slot: Slot): void {
    const peaks = readout(this.compare, slot);
    const fmt = (v: number | null) => (v === null ? "-" : v.toFixed(2));
    this.el(`readout-${slot}`).textContent =
      `frame ${this.compare.frame} | peak stress ${fmt(peaks.peakStress)} | ` +
      `exit-region peak ${fmt(peaks.peakExitStress)}`;
  }
}
