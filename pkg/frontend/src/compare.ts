/**
 * A/B comparison state: two pinned jobs, one linked scrubber.
 *
 * Peak-stress readouts come straight out of each job's server report
 * (series.peak_stress / series.peak_exit_stress, one entry per stored
 * frame); the client never recomputes them.
 */

import type { JobStatus } from "./types.js";

export type Slot = "a" | "b";

export interface CompareState {
  a: JobStatus | null;
  b: JobStatus | null;
  frame: number; // linked scrubber index
}

export function emptyCompare(): CompareState {
  return { a: null, b: null, frame: 0 };
}

export function pin(state: CompareState, slot: Slot, job: JobStatus): CompareState {
  const next = { ...state, [slot]: job };
  return { ...next, frame: clampFrame(next, next.frame) };
}

export function framesAvailable(job: JobStatus | null): number {
  return job?.report?.frames.length ?? 0;
}

/**
 * Server-side frame id for a scrubber index. The report lists the snapshot
 * ids that exist on disk; with snapshot_every > 1 they are strided, so the
 * linked scrubber walks indices and looks the id up per job.
 */
export function frameIdAt(job: JobStatus | null, index: number): number | null {
  return job?.report?.frames[index] ?? null;
}

/** The linked scrubber can only reach frames both pinned jobs have. */
export function maxLinkedFrame(state: CompareState): number {
  const counts = [state.a, state.b]
    .filter((j) => j !== null)
    .map((j) => framesAvailable(j));
  if (counts.length === 0) return 0;
  return Math.max(Math.min(...counts) - 1, 0);
}

export function clampFrame(state: CompareState, frame: number): number {
  return Math.min(Math.max(frame, 0), maxLinkedFrame(state));
}

export function scrub(state: CompareState, frame: number): CompareState {
  return { ...state, frame: clampFrame(state, frame) };
}

export interface PeakReadout {
  peakStress: number | null;
  peakExitStress: number | null;
}

/** Server-reported peaks for the slot at the current linked frame. */
export function readout(state: CompareState, slot: Slot): PeakReadout {
  const job = state[slot];
  const series = job?.report?.series;
  if (!series) return { peakStress: null, peakExitStress: null };
  const i = state.frame;
  return {
    peakStress: series.peak_stress[i] ?? null,
    peakExitStress: series.peak_exit_stress[i] ?? null,
  };
}

/** Which slot has the lower peak exit stress at the current frame. */
export function lowerStressSlot(state: CompareState): Slot | null {
  const a = readout(state, "a").peakExitStress;
  const b = readout(state, "b").peakExitStress;
  if (a === null || b === null || a === b) return null;
  return a < b ? "a" : "b";
}
