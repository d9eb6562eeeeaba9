/**
 * Scrubber availability logic. While a job is running the service answers
 * 409 for frames it has not written yet; the timeline tracks which indices
 * are known-good so those beyond the watermark render greyed out.
 */

import type { JobStatus } from "./types.js";

export interface TimelineState {
  /** total frames the finished job will have, best current estimate */
  expected: number;
  /** highest frame index confirmed fetchable, -1 when none */
  watermark: number;
  current: number;
}

export function timelineFor(job: JobStatus | null): TimelineState {
  const report = job?.report;
  if (report) {
    const count = report.frames.length;
    return { expected: count, watermark: count - 1, current: 0 };
  }
  // while running, estimate from progress; frames confirm themselves as
  // they are fetched
  return { expected: 0, watermark: -1, current: 0 };
}

export function isAvailable(t: TimelineState, frame: number): boolean {
  return frame >= 0 && frame <= t.watermark;
}

/** Record a successful frame fetch. */
export function confirmFrame(t: TimelineState, frame: number): TimelineState {
  return {
    ...t,
    watermark: Math.max(t.watermark, frame),
    expected: Math.max(t.expected, frame + 1),
  };
}

/** Record a 409: the frame exists in the plan but is not written yet. */
export function deferFrame(t: TimelineState, frame: number): TimelineState {
  return { ...t, expected: Math.max(t.expected, frame + 1) };
}

export function seek(t: TimelineState, frame: number): TimelineState {
  const max = Math.max(t.expected - 1, t.watermark, 0);
  return { ...t, current: Math.min(Math.max(frame, 0), max) };
}
