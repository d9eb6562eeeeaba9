import { describe, expect, it } from "vitest";

import { confirmFrame, deferFrame, isAvailable, seek, timelineFor } from "../src/timeline.js";
import type { JobStatus, RunReport } from "../src/types.js";

const finished: JobStatus = {
  id: "j",
  scenario_id: "s",
  status: "done",
  progress: 1,
  error: null,
  report: { frames: [0, 1, 2, 3, 4, 5, 6, 7] } as RunReport,
};

describe("timeline", () => {
  it("a finished job exposes every frame immediately", () => {
    const t = timelineFor(finished);
    expect(t.expected).toBe(8);
    expect(isAvailable(t, 0)).toBe(true);
    expect(isAvailable(t, 7)).toBe(true);
    expect(isAvailable(t, 8)).toBe(false);
  });

  it("a running job starts with nothing confirmed", () => {
    const t = timelineFor({ ...finished, status: "running", report: null });
    expect(t.watermark).toBe(-1);
    expect(isAvailable(t, 0)).toBe(false);
  });

  it("successful fetches raise the watermark", () => {
    let t = timelineFor(null);
    t = confirmFrame(t, 0);
    t = confirmFrame(t, 3);
    expect(isAvailable(t, 2)).toBe(true); // frames below a confirmed one count
    expect(isAvailable(t, 4)).toBe(false);
    expect(t.expected).toBe(4);
  });

  it("a not-yet-written frame extends the plan without unlocking it", () => {
    let t = confirmFrame(timelineFor(null), 2);
    t = deferFrame(t, 10); // server said the frame exists but is pending
    expect(t.expected).toBe(11);
    expect(t.watermark).toBe(2);
    expect(isAvailable(t, 10)).toBe(false); // stays greyed until confirmed
  });

  it("seek clamps into the known range", () => {
    const t = confirmFrame(timelineFor(null), 5);
    expect(seek(t, 3).current).toBe(3);
    expect(seek(t, -2).current).toBe(0);
    expect(seek(t, 50).current).toBe(5);
  });
});
