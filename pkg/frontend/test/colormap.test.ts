import { describe, expect, it } from "vitest";

import { COLOR_STOPS, colormapRgb, legendGradient, valueToRgb } from "../src/colormap.js";

// The service renders its own field maps with this exact five-stop diverging
// ramp; the studio must match it so the two views of one run agree.
const SERVER_STOPS: [number, [number, number, number]][] = [
  [0.0, [0.02, 0.188, 0.38]],
  [0.25, [0.42, 0.682, 0.839]],
  [0.5, [0.969, 0.969, 0.969]],
  [0.75, [0.839, 0.376, 0.302]],
  [1.0, [0.404, 0.0, 0.122]],
];

describe("colormap", () => {
  it("uses the same stops as the server-side renderer", () => {
    expect(COLOR_STOPS.map(([t, c]) => [t, [...c]])).toEqual(SERVER_STOPS);
  });

  it("hits every stop exactly", () => {
    for (const [t, rgb] of SERVER_STOPS) {
      const got = colormapRgb(t);
      for (let c = 0; c < 3; c++) expect(got[c]).toBeCloseTo(rgb[c], 12);
    }
  });

  it("interpolates linearly between stops", () => {
    const mid = colormapRgb(0.125); // halfway between stop 0 and stop 1
    expect(mid[0]).toBeCloseTo((0.02 + 0.42) / 2, 12);
    expect(mid[1]).toBeCloseTo((0.188 + 0.682) / 2, 12);
    expect(mid[2]).toBeCloseTo((0.38 + 0.839) / 2, 12);
  });

  it("clamps out-of-range inputs to the end colors", () => {
    expect(colormapRgb(-5)).toEqual(colormapRgb(0));
    expect(colormapRgb(99)).toEqual(colormapRgb(1));
  });

  it("maps values symmetrically about zero", () => {
    expect(valueToRgb(0, 3)).toEqual(colormapRgb(0.5));
    expect(valueToRgb(3, 3)).toEqual(colormapRgb(1));
    expect(valueToRgb(-3, 3)).toEqual(colormapRgb(0));
    expect(valueToRgb(1, 0)).toEqual(colormapRgb(0.5)); // degenerate scale
  });

  it("emits a css gradient covering all stops in order", () => {
    const css = legendGradient();
    expect(css.startsWith("linear-gradient(to right,")).toBe(true);
    expect(css).toContain("rgb(5,48,97) 0%");
    expect(css).toContain("rgb(247,247,247) 50%");
    expect(css).toContain("rgb(103,0,31) 100%");
  });
});
